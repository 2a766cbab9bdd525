// Copyright 2026 The guiagent Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Everything in one include. The HTTP client is left out; include
// guiagent/http_chat_client.hpp where a live endpoint is needed.

#include "guiagent/actions.hpp"
#include "guiagent/apps.hpp"
#include "guiagent/chat.hpp"
#include "guiagent/error.hpp"
#include "guiagent/fixtures.hpp"
#include "guiagent/geometry.hpp"
#include "guiagent/harness.hpp"
#include "guiagent/json.hpp"
#include "guiagent/mockenv.hpp"
#include "guiagent/observation.hpp"
#include "guiagent/protocol.hpp"
#include "guiagent/raa.hpp"
#include "guiagent/synthesis.hpp"
#include "guiagent/templates.hpp"
#include "guiagent/unification.hpp"
