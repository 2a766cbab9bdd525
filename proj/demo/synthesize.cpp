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

// Runs both synthesis stages over the bundled corpus with the stub client and
// prints what came out.

#include <iostream>

#include "guiagent.hpp"

using namespace guiagent;

int main() {
    std::vector<Trajectory> trajs;
    for (const auto& raw : fixtures::bundled_corpus()) trajs.push_back(decode_trajectory(raw));
    auto stage1 = fixtures::bundled_stage1();

    StubClient stub(StubClient::Mode::templated, TemplateSet::builtin().stub_templates());
    Manifest m;
    m.threads = 4;
    auto out = run_synthesis(m, stage1, trajs, stub);

    std::map<std::string, int> counts;
    for (const auto& s : out.samples) ++counts[std::string(to_string(s.kind))];
    std::cout << trajs.size() << " trajectories, " << stage1.size() << " stage-1 records\n";
    for (const auto& [k, n] : counts) std::cout << "  " << k << ": " << n << "\n";
    std::cout << "  skipped/flagged: " << out.log.size() << "\n\n";

    for (const auto& s : out.samples) {
        if (s.kind == TaskKind::stage2_step && s.source.step == 1) {
            std::cout << "sample " << s.source.trajectory << " step 1, assistant turn:\n"
                      << s.messages.back().content << "\n";
            break;
        }
    }
}
