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

// Grounding and episode tables for a few reference agents.

#include <iostream>

#include "guiagent.hpp"

using namespace guiagent;

int main() {
    auto suite = fixtures::grounding_suite();
    fixtures::GroundingOracle oracle(suite);
    ConstantAgent corner(Action::tap({0, 0}), "corner");
    RandomAgent random(1);
    for (AgentBackend* agent : std::initializer_list<AgentBackend*>{&oracle, &corner, &random}) {
        std::cout << render_table(eval_grounding(suite, *agent)) << "\n";
    }

    std::vector<EpisodeResult> scripted, rnd;
    for (const auto& app : mockenv::apps::all()) {
        for (const auto& task : app.tasks) {
            mockenv::Environment env(app);
            ScriptedAgent agent(mockenv::oracle_agent(app, task.id));
            scripted.push_back(run_episode(env, task.id, agent));
            rnd.push_back(run_episode(env, task.id, random));
        }
    }
    std::cout << render_table(success_rate(scripted, "oracle")) << "\n" << render_table(success_rate(rnd, "random"));
}
