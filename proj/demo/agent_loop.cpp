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

// One episode of the reasoning loop on the mock Contacts app, printing the
// prompt the agent sees and the structured output it answers with.

#include <iostream>

#include "guiagent.hpp"

using namespace guiagent;

int main() {
    auto app = mockenv::apps::contacts();
    mockenv::Environment env(app);
    Observation o = env.reset("create_contact");
    auto plan = mockenv::oracle_agent(app, "create_contact");

    EpisodeState state(env.task().goal, ActionSpaceConfig::mobile(), {});
    ScriptedAgent agent(plan);
    while (state.running()) {
        StepInput in = build_step_input(state, o);
        std::string text = agent.act(in);
        auto [r, a] = parse_step_output(text, state.t());
        if (state.t() == 2) {
            std::cout << "--- prompt at step 2 (" << render_step_prompt(in).size() << " messages), last turn:\n"
                      << render_step_prompt(in).back().content << "\n--- answer:\n" << text << "\n\n";
        }
        state.record(o, r, a);
        auto step = env.step(a);
        o = step.observation;
        std::cout << "t=" << state.t() - 1 << "  " << serialize_action(a) << "\n";
        if (step.done) std::cout << (step.success ? "task solved\n" : "task failed\n");
    }

    // grounded answers use inline references
    auto doc = parse_raa(R"(Tap <ref type="point" x="500" y="959">Contacts</ref> first.)");
    std::cout << "\nreferences in answer: " << raa::references(emit_raa(doc)).size()
              << ", plain text: " << raa::plain_text(doc) << "\n";
}
