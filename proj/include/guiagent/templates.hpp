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

#include <map>
#include <string>
#include <vector>

#include "guiagent/chat.hpp"
#include "guiagent/error.hpp"
#include "guiagent/json.hpp"

namespace guiagent {

/// One synthesis prompt. The system message carries a `task: <tag>` line and
/// the user message lays its inputs out as "## slot" sections, which is what
/// the stub client keys on. `stub` is the response template the stub fills in.
struct PromptTemplate {
    std::string system;
    std::string preface;
    std::vector<std::string> slots;
    std::string stub;
};

struct TemplateSet {
    std::string version;
    std::map<std::string, PromptTemplate> prompts;
    // stage-1 instruction rewrites per record kind; {label} and {instruction} are filled in
    std::map<std::string, std::vector<std::string>> instructions;

    const PromptTemplate& prompt(std::string_view tag) const {
        auto it = prompts.find(std::string(tag));
        if (it == prompts.end()) {
            throw Error(ErrorCode::lookup, "no prompt template '" + std::string(tag) + "' in set " + version,
                        std::string(tag));
        }
        return it->second;
    }

    std::vector<ChatMessage> render(std::string_view tag, const std::map<std::string, std::string>& values) const {
        const PromptTemplate& p = prompt(tag);
        std::string system = p.system + "\ntask: " + std::string(tag) + "\ntemplates: " + version;
        std::string user = p.preface;
        for (const auto& slot : p.slots) {
            auto it = values.find(slot);
            if (it == values.end()) {
                throw Error(ErrorCode::synthesis, "prompt '" + std::string(tag) + "' is missing slot '" + slot + "'",
                            slot);
            }
            user += "\n\n## " + slot + "\n" + it->second;
        }
        return {{"system", std::move(system)}, {"user", std::move(user)}};
    }

    std::map<std::string, std::string> stub_templates() const {
        std::map<std::string, std::string> out;
        for (const auto& [tag, p] : prompts) {
            if (!p.stub.empty()) out[tag] = p.stub;
        }
        return out;
    }

    /// Built-in set "v1". Wording is ours.
    static TemplateSet builtin() {
        TemplateSet t;
        t.version = "v1";
        t.prompts["describe"] = {
            "You describe mobile and desktop screens for an agent that cannot see them. Mention every visible "
            "element, its role, its label and its position on the 0-1000 grid.",
            "Describe this screen in detail.",
            {"labels", "scene"},
            "Screen showing {labels}.\n{scene}"};
        t.prompts["reflection"] = {
            "You check whether the last GUI action had the intended effect. Compare what was expected with the "
            "screen as it is now and say what went right or wrong.",
            "Reflect on the previous step.",
            {"previous_expectation", "observation"},
            "Expected: {previous_expectation|first_line} Now: {observation|first_line}"};
        t.prompts["summary"] = {
            "You summarize the progress of a GUI task from the recent steps and the current screen. Do not propose "
            "the next action.",
            "Summarize what has been done so far.",
            {"goal", "history", "observation"},
            "Working on: {goal}. Recent steps: {history|first_line}. Current screen: {observation|first_line}"};
        t.prompts["planning"] = {
            "You state the next sub-goal of a GUI task. The action that was actually taken is given; the plan must "
            "lead to it.",
            "State the next sub-goal.",
            {"goal", "summary", "observation", "action"},
            "Next sub-goal toward {goal}: perform {action|first_line}"};
        t.prompts["tactical"] = {
            "You explain the concrete action for the current step: which element it targets and where it lands.",
            "Explain the action.",
            {"reflection", "summary", "planning", "action"},
            "{planning|first_line} Issue {action|first_line}."};
        t.prompts["expectation"] = {
            "You predict what the screen should look like right after the given action. You only know the current "
            "screen and the reasoning so far.",
            "Predict the result of the action.",
            {"observation", "summary", "planning", "tactical", "action"},
            "After {action|first_line}, the screen should move on from: {observation|first_line}"};
        t.prompts["refine"] = {
            "You rewrite an annotation answer to be clear and fluent without changing its meaning. Keep every "
            "<ref ...>...</ref> marker and its coordinates exactly as given.",
            "",
            {},
            "{input}"};
        t.prompts["next_state"] = {
            "You predict the description of the next screen from the current screen and an action.", "", {}, ""};
        t.instructions["grounding"] = {
            "Locate the \"{label}\" element on the screen.",
            "Where is \"{label}\"? Answer with its region.",
            "Find the element labeled \"{label}\".",
        };
        t.instructions["qa"] = {
            "Answer this question about the screen: {instruction}",
            "Look at the screen and answer: {instruction}",
        };
        t.instructions["understanding"] = {
            "Describe what this screen is for and its main elements.",
            "Summarize the content of this screen.",
        };
        return t;
    }
};

inline Json to_json(const TemplateSet& t) {
    Json prompts = Json::object();
    for (const auto& [tag, p] : t.prompts) {
        Json j = Json::object();
        j["system"] = p.system;
        j["preface"] = p.preface;
        j["slots"] = p.slots;
        j["stub"] = p.stub;
        prompts[tag] = j;
    }
    Json instr = Json::object();
    for (const auto& [k, v] : t.instructions) instr[k] = v;
    Json j = Json::object();
    j["version"] = t.version;
    j["prompts"] = prompts;
    j["instructions"] = instr;
    return j;
}

inline TemplateSet template_set_from_json(const Json& j) {
    detail::require_object(j, "templates");
    TemplateSet t;
    t.version = detail::require_string(j, "version", "templates");
    try {
        for (const auto& [tag, pj] : detail::require_object(detail::require_key(j, "prompts", "templates"), "prompts").items()) {
            PromptTemplate p;
            p.system = detail::require_string(pj, "system", "prompt");
            p.preface = detail::optional_string(pj, "preface", "prompt");
            if (pj.contains("slots")) p.slots = pj["slots"].get<std::vector<std::string>>();
            p.stub = detail::optional_string(pj, "stub", "prompt");
            t.prompts[tag] = std::move(p);
        }
        if (j.contains("instructions")) {
            for (const auto& [kind, list] : j["instructions"].items()) {
                t.instructions[kind] = list.get<std::vector<std::string>>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::schema, std::string("malformed template set: ") + e.what(), "templates");
    }
    for (const char* tag : {"describe", "reflection", "summary", "planning", "tactical", "expectation", "refine"}) {
        if (!t.prompts.count(tag)) throw Error(ErrorCode::config, "template set lacks prompt '" + std::string(tag) + "'", tag);
    }
    return t;
}

}  // namespace guiagent
