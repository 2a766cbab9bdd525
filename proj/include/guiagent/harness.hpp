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

#include <algorithm>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "guiagent/chat.hpp"
#include "guiagent/mockenv.hpp"
#include "guiagent/protocol.hpp"
#include "guiagent/raa.hpp"

namespace guiagent {

// ---------------------------------------------------------------------------
// Agents

/// Maps a step input to raw model output text. Implementations must not keep
/// per-episode memory: everything they know comes through StepInput.
class AgentBackend {
public:
    virtual ~AgentBackend() = default;
    virtual std::string name() const = 0;
    virtual std::string act(const StepInput& in) = 0;
};

namespace detail {

inline ReasoningRecord scripted_reasoning(const StepInput& in, const Action& a) {
    ReasoningRecord r;
    if (in.t > 0) {
        const auto& prev = in.history.back();
        r.reflection = "The previous " + std::string(to_string(prev.action.name)) + " had the expected effect.";
    }
    r.strategic_summary = in.t == 0 ? "Starting: " + in.goal : std::to_string(in.t) + " step(s) done toward: " + in.goal;
    r.strategic_planning = "Continue with the next step of the task.";
    r.tactical = "Use " + std::string(to_string(a.name)) + ".";
    r.expectation = a.name == ActionName::set_task_status ? "The task ends." : "The screen reacts to the action.";
    return r;
}

}  // namespace detail

/// Replays a fixed action list, one per step index.
class ScriptedAgent final : public AgentBackend {
public:
    explicit ScriptedAgent(std::vector<Action> script, std::string label = "oracle")
        : script_(std::move(script)), label_(std::move(label)) {}
    std::string name() const override { return label_; }
    std::string act(const StepInput& in) override {
        Action a = in.t < script_.size() ? script_[in.t] : Action::set_task_status(TaskStatus::infeasible);
        return render_model_output(detail::scripted_reasoning(in, a), a);
    }

private:
    std::vector<Action> script_;
    std::string label_;
};

/// Uniformly random actions from the step's action space. The draw is seeded
/// from (seed, goal, t, observation id), so it is a pure function of its input.
class RandomAgent final : public AgentBackend {
public:
    explicit RandomAgent(std::uint64_t seed) : seed_(seed) {}
    std::string name() const override { return "random"; }
    std::string act(const StepInput& in) override {
        std::uint64_t h = fnv1a(in.goal, fnv1a(in.observation.id, seed_ ^ (in.t * 0x9e3779b97f4a7c15ULL)));
        std::mt19937_64 rng(h);
        std::vector<ActionName> names(in.action_space.enabled.begin(), in.action_space.enabled.end());
        ActionName n = names[std::uniform_int_distribution<std::size_t>(0, names.size() - 1)(rng)];
        std::uniform_int_distribution<int> c(0, kNormScale);
        auto pt = [&] { return NormPoint{c(rng), c(rng)}; };
        std::uniform_int_distribution<int> d(0, 3);
        Action a;
        switch (n) {
        case ActionName::tap: a = Action::tap(pt()); break;
        case ActionName::click: a = Action::click(pt()); break;
        case ActionName::hover: a = Action::hover(pt()); break;
        case ActionName::select: a = Action::select(pt()); break;
        case ActionName::swipe: a = Action::swipe(pt(), pt()); break;
        case ActionName::select_text: a = Action::select_text(pt(), pt()); break;
        case ActionName::scroll: a = Action::scroll(static_cast<Direction>(d(rng))); break;
        case ActionName::input: a = Action::input("text " + std::to_string(c(rng))); break;
        case ActionName::point_input: a = Action::point_input(pt(), "text " + std::to_string(c(rng))); break;
        case ActionName::remember: a = Action::remember("note " + std::to_string(c(rng))); break;
        case ActionName::enter: a = Action::enter(); break;
        case ActionName::home: a = Action::home(); break;
        case ActionName::back: a = Action::back(); break;
        case ActionName::set_task_status:
            a = Action::set_task_status(static_cast<TaskStatus>(std::uniform_int_distribution<int>(0, 2)(rng)));
            break;
        }
        return render_model_output(detail::scripted_reasoning(in, a), a);
    }

private:
    std::uint64_t seed_;
};

/// Always the same action (e.g. a tap on the top-left corner).
class ConstantAgent final : public AgentBackend {
public:
    explicit ConstantAgent(Action a, std::string label = "constant") : a_(std::move(a)), label_(std::move(label)) {}
    std::string name() const override { return label_; }
    std::string act(const StepInput& in) override { return render_model_output(detail::scripted_reasoning(in, a_), a_); }

private:
    Action a_;
    std::string label_;
};

/// Output that never parses.
class MalformedAgent final : public AgentBackend {
public:
    std::string name() const override { return "malformed"; }
    std::string act(const StepInput&) override { return "I am not sure what to do here."; }
};

/// Prompts a chat backend with the rendered step prompt.
class ChatAgent final : public AgentBackend {
public:
    explicit ChatAgent(ChatClient& client, DecodeParams decode = {}) : client_(client), decode_(decode) {}
    std::string name() const override { return "chat:" + client_.info().model; }
    std::string act(const StepInput& in) override { return client_.complete(render_step_prompt(in), decode_); }

private:
    ChatClient& client_;
    DecodeParams decode_;
};

// ---------------------------------------------------------------------------
// Grounding

inline constexpr std::array<std::string_view, 3> kPlatforms = {"mobile", "desktop", "web"};
inline constexpr std::array<std::string_view, 2> kElementTypes = {"text", "icon"};

struct GroundingCase {
    std::string id;
    std::string platform;      // mobile | desktop | web
    std::string element_type;  // text | icon
    Observation observation;
    std::string instruction;
    NormBox gold;
};

inline void check_case(const GroundingCase& c) {
    if (c.id.empty()) throw Error(ErrorCode::validation, "grounding case without id", "id");
    if (std::find(kPlatforms.begin(), kPlatforms.end(), c.platform) == kPlatforms.end()) {
        throw Error(ErrorCode::validation, "case " + c.id + ": unknown platform '" + c.platform + "'", "platform");
    }
    if (std::find(kElementTypes.begin(), kElementTypes.end(), c.element_type) == kElementTypes.end()) {
        throw Error(ErrorCode::validation, "case " + c.id + ": unknown element type '" + c.element_type + "'",
                    "element_type");
    }
    if (detail::blank(c.instruction)) throw Error(ErrorCode::validation, "case " + c.id + ": empty instruction");
    check_box(c.gold);
    check_observation(c.observation);
}

inline Json to_json(const GroundingCase& c) {
    Json j = Json::object();
    j["id"] = c.id;
    j["platform"] = c.platform;
    j["element_type"] = c.element_type;
    j["instruction"] = c.instruction;
    j["gold"] = to_json(c.gold);
    j["observation"] = to_json(c.observation);
    return j;
}

inline GroundingCase grounding_case_from_json(const Json& j) {
    detail::require_object(j, "case");
    GroundingCase c;
    c.id = detail::require_string(j, "id", "case");
    c.platform = detail::require_string(j, "platform", "case");
    c.element_type = detail::require_string(j, "element_type", "case");
    c.instruction = detail::require_string(j, "instruction", "case");
    c.gold = box_from_json(detail::require_key(j, "gold", "case"), ParseMode::strict, "case.gold");
    c.observation = observation_from_json(detail::require_key(j, "observation", "case"));
    check_case(c);
    return c;
}

inline std::vector<GroundingCase> read_grounding_suite(std::istream& in) {
    std::vector<GroundingCase> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (detail::blank(line)) continue;
        try {
            out.push_back(grounding_case_from_json(detail::parse_json_text(line, "case")));
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(n) + ": " + e.what(), e.subject());
        }
    }
    return out;
}

/// What a grounding agent sees: the case screen as step 0 of an episode
/// whose goal is the instruction.
inline StepInput grounding_input(const GroundingCase& c) {
    StepInput in;
    in.goal = c.instruction;
    in.t = 0;
    in.observation = c.observation;
    in.action_space = ActionSpaceConfig::for_platform(c.platform);
    return in;
}

struct PointAnswer {
    std::optional<NormPoint> point;
    std::string miss_reason;
};

/// Reads a grounding answer. Accepted forms: a tap/click envelope (bare or
/// in an Action section), or an RAA reference. Box answers count as their
/// center point.
inline PointAnswer extract_grounding_point(std::string_view text) {
    auto from_action = [](const Action& a) -> PointAnswer {
        if (a.name == ActionName::tap || a.name == ActionName::click) return {a.target_point(), {}};
        return {std::nullopt, "answer is a " + std::string(to_string(a.name)) + ", not a point action"};
    };
    std::string trimmed = detail::trim(text);
    try {
        return from_action(parse_action(trimmed));
    } catch (const Error&) {
    }
    // an Action section anywhere in a longer answer; other sections are ignored
    for (std::size_t pos = 0; pos < trimmed.size();) {
        auto eol = trimmed.find('\n', pos);
        auto line = std::string_view(trimmed).substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        if (eol == std::string::npos) break;
        pos = eol + 1;
        if (detail::header_of(line, ParseMode::lenient) != Section::action) continue;
        std::string rest = trimmed.substr(pos);
        auto next = rest.find("\n#");
        if (next != std::string::npos) rest.resize(next);
        try {
            return from_action(parse_action(detail::extract_envelope(rest, ParseMode::lenient)));
        } catch (const Error&) {
        }
        break;
    }
    auto refs = raa::references(trimmed, ParseMode::lenient);
    if (!refs.empty()) {
        if (auto* p = std::get_if<NormPoint>(&refs.front().target)) return {*p, {}};
        return {std::get<NormBox>(refs.front().target).center(), {}};
    }
    try {
        Json j = Json::parse(trimmed);
        if (j.is_object() && j.contains("x1")) return {box_from_json(j, ParseMode::lenient).center(), {}};
        if (j.is_object() && j.contains("x")) return {point_from_json(j, ParseMode::lenient), {}};
    } catch (const std::exception&) {
    }
    return {std::nullopt, "unparseable answer"};
}

struct Cell {
    std::size_t hits = 0;
    std::size_t total = 0;
    std::optional<double> accuracy() const {
        if (total == 0) return std::nullopt;
        return static_cast<double>(hits) / static_cast<double>(total);
    }
};

struct GroundingMiss {
    std::string case_id;
    std::string reason;
};

/// Accuracy per (platform, element type) plus the case-weighted average.
/// Adding results in any order gives the same report.
struct GroundingReport {
    std::string agent;
    std::map<std::pair<std::string, std::string>, Cell> cells;
    std::vector<GroundingMiss> misses;

    void add(const GroundingCase& c, bool hit, std::string reason = {}) {
        Cell& cell = cells[{c.platform, c.element_type}];
        ++cell.total;
        if (hit) {
            ++cell.hits;
        } else {
            auto pos = std::lower_bound(misses.begin(), misses.end(), c.id,
                                        [](const GroundingMiss& m, const std::string& id) { return m.case_id < id; });
            misses.insert(pos, {c.id, std::move(reason)});
        }
    }

    Cell cell(std::string_view platform, std::string_view type) const {
        auto it = cells.find({std::string(platform), std::string(type)});
        return it == cells.end() ? Cell{} : it->second;
    }

    Cell overall() const {
        Cell all;
        for (const auto& [k, c] : cells) {
            all.hits += c.hits;
            all.total += c.total;
        }
        return all;
    }
};

inline GroundingReport eval_grounding(std::span<const GroundingCase> cases, AgentBackend& agent) {
    if (cases.empty()) throw Error(ErrorCode::validation, "grounding suite is empty");
    GroundingReport report;
    report.agent = agent.name();
    for (const auto& c : cases) {
        std::string out;
        try {
            out = agent.act(grounding_input(c));
        } catch (const Error& e) {
            if (!e.retryable()) throw;
            report.add(c, false, std::string("backend failure: ") + e.what());
            continue;
        }
        PointAnswer ans = extract_grounding_point(out);
        if (!ans.point) {
            report.add(c, false, ans.miss_reason);
        } else if (!ans.point->valid()) {
            report.add(c, false, "point outside the grid");
        } else if (point_in_box(*ans.point, c.gold)) {
            report.add(c, true);
        } else {
            report.add(c, false, "point outside the gold box");
        }
    }
    return report;
}

namespace detail {

inline Json rate_json(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

inline std::string rate_text(std::optional<double> v, int precision = 1, bool percent = true) {
    if (!v) return "-";
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << (percent ? *v * 100.0 : *v);
    return os.str();
}

inline std::string capitalize(std::string_view s) {
    std::string out(s);
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
}

inline std::string render_rows(const std::vector<std::vector<std::string>>& rows, std::size_t header_rows = 1) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        width.resize(std::max(width.size(), r.size()));
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    std::string out;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        std::string line;
        for (std::size_t i = 0; i < rows[k].size(); ++i) {
            if (i) line += " | ";
            line += rows[k][i] + std::string(width[i] - rows[k][i].size(), ' ');
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
        if (k + 1 == header_rows) {
            std::string rule;
            for (std::size_t i = 0; i < width.size(); ++i) {
                if (i) rule += "-+-";
                rule += std::string(width[i], '-');
            }
            out += rule + "\n";
        }
    }
    return out;
}

}  // namespace detail

/// {"agent", "cells": {"mobile": {"text": {...}, "icon": {...}}, ...}, "avg", "misses"}
inline Json to_json(const GroundingReport& r) {
    Json cells = Json::object();
    for (auto p : kPlatforms) {
        Json row = Json::object();
        for (auto t : kElementTypes) {
            Cell c = r.cell(p, t);
            Json cj = Json::object();
            cj["hits"] = c.hits;
            cj["total"] = c.total;
            cj["accuracy"] = detail::rate_json(c.accuracy());
            row[std::string(t)] = cj;
        }
        cells[std::string(p)] = row;
    }
    Cell all = r.overall();
    Json avg = Json::object();
    avg["hits"] = all.hits;
    avg["total"] = all.total;
    avg["accuracy"] = detail::rate_json(all.accuracy());
    Json misses = Json::array();
    for (const auto& m : r.misses) misses.push_back({{"case", m.case_id}, {"reason", m.reason}});
    Json j = Json::object();
    j["agent"] = r.agent;
    j["cells"] = cells;
    j["avg"] = avg;
    j["misses"] = misses;
    return j;
}

/// Two header rows: platforms spanning Text/Icon, then Avg.
inline std::string render_table(const GroundingReport& r) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head = {"Agent"};
    std::vector<std::string> sub = {""};
    std::vector<std::string> vals = {r.agent};
    for (auto p : kPlatforms) {
        for (auto t : kElementTypes) {
            head.push_back(t == "text" ? detail::capitalize(p) : "");
            sub.push_back(detail::capitalize(t));
            vals.push_back(detail::rate_text(r.cell(p, t).accuracy()));
        }
    }
    head.push_back("Avg.");
    sub.push_back("");
    vals.push_back(detail::rate_text(r.overall().accuracy()));
    rows = {head, sub, vals};
    return detail::render_rows(rows, 2);
}

// ---------------------------------------------------------------------------
// Episodes

enum class ParseFailurePolicy { abort_episode, skip_step };

struct EpisodeResult {
    std::string app;
    std::string task_id;
    std::string difficulty;
    bool success = false;
    int steps = 0;       // agent calls consumed
    std::string status;  // complete | infeasible | exhausted | aborted
    std::vector<std::string> log;
};

inline Json to_json(const EpisodeResult& r) {
    Json j = Json::object();
    j["app"] = r.app;
    j["task"] = r.task_id;
    j["difficulty"] = r.difficulty;
    j["success"] = r.success;
    j["steps"] = r.steps;
    j["status"] = r.status;
    j["log"] = r.log;
    return j;
}

struct EpisodeConfig {
    int budget = 30;
    int window = 2;
    ParseFailurePolicy on_parse_failure = ParseFailurePolicy::abort_episode;
};

/// observe -> act -> parse -> record -> step, until the environment reports
/// done, the episode turns terminal, or the budget runs out. Never throws
/// for agent misbehavior; that only affects the result.
inline EpisodeResult run_episode(mockenv::Environment& env, std::string_view task_id, AgentBackend& agent,
                                 const EpisodeConfig& cfg = {}) {
    Observation o = env.reset(task_id);
    const mockenv::Task& task = env.task();
    EpisodeResult res;
    res.app = env.script().name;
    res.task_id = task.id;
    res.difficulty = task.difficulty;

    EpisodeOptions eo;
    eo.window_size = cfg.window;
    eo.max_steps = cfg.budget;
    eo.describe_history = false;
    EpisodeState state(task.goal, ActionSpaceConfig::for_platform(env.script().platform), eo);

    while (state.running() && res.steps < cfg.budget) {
        StepInput in = build_step_input(state, o);
        ++res.steps;
        std::string text;
        std::optional<std::pair<ReasoningRecord, Action>> parsed;
        try {
            text = agent.act(in);
            parsed = parse_step_output(text, state.t(), ParseMode::lenient);
            require_valid(parsed->second, state.action_space());
        } catch (const Error& e) {
            res.log.push_back("step " + std::to_string(res.steps - 1) + ": " + e.what());
            if (cfg.on_parse_failure == ParseFailurePolicy::abort_episode || e.retryable()) {
                res.status = "aborted";
                return res;
            }
            continue;
        }
        state.record(o, parsed->first, parsed->second);
        auto step = env.step(parsed->second);
        o = step.observation;
        if (step.done) {
            res.success = step.success;
            break;
        }
    }
    res.status = state.running() ? "exhausted" : std::string(to_string(state.status()));
    return res;
}

/// Success rates per difficulty plus overall. A group without results is
/// absent (nullopt), not zero.
struct SuccessTable {
    std::string agent;
    std::map<std::string, Cell> groups;  // easy | middle | hard
    Cell overall;

    std::optional<double> rate(std::string_view group) const {
        auto it = groups.find(std::string(group));
        return it == groups.end() ? std::nullopt : it->second.accuracy();
    }
};

inline constexpr std::array<std::string_view, 3> kDifficulties = {"easy", "middle", "hard"};

inline SuccessTable success_rate(std::span<const EpisodeResult> results, std::string agent = {}) {
    SuccessTable t;
    t.agent = std::move(agent);
    for (const auto& r : results) {
        ++t.overall.total;
        if (r.success) ++t.overall.hits;
        if (std::find(kDifficulties.begin(), kDifficulties.end(), r.difficulty) == kDifficulties.end()) continue;
        Cell& c = t.groups[r.difficulty];
        ++c.total;
        if (r.success) ++c.hits;
    }
    return t;
}

inline Json to_json(const SuccessTable& t) {
    Json j = Json::object();
    j["agent"] = t.agent;
    for (auto d : kDifficulties) {
        auto it = t.groups.find(std::string(d));
        if (it == t.groups.end()) {
            j[std::string(d)] = nullptr;
            continue;
        }
        Json g = Json::object();
        g["successes"] = it->second.hits;
        g["total"] = it->second.total;
        g["rate"] = detail::rate_json(it->second.accuracy());
        j[std::string(d)] = g;
    }
    Json all = Json::object();
    all["successes"] = t.overall.hits;
    all["total"] = t.overall.total;
    all["rate"] = detail::rate_json(t.overall.accuracy());
    j["overall"] = all;
    return j;
}

inline std::string render_table(const SuccessTable& t) {
    std::vector<std::string> head = {"Agent", "Easy", "Middle", "Hard", "Overall"};
    std::vector<std::string> vals = {t.agent};
    for (auto d : kDifficulties) vals.push_back(detail::rate_text(t.rate(d), 2, false));
    vals.push_back(detail::rate_text(t.overall.accuracy(), 2, false));
    return detail::render_rows({head, vals});
}

}  // namespace guiagent
