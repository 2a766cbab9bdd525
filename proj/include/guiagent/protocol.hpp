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
#include <array>
#include <cctype>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guiagent/actions.hpp"
#include "guiagent/chat.hpp"
#include "guiagent/error.hpp"
#include "guiagent/json.hpp"
#include "guiagent/observation.hpp"

/// Agent-environment protocol: episode state, the windowed history, the
/// structured model-output format and prompt assembly.
///
/// Each step's model output is a sequence of labeled sections followed by one
/// function call:
///
///     ### Reflection      (absent at t = 0, mandatory afterwards)
///     ### Summary         strategic layer: progress so far
///     ### Planning        strategic layer: next sub-goal
///     ### Tactical        concrete action choice and grounding
///     ### Expectation     predicted outcome, checked by the next reflection
///     ### Action
///     {"name":"tap","arguments":{"point":{"x":500,"y":500}}}
namespace guiagent {

enum class EpisodeStatus { running, complete, infeasible, exhausted };

constexpr std::string_view to_string(EpisodeStatus s) noexcept {
    switch (s) {
    case EpisodeStatus::running: return "running";
    case EpisodeStatus::complete: return "complete";
    case EpisodeStatus::infeasible: return "infeasible";
    case EpisodeStatus::exhausted: return "exhausted";
    }
    return "?";
}

struct ReasoningRecord {
    std::optional<std::string> reflection;
    std::string strategic_summary;
    std::string strategic_planning;
    std::string tactical;
    std::string expectation;

    friend bool operator==(const ReasoningRecord&, const ReasoningRecord&) = default;
};

struct Step {
    Observation observation;
    ReasoningRecord reasoning;
    Action action;
};

struct EpisodeOptions {
    int window_size = 2;
    int max_steps = 30;
    // Carry history observations as their text descriptions.
    bool describe_history = true;
};

struct HistoryEntry {
    std::size_t t = 0;
    Observation observation;
    std::string observation_text;
    ReasoningRecord reasoning;
    Action action;
};

struct StepInput {
    std::string goal;
    std::size_t t = 0;
    Observation observation;
    std::vector<HistoryEntry> history;  // oldest first, at most window_size entries
    ActionSpaceConfig action_space;
};

namespace detail {

inline std::string trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline bool blank(std::string_view s) { return trim(s).empty(); }

}  // namespace detail

inline void check_reasoning(const ReasoningRecord& r, std::size_t t) {
    if (t == 0 && r.reflection) {
        throw Error(ErrorCode::protocol, "reflection present at the first step", "reflection");
    }
    if (t > 0 && (!r.reflection || detail::blank(*r.reflection))) {
        throw Error(ErrorCode::protocol, "step " + std::to_string(t) + " needs a non-empty reflection", "reflection");
    }
    if (detail::blank(r.expectation)) throw Error(ErrorCode::protocol, "expectation is empty", "expectation");
}

/// Single-owner value holding one episode. Once the status leaves
/// `running`, every mutating call throws and leaves the state untouched.
class EpisodeState {
public:
    EpisodeState(std::string goal, ActionSpaceConfig config, EpisodeOptions options = {})
        : goal_(std::move(goal)), config_(std::move(config)), options_(options) {
        if (detail::blank(goal_)) throw Error(ErrorCode::validation, "episode goal is empty", "goal");
        if (options_.window_size < 1) throw Error(ErrorCode::validation, "window size must be >= 1", "window_size");
        if (options_.max_steps < 0) throw Error(ErrorCode::validation, "step budget must be >= 0", "max_steps");
        check_config(config_);
        if (options_.max_steps == 0) status_ = EpisodeStatus::exhausted;
    }

    const std::string& goal() const noexcept { return goal_; }
    int window_size() const noexcept { return options_.window_size; }
    int max_steps() const noexcept { return options_.max_steps; }
    const EpisodeOptions& options() const noexcept { return options_; }
    const ActionSpaceConfig& action_space() const noexcept { return config_; }
    const std::vector<Step>& steps() const noexcept { return steps_; }
    std::size_t t() const noexcept { return steps_.size(); }
    EpisodeStatus status() const noexcept { return status_; }
    bool running() const noexcept { return status_ == EpisodeStatus::running; }

    /// The last min(t, n) steps, oldest first.
    std::span<const Step> window() const {
        std::size_t n = std::min<std::size_t>(steps_.size(), static_cast<std::size_t>(options_.window_size));
        return std::span<const Step>(steps_).subspan(steps_.size() - n, n);
    }

    void record(Observation o, ReasoningRecord r, Action a) {
        require_running();
        check_observation(o);
        for (const auto& s : steps_) {
            if (s.observation.id == o.id) {
                throw Error(ErrorCode::validation, "observation id '" + o.id + "' already used in this episode", "id");
            }
        }
        check_reasoning(r, steps_.size());
        require_valid(a, config_);

        steps_.push_back({std::move(o), std::move(r), a});
        if (const auto* s = std::get_if<StatusArgs>(&a.args)) {
            if (s->status == TaskStatus::complete) status_ = EpisodeStatus::complete;
            if (s->status == TaskStatus::infeasible) status_ = EpisodeStatus::infeasible;
        }
        if (status_ == EpisodeStatus::running && steps_.size() >= static_cast<std::size_t>(options_.max_steps)) {
            status_ = EpisodeStatus::exhausted;
        }
    }

    void require_running() const {
        if (!running()) {
            throw Error(ErrorCode::state, "episode is " + std::string(to_string(status_)), "status");
        }
    }

private:
    std::string goal_;
    ActionSpaceConfig config_;
    EpisodeOptions options_;
    std::vector<Step> steps_;
    EpisodeStatus status_ = EpisodeStatus::running;
};

inline EpisodeState new_episode(std::string goal, int window_size, ActionSpaceConfig cfg,
                                 EpisodeOptions options = {}) {
    options.window_size = window_size;
    return EpisodeState(std::move(goal), std::move(cfg), options);
}

inline EpisodeState record_step(EpisodeState state, Observation o, ReasoningRecord r, Action a) {
    state.record(std::move(o), std::move(r), std::move(a));
    return state;
}

inline std::string history_text(const Observation& o, bool describe) {
    if (describe && o.description && !detail::blank(*o.description)) return *o.description;
    return render_observation(o);
}

inline StepInput build_step_input(const EpisodeState& state, Observation current) {
    state.require_running();
    StepInput in;
    in.goal = state.goal();
    in.t = state.t();
    in.observation = std::move(current);
    in.action_space = state.action_space();
    auto win = state.window();
    std::size_t first = state.t() - win.size();
    for (std::size_t k = 0; k < win.size(); ++k) {
        const Step& s = win[k];
        in.history.push_back({first + k, s.observation, history_text(s.observation, state.options().describe_history),
                              s.reasoning, s.action});
    }
    return in;
}

// ---------------------------------------------------------------------------
// Structured output

enum class Section { reflection, summary, planning, tactical, expectation, action };

inline constexpr std::array<std::pair<Section, std::string_view>, 6> kSections = {{
    {Section::reflection, "Reflection"},
    {Section::summary, "Summary"},
    {Section::planning, "Planning"},
    {Section::tactical, "Tactical"},
    {Section::expectation, "Expectation"},
    {Section::action, "Action"},
}};

namespace detail {

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Strict: exactly "### Label". Lenient: 1-6 '#', any case, optional ':'.
inline std::optional<Section> header_of(std::string_view line, ParseMode mode) {
    if (mode == ParseMode::strict) {
        if (!line.starts_with("### ")) return std::nullopt;
        auto label = line.substr(4);
        for (const auto& [sec, name] : kSections) {
            if (label == name) return sec;
        }
        return std::nullopt;
    }
    std::string t = trim(line);
    std::size_t hashes = 0;
    while (hashes < t.size() && t[hashes] == '#') ++hashes;
    if (hashes == 0 || hashes > 6) return std::nullopt;
    std::string label = trim(std::string_view(t).substr(hashes));
    if (!label.empty() && label.back() == ':') label.pop_back();
    label = lower(trim(label));
    for (const auto& [sec, name] : kSections) {
        if (label == lower(name)) return sec;
    }
    return std::nullopt;
}

inline void check_section_body(std::string_view body, std::string_view label) {
    std::size_t pos = 0;
    while (pos <= body.size()) {
        auto eol = body.find('\n', pos);
        auto line = body.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        if (header_of(line, ParseMode::strict) || header_of(line, ParseMode::lenient)) {
            throw Error(ErrorCode::validation, std::string(label) + " text contains a section header line",
                        lower(label));
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
}

inline std::string extract_envelope(std::string_view body, ParseMode mode) {
    std::string t = trim(body);
    if (mode == ParseMode::strict) return t;
    auto open = t.find('{');
    auto close = t.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) return t;
    return t.substr(open, close - open + 1);
}

}  // namespace detail

struct ModelOutput {
    ReasoningRecord reasoning;
    std::optional<Action> action;
};

/// Splits a model output into its sections. The reasoning record must obey
/// the cycle rule for step `t`; the Action section is parsed when present.
inline ModelOutput parse_model_output(std::string_view text, std::size_t t, ParseMode mode = ParseMode::strict) {
    std::array<std::optional<std::string>, 6> bodies;
    std::optional<Section> current;
    std::string buf;
    auto flush = [&] {
        if (current) bodies[static_cast<std::size_t>(*current)] = detail::trim(buf);
        buf.clear();
    };
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        auto line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        if (auto sec = detail::header_of(line, mode)) {
            flush();
            if (bodies[static_cast<std::size_t>(*sec)]) {
                throw Error(ErrorCode::structured_output,
                            "duplicate section " + std::string(kSections[static_cast<std::size_t>(*sec)].second),
                            detail::lower(kSections[static_cast<std::size_t>(*sec)].second));
            }
            current = sec;
        } else if (current) {
            buf += line;
            buf += '\n';
        } else if (mode == ParseMode::strict && !detail::blank(line)) {
            throw Error(ErrorCode::structured_output, "text before the first section", "preamble", pos);
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    flush();

    auto body = [&](Section s) -> const std::optional<std::string>& { return bodies[static_cast<std::size_t>(s)]; };
    auto required = [&](Section s) -> std::string {
        const auto& b = body(s);
        std::string label = detail::lower(kSections[static_cast<std::size_t>(s)].second);
        if (!b || b->empty()) throw Error(ErrorCode::structured_output, "missing section " + label, label);
        return *b;
    };

    ModelOutput out;
    if (t == 0 && body(Section::reflection)) {
        throw Error(ErrorCode::protocol, "reflection present at the first step", "reflection");
    }
    if (t > 0) out.reasoning.reflection = required(Section::reflection);
    out.reasoning.strategic_summary = required(Section::summary);
    out.reasoning.strategic_planning = required(Section::planning);
    out.reasoning.tactical = required(Section::tactical);
    out.reasoning.expectation = required(Section::expectation);
    if (const auto& a = body(Section::action); a && !a->empty()) {
        out.action = action_from_json(detail::parse_json_text(detail::extract_envelope(*a, mode), "action"));
    }
    return out;
}

inline ReasoningRecord parse_reasoning(std::string_view text, std::size_t t, ParseMode mode = ParseMode::strict) {
    return parse_model_output(text, t, mode).reasoning;
}

/// Reasoning plus exactly one action; the Action section is mandatory here.
inline std::pair<ReasoningRecord, Action> parse_step_output(std::string_view text, std::size_t t,
                                                            ParseMode mode = ParseMode::strict) {
    auto out = parse_model_output(text, t, mode);
    if (!out.action) throw Error(ErrorCode::structured_output, "missing section action", "action");
    return {std::move(out.reasoning), *out.action};
}

/// Canonical text of one step's output; parse_step_output inverts it.
inline std::string render_model_output(const ReasoningRecord& r, const Action& a) {
    std::string out;
    auto section = [&](std::string_view label, const std::string& text) {
        detail::check_section_body(text, label);
        out += "### ";
        out += label;
        out += '\n';
        out += detail::trim(text);
        out += '\n';
    };
    if (r.reflection) section("Reflection", *r.reflection);
    section("Summary", r.strategic_summary);
    section("Planning", r.strategic_planning);
    section("Tactical", r.tactical);
    section("Expectation", r.expectation);
    out += "### Action\n";
    out += serialize_action(a);
    return out;
}

// ---------------------------------------------------------------------------
// Prompt assembly

inline std::string action_signature(ActionName n) {
    switch (n) {
    case ActionName::tap:
    case ActionName::click:
    case ActionName::hover:
    case ActionName::select: return R"({"point":{"x":int,"y":int}})";
    case ActionName::swipe: return R"({"from":{"x":int,"y":int},"to":{"x":int,"y":int}})";
    case ActionName::select_text: return R"({"end":{"x":int,"y":int},"start":{"x":int,"y":int}})";
    case ActionName::scroll: return R"({"direction":"up"|"down"|"left"|"right"})";
    case ActionName::input: return R"({"text":string})";
    case ActionName::point_input: return R"({"point":{"x":int,"y":int},"text":string})";
    case ActionName::remember: return R"({"content":string} (content optional))";
    case ActionName::enter:
    case ActionName::home:
    case ActionName::back: return "{}";
    case ActionName::set_task_status: return R"({"status":"continue"|"complete"|"infeasible"})";
    }
    return "{}";
}

inline std::string system_preamble(const std::string& goal, const ActionSpaceConfig& cfg) {
    std::string out = "You are a GUI agent operating a ";
    out += cfg.platform.empty() ? std::string("device") : cfg.platform + " device";
    out += ".\nTask goal: " + goal + "\n";
    out += "Coordinates use a relative grid: {\"x\":0,\"y\":0} is the top-left corner and "
           "{\"x\":1000,\"y\":1000} the bottom-right corner.\n";
    out += "Available actions (function calls):\n";
    for (auto n : kAllActions) {
        if (!cfg.allows(n)) continue;
        out += "- " + std::string(to_string(n)) + " " + action_signature(n) + "\n";
    }
    out += "Answer with these sections, each introduced by its header line:\n"
           "### Reflection (omit at the first step): did the previous action meet its expectation?\n"
           "### Summary: progress so far\n"
           "### Planning: the next sub-goal\n"
           "### Tactical: the concrete action and where it lands\n"
           "### Expectation: what the screen should show after the action\n"
           "### Action: exactly one function call {\"name\":...,\"arguments\":{...}}";
    return out;
}

/// system preamble, then one user/assistant pair per history step, then the
/// current observation. Pure function of the input.
inline std::vector<ChatMessage> render_step_prompt(const StepInput& in) {
    std::vector<ChatMessage> msgs;
    msgs.push_back({"system", system_preamble(in.goal, in.action_space)});
    for (const auto& h : in.history) {
        msgs.push_back({"user", "Step " + std::to_string(h.t) + " observation:\n" + h.observation_text});
        msgs.push_back({"assistant", render_model_output(h.reasoning, h.action)});
    }
    msgs.push_back({"user", "Step " + std::to_string(in.t) + " observation:\n" + render_observation(in.observation)});
    return msgs;
}

// ---------------------------------------------------------------------------
// JSON and step log

inline Json to_json(const ReasoningRecord& r) {
    Json j = Json::object();
    j["reflection"] = r.reflection ? Json(*r.reflection) : Json(nullptr);
    j["summary"] = r.strategic_summary;
    j["planning"] = r.strategic_planning;
    j["tactical"] = r.tactical;
    j["expectation"] = r.expectation;
    return j;
}

inline ReasoningRecord reasoning_from_json(const Json& j) {
    detail::require_object(j, "reasoning");
    ReasoningRecord r;
    if (auto it = j.find("reflection"); it != j.end() && !it->is_null()) {
        r.reflection = detail::require_string(j, "reflection", "reasoning");
    }
    r.strategic_summary = detail::require_string(j, "summary", "reasoning");
    r.strategic_planning = detail::require_string(j, "planning", "reasoning");
    r.tactical = detail::require_string(j, "tactical", "reasoning");
    r.expectation = detail::require_string(j, "expectation", "reasoning");
    return r;
}

/// One NDJSON line per step: {t, observation, reasoning, action, status_after}.
/// status_after is the episode status right after that step was recorded.
inline void write_step_log(const EpisodeState& state, std::ostream& out) {
    const auto& steps = state.steps();
    for (std::size_t t = 0; t < steps.size(); ++t) {
        Json line = Json::object();
        line["t"] = t;
        line["observation"] = to_json(steps[t].observation);
        line["reasoning"] = to_json(steps[t].reasoning);
        line["action"] = to_json(steps[t].action);
        bool last = t + 1 == steps.size();
        line["status_after"] = std::string(to_string(last ? state.status() : EpisodeStatus::running));
        out << line.dump() << '\n';
    }
}

}  // namespace guiagent
