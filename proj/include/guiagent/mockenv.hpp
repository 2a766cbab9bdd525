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
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "guiagent/actions.hpp"
#include "guiagent/error.hpp"
#include "guiagent/json.hpp"
#include "guiagent/observation.hpp"

/// Deterministic scripted GUI environment. A script is a set of screens plus
/// transition rules keyed on (screen, action, hit element); tasks are named
/// predicate sets evaluated when the agent reports completion.
namespace guiagent::mockenv {

struct Screen {
    std::string id;
    ScreenDims dims{1080, 2400};
    std::vector<SceneElement> elements;

    const SceneElement* find(std::string_view element_id) const {
        for (const auto& e : elements) {
            if (e.id == element_id) return &e;
        }
        return nullptr;
    }
};

struct Trigger {
    std::set<ActionName> actions;
    std::optional<std::string> element;  // must be the hit element
    std::optional<Direction> direction;  // scroll only
};

struct Mutation {
    enum class Op { set, copy, toggle, clear };
    Op op = Op::set;
    std::string field;   // destination
    std::string value;   // set
    std::string source;  // copy
};

struct Rule {
    std::string screen;  // "*" matches every screen
    Trigger trigger;
    std::optional<std::string> next_screen;
    std::vector<Mutation> mutations;
};

struct Checker {
    enum class Kind { screen_is, field_equals, note_contains };
    Kind kind = Kind::screen_is;
    std::string field;
    std::string value;
};

struct Task {
    std::string id;
    std::string goal;
    std::string difficulty;  // easy | middle | hard
    std::vector<Checker> checkers;
    std::vector<Action> solution;
};

struct AppScript {
    std::string name;
    std::string platform = "mobile";
    std::string initial_screen;
    std::vector<Screen> screens;
    std::vector<Rule> rules;
    std::vector<Task> tasks;

    const Screen* screen(std::string_view id) const {
        for (const auto& s : screens) {
            if (s.id == id) return &s;
        }
        return nullptr;
    }
    const Task* task(std::string_view id) const {
        for (const auto& t : tasks) {
            if (t.id == id) return &t;
        }
        return nullptr;
    }
};

inline void check_script(const AppScript& s) {
    auto fail = [&](const std::string& msg) { throw Error(ErrorCode::validation, "script '" + s.name + "': " + msg); };
    if (!s.screen(s.initial_screen)) fail("initial screen '" + s.initial_screen + "' does not exist");
    std::set<std::string> screen_ids;
    for (const auto& sc : s.screens) {
        if (!screen_ids.insert(sc.id).second) fail("duplicate screen id '" + sc.id + "'");
        check_dims(sc.dims);
        std::set<std::string> ids;
        for (const auto& e : sc.elements) {
            if (!ids.insert(e.id).second) fail("duplicate element id '" + e.id + "' on screen '" + sc.id + "'");
            check_box(e.box);
        }
    }
    for (const auto& r : s.rules) {
        if (r.screen != "*" && !s.screen(r.screen)) fail("rule on unknown screen '" + r.screen + "'");
        if (r.next_screen && !s.screen(*r.next_screen)) fail("rule targets unknown screen '" + *r.next_screen + "'");
        if (r.trigger.actions.empty()) fail("rule with empty trigger");
        if (r.trigger.element && r.screen != "*" && !s.screen(r.screen)->find(*r.trigger.element)) {
            fail("rule trigger element '" + *r.trigger.element + "' not on screen '" + r.screen + "'");
        }
    }
    std::set<std::string> task_ids;
    for (const auto& t : s.tasks) {
        if (!task_ids.insert(t.id).second) fail("duplicate task id '" + t.id + "'");
        if (t.checkers.empty()) fail("task '" + t.id + "' has no checker");
    }
}

struct EnvState {
    std::string task;
    std::string screen;
    std::map<std::string, std::string> fields;
    std::vector<std::string> notes;
    std::optional<std::string> focus;
    std::int64_t step = 0;
    bool done = false;
    bool success = false;
    std::string rng;  // serialized engine; empty when rules never fail

    friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct StepResult {
    Observation observation;
    bool done = false;
    bool success = false;
};

struct EnvOptions {
    // Probability that a matched rule silently does not fire.
    double rule_failure_probability = 0.0;
    std::uint64_t seed = 0;
};

class Environment {
public:
    explicit Environment(AppScript script, EnvOptions options = {})
        : script_(std::move(script)), options_(options) {
        check_script(script_);
        if (options_.rule_failure_probability < 0.0 || options_.rule_failure_probability > 1.0) {
            throw Error(ErrorCode::config, "rule failure probability outside [0,1]");
        }
    }

    const AppScript& script() const noexcept { return script_; }
    const EnvState& state() const noexcept { return state_; }
    bool done() const noexcept { return state_.done; }

    const Task& task() const {
        const Task* t = script_.task(state_.task);
        if (!t) throw Error(ErrorCode::state, "environment has not been reset");
        return *t;
    }

    Observation reset(std::string_view task_id) {
        const Task* t = script_.task(task_id);
        if (!t) {
            throw Error(ErrorCode::lookup, "unknown task '" + std::string(task_id) + "' in script '" + script_.name + "'",
                        std::string(task_id));
        }
        state_ = EnvState{};
        state_.task = t->id;
        state_.screen = script_.initial_screen;
        for (const auto& sc : script_.screens) {
            for (const auto& e : sc.elements) {
                if (!e.text.empty() && !state_.fields.count(e.id)) state_.fields[e.id] = e.text;
            }
        }
        if (options_.rule_failure_probability > 0.0) {
            engine_.seed(options_.seed);
            save_rng();
        }
        return observe();
    }

    StepResult step(const Action& a) {
        if (state_.task.empty()) throw Error(ErrorCode::state, "environment has not been reset");
        if (state_.done) throw Error(ErrorCode::state, "environment is finished");
        require_valid(a, ActionSpaceConfig::full());
        ++state_.step;

        const Screen& screen = current();
        const SceneElement* hit = nullptr;
        if (auto p = contact_point(a)) hit = hit_test(screen, *p);

        switch (a.name) {
        case ActionName::tap:
        case ActionName::click:
            if (hit && hit->editable) state_.focus = hit->id;
            break;
        case ActionName::input:
            if (state_.focus && screen.find(*state_.focus)) {
                state_.fields[*state_.focus] = std::get<TextArgs>(a.args).text;
            }
            break;
        case ActionName::point_input:
            if (hit && hit->editable) {
                state_.focus = hit->id;
                state_.fields[hit->id] = std::get<PointTextArgs>(a.args).text;
            }
            break;
        case ActionName::remember:
            state_.notes.push_back(std::get<MemoArgs>(a.args).content.value_or(""));
            break;
        case ActionName::set_task_status: {
            auto status = std::get<StatusArgs>(a.args).status;
            if (status == TaskStatus::complete) {
                state_.done = true;
                state_.success = checkers_pass();
            } else if (status == TaskStatus::infeasible) {
                state_.done = true;
                state_.success = false;
            }
            break;
        }
        default:
            break;
        }

        if (!state_.done) {
            if (const Rule* rule = match(screen, a, hit)) {
                if (!rule_fails()) apply(*rule);
            }
        }
        return {observe(), state_.done, state_.success};
    }

    /// Evaluates the task predicates against the current state.
    bool checkers_pass() const {
        for (const auto& c : task().checkers) {
            if (!check(c)) return false;
        }
        return true;
    }

    bool check(const Checker& c) const {
        switch (c.kind) {
        case Checker::Kind::screen_is: return state_.screen == c.value;
        case Checker::Kind::field_equals: {
            auto it = state_.fields.find(c.field);
            return it != state_.fields.end() && it->second == c.value;
        }
        case Checker::Kind::note_contains:
            for (const auto& n : state_.notes) {
                if (n.find(c.value) != std::string::npos) return true;
            }
            return false;
        }
        return false;
    }

    Json snapshot() const;
    void restore(const Json& j);

    Observation observe() const {
        const Screen& sc = current();
        Observation o;
        o.id = sc.id + "@" + std::to_string(state_.step);
        o.dims = sc.dims;
        Scene scene;
        for (auto e : sc.elements) {
            if (auto it = state_.fields.find(e.id); it != state_.fields.end()) e.text = it->second;
            scene.elements.push_back(std::move(e));
        }
        o.scene = std::move(scene);
        o.timestamp = state_.step;
        return o;
    }

    /// Top-most (last listed) element containing `p`, tested on the grid.
    static const SceneElement* hit_test(const Screen& screen, NormPoint p) {
        const SceneElement* hit = nullptr;
        for (const auto& e : screen.elements) {
            if (point_in_box(p, e.box)) hit = &e;
        }
        return hit;
    }

    static std::optional<NormPoint> contact_point(const Action& a) {
        if (auto p = a.target_point()) return p;
        if (auto* two = std::get_if<TwoPointArgs>(&a.args)) return two->start;
        return std::nullopt;
    }

private:
    const Screen& current() const {
        const Screen* s = script_.screen(state_.screen);
        if (!s) throw Error(ErrorCode::state, "environment is on unknown screen '" + state_.screen + "'");
        return *s;
    }

    const Rule* match(const Screen& screen, const Action& a, const SceneElement* hit) const {
        for (const auto& r : script_.rules) {
            if (r.screen != "*" && r.screen != screen.id) continue;
            if (!r.trigger.actions.count(a.name)) continue;
            if (r.trigger.element && (!hit || hit->id != *r.trigger.element)) continue;
            if (r.trigger.direction) {
                auto* d = std::get_if<DirectionArgs>(&a.args);
                if (!d || d->direction != *r.trigger.direction) continue;
            }
            return &r;
        }
        return nullptr;
    }

    void apply(const Rule& r) {
        for (const auto& m : r.mutations) {
            switch (m.op) {
            case Mutation::Op::set: state_.fields[m.field] = m.value; break;
            case Mutation::Op::copy: {
                auto it = state_.fields.find(m.source);
                state_.fields[m.field] = it == state_.fields.end() ? std::string() : it->second;
                break;
            }
            case Mutation::Op::toggle: state_.fields[m.field] = state_.fields[m.field] == "on" ? "off" : "on"; break;
            case Mutation::Op::clear: state_.fields.erase(m.field); break;
            }
        }
        if (r.next_screen && *r.next_screen != state_.screen) {
            state_.screen = *r.next_screen;
            state_.focus.reset();
        }
    }

    bool rule_fails() {
        if (options_.rule_failure_probability <= 0.0) return false;
        std::bernoulli_distribution fail(options_.rule_failure_probability);
        bool out = fail(engine_);
        save_rng();
        return out;
    }

    void save_rng() {
        std::ostringstream os;
        os << engine_;
        state_.rng = os.str();
    }

    AppScript script_;
    EnvOptions options_;
    EnvState state_;
    std::mt19937_64 engine_;
};

/// Scripted solution for `task_id`, validated against `cfg`.
inline std::vector<Action> oracle_agent(const AppScript& script, std::string_view task_id,
                                        const ActionSpaceConfig& cfg = ActionSpaceConfig::full()) {
    const Task* t = script.task(task_id);
    if (!t) throw Error(ErrorCode::lookup, "unknown task '" + std::string(task_id) + "'", std::string(task_id));
    if (t->solution.empty()) {
        throw Error(ErrorCode::lookup, "task '" + t->id + "' has no scripted solution", t->id);
    }
    for (const auto& a : t->solution) require_valid(a, cfg);
    return t->solution;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline std::string_view to_string(Mutation::Op op) {
    switch (op) {
    case Mutation::Op::set: return "set";
    case Mutation::Op::copy: return "copy";
    case Mutation::Op::toggle: return "toggle";
    case Mutation::Op::clear: return "clear";
    }
    return "?";
}

inline std::string_view to_string(Checker::Kind k) {
    switch (k) {
    case Checker::Kind::screen_is: return "screen_is";
    case Checker::Kind::field_equals: return "field_equals";
    case Checker::Kind::note_contains: return "note_contains";
    }
    return "?";
}

}  // namespace detail

inline Json to_json(const AppScript& s) {
    Json screens = Json::array();
    for (const auto& sc : s.screens) {
        Json elems = Json::array();
        for (const auto& e : sc.elements) elems.push_back(guiagent::to_json(e));
        Json j = Json::object();
        j["id"] = sc.id;
        j["dims"] = guiagent::to_json(sc.dims);
        j["elements"] = elems;
        screens.push_back(j);
    }
    Json rules = Json::array();
    for (const auto& r : s.rules) {
        Json trig = Json::object();
        Json acts = Json::array();
        for (auto n : r.trigger.actions) acts.push_back(std::string(guiagent::to_string(n)));
        trig["actions"] = acts;
        if (r.trigger.element) trig["element"] = *r.trigger.element;
        if (r.trigger.direction) trig["direction"] = std::string(guiagent::to_string(*r.trigger.direction));
        Json muts = Json::array();
        for (const auto& m : r.mutations) {
            Json mj = Json::object();
            mj["op"] = std::string(detail::to_string(m.op));
            mj["field"] = m.field;
            if (m.op == Mutation::Op::set) mj["value"] = m.value;
            if (m.op == Mutation::Op::copy) mj["from"] = m.source;
            muts.push_back(mj);
        }
        Json j = Json::object();
        j["screen"] = r.screen;
        j["trigger"] = trig;
        if (r.next_screen) j["next_screen"] = *r.next_screen;
        j["mutations"] = muts;
        rules.push_back(j);
    }
    Json tasks = Json::array();
    for (const auto& t : s.tasks) {
        Json checks = Json::array();
        for (const auto& c : t.checkers) {
            Json cj = Json::object();
            cj["kind"] = std::string(detail::to_string(c.kind));
            if (c.kind == Checker::Kind::field_equals) cj["field"] = c.field;
            cj["value"] = c.value;
            checks.push_back(cj);
        }
        Json sol = Json::array();
        for (const auto& a : t.solution) sol.push_back(guiagent::to_json(a));
        Json j = Json::object();
        j["id"] = t.id;
        j["goal"] = t.goal;
        j["difficulty"] = t.difficulty;
        j["checkers"] = checks;
        j["solution"] = sol;
        tasks.push_back(j);
    }
    Json j = Json::object();
    j["name"] = s.name;
    j["platform"] = s.platform;
    j["initial_screen"] = s.initial_screen;
    j["screens"] = screens;
    j["rules"] = rules;
    j["tasks"] = tasks;
    return j;
}

inline AppScript script_from_json(const Json& j) {
    using guiagent::detail::optional_string;
    using guiagent::detail::require_key;
    using guiagent::detail::require_object;
    using guiagent::detail::require_string;
    require_object(j, "script");
    AppScript s;
    s.name = require_string(j, "name", "script");
    s.platform = optional_string(j, "platform", "script", "mobile");
    s.initial_screen = require_string(j, "initial_screen", "script");
    auto array = [](const Json& v, const char* what) -> const Json& {
        if (!v.is_array()) throw Error(ErrorCode::schema, std::string(what) + " must be an array", what);
        return v;
    };
    for (const auto& sj : array(require_key(j, "screens", "script"), "screens")) {
        Screen sc;
        sc.id = require_string(sj, "id", "screen");
        sc.dims = dims_from_json(require_key(sj, "dims", "screen"), "screen.dims");
        for (const auto& ej : array(require_key(sj, "elements", "screen"), "elements")) {
            sc.elements.push_back(scene_element_from_json(ej));
        }
        s.screens.push_back(std::move(sc));
    }
    for (const auto& rj : array(require_key(j, "rules", "script"), "rules")) {
        Rule r;
        r.screen = require_string(rj, "screen", "rule");
        const Json& tj = require_object(require_key(rj, "trigger", "rule"), "rule.trigger");
        for (const auto& n : array(require_key(tj, "actions", "trigger"), "actions")) {
            auto name = n.is_string() ? action_name_from_string(n.get<std::string>()) : std::nullopt;
            if (!name) throw Error(ErrorCode::unknown_action, "unknown action in trigger: " + n.dump());
            r.trigger.actions.insert(*name);
        }
        if (tj.contains("element")) r.trigger.element = require_string(tj, "element", "trigger");
        if (tj.contains("direction")) {
            auto d = direction_from_string(require_string(tj, "direction", "trigger"));
            if (!d) throw Error(ErrorCode::schema, "bad trigger direction", "trigger.direction");
            r.trigger.direction = *d;
        }
        if (rj.contains("next_screen")) r.next_screen = require_string(rj, "next_screen", "rule");
        if (rj.contains("mutations")) {
            for (const auto& mj : array(rj["mutations"], "mutations")) {
                Mutation m;
                auto op = require_string(mj, "op", "mutation");
                if (op == "set") m.op = Mutation::Op::set;
                else if (op == "copy") m.op = Mutation::Op::copy;
                else if (op == "toggle") m.op = Mutation::Op::toggle;
                else if (op == "clear") m.op = Mutation::Op::clear;
                else throw Error(ErrorCode::schema, "unknown mutation op '" + op + "'", "mutation.op");
                m.field = require_string(mj, "field", "mutation");
                if (m.op == Mutation::Op::set) m.value = require_string(mj, "value", "mutation");
                if (m.op == Mutation::Op::copy) m.source = require_string(mj, "from", "mutation");
                r.mutations.push_back(std::move(m));
            }
        }
        s.rules.push_back(std::move(r));
    }
    for (const auto& tj : array(require_key(j, "tasks", "script"), "tasks")) {
        Task t;
        t.id = require_string(tj, "id", "task");
        t.goal = require_string(tj, "goal", "task");
        t.difficulty = require_string(tj, "difficulty", "task");
        for (const auto& cj : array(require_key(tj, "checkers", "task"), "checkers")) {
            Checker c;
            auto kind = require_string(cj, "kind", "checker");
            if (kind == "screen_is") c.kind = Checker::Kind::screen_is;
            else if (kind == "field_equals") c.kind = Checker::Kind::field_equals;
            else if (kind == "note_contains") c.kind = Checker::Kind::note_contains;
            else throw Error(ErrorCode::schema, "unknown checker kind '" + kind + "'", "checker.kind");
            if (c.kind == Checker::Kind::field_equals) c.field = require_string(cj, "field", "checker");
            c.value = require_string(cj, "value", "checker");
            t.checkers.push_back(std::move(c));
        }
        if (tj.contains("solution")) {
            for (const auto& aj : array(tj["solution"], "solution")) t.solution.push_back(action_from_json(aj));
        }
        s.tasks.push_back(std::move(t));
    }
    check_script(s);
    return s;
}

inline Json Environment::snapshot() const {
    Json fields = Json::object();
    for (const auto& [k, v] : state_.fields) fields[k] = v;
    Json j = Json::object();
    j["script"] = script_.name;
    j["task"] = state_.task;
    j["screen"] = state_.screen;
    j["fields"] = fields;
    j["notes"] = state_.notes;
    j["focus"] = state_.focus ? Json(*state_.focus) : Json(nullptr);
    j["step"] = state_.step;
    j["done"] = state_.done;
    j["success"] = state_.success;
    j["rng"] = state_.rng;
    return j;
}

inline void Environment::restore(const Json& j) {
    using guiagent::detail::require_key;
    using guiagent::detail::require_string;
    try {
        if (require_string(j, "script", "snapshot") != script_.name) {
            throw Error(ErrorCode::state, "snapshot belongs to a different script");
        }
        EnvState s;
        s.task = require_string(j, "task", "snapshot");
        if (!script_.task(s.task)) throw Error(ErrorCode::lookup, "snapshot task unknown", s.task);
        s.screen = require_string(j, "screen", "snapshot");
        if (!script_.screen(s.screen)) throw Error(ErrorCode::lookup, "snapshot screen unknown", s.screen);
        for (const auto& item : require_key(j, "fields", "snapshot").items()) {
            s.fields[item.key()] = item.value().get<std::string>();
        }
        s.notes = require_key(j, "notes", "snapshot").get<std::vector<std::string>>();
        if (const Json& f = require_key(j, "focus", "snapshot"); !f.is_null()) s.focus = f.get<std::string>();
        s.step = require_key(j, "step", "snapshot").get<std::int64_t>();
        s.done = require_key(j, "done", "snapshot").get<bool>();
        s.success = require_key(j, "success", "snapshot").get<bool>();
        s.rng = require_string(j, "rng", "snapshot");
        if (!s.rng.empty()) {
            std::istringstream is(s.rng);
            is >> engine_;
        }
        state_ = std::move(s);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::schema, std::string("malformed snapshot: ") + e.what());
    }
}

}  // namespace guiagent::mockenv
