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
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "guiagent/error.hpp"
#include "guiagent/geometry.hpp"
#include "guiagent/json.hpp"

namespace guiagent {

enum class ActionName {
    tap,
    click,
    hover,
    select,
    swipe,
    select_text,
    scroll,
    input,
    point_input,
    remember,
    enter,
    home,
    back,
    set_task_status,
};

inline constexpr std::array<ActionName, 14> kAllActions = {
    ActionName::tap,    ActionName::click,       ActionName::hover,    ActionName::select,
    ActionName::swipe,  ActionName::select_text, ActionName::scroll,   ActionName::input,
    ActionName::point_input, ActionName::remember, ActionName::enter,  ActionName::home,
    ActionName::back,   ActionName::set_task_status,
};

enum class ActionCategory {
    single_point,
    two_point,
    directional,
    text_input,
    parameterless,
    state_setting,
};

constexpr std::string_view to_string(ActionName n) noexcept {
    switch (n) {
    case ActionName::tap: return "tap";
    case ActionName::click: return "click";
    case ActionName::hover: return "hover";
    case ActionName::select: return "select";
    case ActionName::swipe: return "swipe";
    case ActionName::select_text: return "select_text";
    case ActionName::scroll: return "scroll";
    case ActionName::input: return "input";
    case ActionName::point_input: return "point_input";
    case ActionName::remember: return "remember";
    case ActionName::enter: return "enter";
    case ActionName::home: return "home";
    case ActionName::back: return "back";
    case ActionName::set_task_status: return "set_task_status";
    }
    return "?";
}

constexpr std::string_view to_string(ActionCategory c) noexcept {
    switch (c) {
    case ActionCategory::single_point: return "single-point";
    case ActionCategory::two_point: return "two-point";
    case ActionCategory::directional: return "directional";
    case ActionCategory::text_input: return "text input";
    case ActionCategory::parameterless: return "parameterless";
    case ActionCategory::state_setting: return "state setting";
    }
    return "?";
}

constexpr ActionCategory category_of(ActionName n) noexcept {
    switch (n) {
    case ActionName::tap:
    case ActionName::click:
    case ActionName::hover:
    case ActionName::select: return ActionCategory::single_point;
    case ActionName::swipe:
    case ActionName::select_text: return ActionCategory::two_point;
    case ActionName::scroll: return ActionCategory::directional;
    case ActionName::input:
    case ActionName::point_input: return ActionCategory::text_input;
    case ActionName::remember:
    case ActionName::enter:
    case ActionName::home:
    case ActionName::back: return ActionCategory::parameterless;
    case ActionName::set_task_status: return ActionCategory::state_setting;
    }
    return ActionCategory::parameterless;
}

inline std::optional<ActionName> action_name_from_string(std::string_view s) noexcept {
    for (auto n : kAllActions) {
        if (to_string(n) == s) return n;
    }
    return std::nullopt;
}

inline std::string canonical_name_list() {
    std::string out;
    for (auto n : kAllActions) {
        if (!out.empty()) out += ", ";
        out += to_string(n);
    }
    return out;
}

enum class Direction { up, down, left, right };
enum class TaskStatus { continue_, complete, infeasible };

constexpr std::string_view to_string(Direction d) noexcept {
    switch (d) {
    case Direction::up: return "up";
    case Direction::down: return "down";
    case Direction::left: return "left";
    case Direction::right: return "right";
    }
    return "?";
}

constexpr std::string_view to_string(TaskStatus s) noexcept {
    switch (s) {
    case TaskStatus::continue_: return "continue";
    case TaskStatus::complete: return "complete";
    case TaskStatus::infeasible: return "infeasible";
    }
    return "?";
}

inline std::optional<Direction> direction_from_string(std::string_view s) noexcept {
    for (auto d : {Direction::up, Direction::down, Direction::left, Direction::right}) {
        if (to_string(d) == s) return d;
    }
    return std::nullopt;
}

inline std::optional<TaskStatus> task_status_from_string(std::string_view s) noexcept {
    for (auto v : {TaskStatus::continue_, TaskStatus::complete, TaskStatus::infeasible}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

// Argument payloads. swipe uses {from,to}; select_text uses {start,end}.
struct NoArgs {
    friend bool operator==(const NoArgs&, const NoArgs&) = default;
};
struct PointArgs {
    NormPoint point;
    friend bool operator==(const PointArgs&, const PointArgs&) = default;
};
struct TwoPointArgs {
    NormPoint start;
    NormPoint end;
    friend bool operator==(const TwoPointArgs&, const TwoPointArgs&) = default;
};
struct DirectionArgs {
    Direction direction = Direction::down;
    friend bool operator==(const DirectionArgs&, const DirectionArgs&) = default;
};
struct TextArgs {
    std::string text;
    friend bool operator==(const TextArgs&, const TextArgs&) = default;
};
struct PointTextArgs {
    NormPoint point;
    std::string text;
    friend bool operator==(const PointTextArgs&, const PointTextArgs&) = default;
};
struct MemoArgs {
    std::optional<std::string> content;
    friend bool operator==(const MemoArgs&, const MemoArgs&) = default;
};
struct StatusArgs {
    TaskStatus status = TaskStatus::complete;
    friend bool operator==(const StatusArgs&, const StatusArgs&) = default;
};

using ActionArgs =
    std::variant<NoArgs, PointArgs, TwoPointArgs, DirectionArgs, TextArgs, PointTextArgs, MemoArgs, StatusArgs>;

/// Index into ActionArgs that `n` requires.
constexpr std::size_t expected_args_index(ActionName n) noexcept {
    switch (n) {
    case ActionName::tap:
    case ActionName::click:
    case ActionName::hover:
    case ActionName::select: return 1;
    case ActionName::swipe:
    case ActionName::select_text: return 2;
    case ActionName::scroll: return 3;
    case ActionName::input: return 4;
    case ActionName::point_input: return 5;
    case ActionName::remember: return 6;
    case ActionName::enter:
    case ActionName::home:
    case ActionName::back: return 0;
    case ActionName::set_task_status: return 7;
    }
    return 0;
}

struct Action {
    ActionName name = ActionName::back;
    ActionArgs args = NoArgs{};

    static Action tap(NormPoint p) { return {ActionName::tap, PointArgs{p}}; }
    static Action click(NormPoint p) { return {ActionName::click, PointArgs{p}}; }
    static Action hover(NormPoint p) { return {ActionName::hover, PointArgs{p}}; }
    static Action select(NormPoint p) { return {ActionName::select, PointArgs{p}}; }
    static Action swipe(NormPoint from, NormPoint to) { return {ActionName::swipe, TwoPointArgs{from, to}}; }
    static Action select_text(NormPoint start, NormPoint end) {
        return {ActionName::select_text, TwoPointArgs{start, end}};
    }
    static Action scroll(Direction d) { return {ActionName::scroll, DirectionArgs{d}}; }
    static Action input(std::string text) { return {ActionName::input, TextArgs{std::move(text)}}; }
    static Action point_input(NormPoint p, std::string text) {
        return {ActionName::point_input, PointTextArgs{p, std::move(text)}};
    }
    static Action remember(std::optional<std::string> content = std::nullopt) {
        return {ActionName::remember, MemoArgs{std::move(content)}};
    }
    static Action enter() { return {ActionName::enter, NoArgs{}}; }
    static Action home() { return {ActionName::home, NoArgs{}}; }
    static Action back() { return {ActionName::back, NoArgs{}}; }
    static Action set_task_status(TaskStatus s) { return {ActionName::set_task_status, StatusArgs{s}}; }

    ActionCategory category() const noexcept { return category_of(name); }

    /// The point a single-point or point_input action targets.
    std::optional<NormPoint> target_point() const {
        if (auto* p = std::get_if<PointArgs>(&args)) return p->point;
        if (auto* p = std::get_if<PointTextArgs>(&args)) return p->point;
        return std::nullopt;
    }

    friend bool operator==(const Action&, const Action&) = default;
};

// ---------------------------------------------------------------------------
// Action space configuration

struct ActionSpaceConfig {
    std::set<ActionName> enabled;
    std::string platform;

    bool allows(ActionName n) const { return enabled.count(n) > 0; }

    static ActionSpaceConfig full() {
        return {std::set<ActionName>(kAllActions.begin(), kAllActions.end()), "full"};
    }
    static ActionSpaceConfig mobile() {
        return {{ActionName::tap, ActionName::swipe, ActionName::scroll, ActionName::input, ActionName::point_input,
                 ActionName::enter, ActionName::home, ActionName::back, ActionName::remember,
                 ActionName::set_task_status},
                "mobile"};
    }
    static ActionSpaceConfig desktop() {
        auto cfg = mobile();
        cfg.enabled.insert({ActionName::click, ActionName::hover, ActionName::select, ActionName::select_text});
        cfg.platform = "desktop";
        return cfg;
    }
    static ActionSpaceConfig web() {
        auto cfg = desktop();
        cfg.platform = "web";
        return cfg;
    }
    static ActionSpaceConfig for_platform(std::string_view platform) {
        if (platform == "mobile") return mobile();
        if (platform == "desktop") return desktop();
        if (platform == "web") return web();
        if (platform == "full") return full();
        throw Error(ErrorCode::config, "unknown platform preset '" + std::string(platform) + "'",
                    std::string(platform));
    }

    friend bool operator==(const ActionSpaceConfig&, const ActionSpaceConfig&) = default;
};

inline void check_config(const ActionSpaceConfig& cfg) {
    if (cfg.enabled.empty()) throw Error(ErrorCode::config, "action space config enables no actions");
}

inline Json to_json(const ActionSpaceConfig& cfg) {
    Json names = Json::array();
    for (auto n : cfg.enabled) names.push_back(std::string(to_string(n)));
    Json j = Json::object();
    j["platform"] = cfg.platform;
    j["enabled"] = names;
    return j;
}

inline ActionSpaceConfig action_space_from_json(const Json& j) {
    detail::require_object(j, "action_space");
    ActionSpaceConfig cfg;
    cfg.platform = detail::optional_string(j, "platform", "action_space");
    const Json& names = detail::require_key(j, "enabled", "action_space");
    if (!names.is_array()) throw Error(ErrorCode::schema, "action_space.enabled must be an array", "enabled");
    for (const auto& n : names) {
        if (!n.is_string()) throw Error(ErrorCode::schema, "action names must be strings", "enabled");
        auto name = action_name_from_string(n.get<std::string>());
        if (!name) {
            throw Error(ErrorCode::unknown_action,
                        "unknown action '" + n.get<std::string>() + "'; canonical names: " + canonical_name_list(),
                        n.get<std::string>());
        }
        cfg.enabled.insert(*name);
    }
    check_config(cfg);
    return cfg;
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
    ErrorCode code;
    std::string message;

    Error to_error() const { return Error(code, message); }
};

/// std::nullopt means the action is valid under `cfg`.
inline std::optional<Violation> validate_action(const Action& a, const ActionSpaceConfig& cfg) {
    if (!cfg.allows(a.name)) {
        return Violation{ErrorCode::not_in_space,
                         "action '" + std::string(to_string(a.name)) + "' not in configured space" +
                             (cfg.platform.empty() ? "" : " (" + cfg.platform + ")")};
    }
    if (a.args.index() != expected_args_index(a.name)) {
        return Violation{ErrorCode::schema, "arguments of '" + std::string(to_string(a.name)) +
                                                "' do not match the " + std::string(to_string(a.category())) +
                                                " category"};
    }
    auto bad_point = [](const NormPoint& p) { return !p.valid(); };
    bool out_of_range = std::visit(
        [&](const auto& args) {
            using T = std::decay_t<decltype(args)>;
            if constexpr (std::is_same_v<T, PointArgs>) return bad_point(args.point);
            else if constexpr (std::is_same_v<T, PointTextArgs>) return bad_point(args.point);
            else if constexpr (std::is_same_v<T, TwoPointArgs>) return bad_point(args.start) || bad_point(args.end);
            else return false;
        },
        a.args);
    if (out_of_range) {
        return Violation{ErrorCode::range, "action '" + std::string(to_string(a.name)) +
                                               "' has a coordinate outside [0,1000]"};
    }
    return std::nullopt;
}

inline void require_valid(const Action& a, const ActionSpaceConfig& cfg) {
    if (auto v = validate_action(a, cfg)) throw v->to_error();
}

// ---------------------------------------------------------------------------
// Function-call envelope: {"name":...,"arguments":{...}} with argument keys
// in sorted order.

inline Json to_json(const Action& a) {
    Json args = Json::object();
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, PointArgs>) {
                args["point"] = to_json(v.point);
            } else if constexpr (std::is_same_v<T, TwoPointArgs>) {
                if (a.name == ActionName::swipe) {
                    args["from"] = to_json(v.start);
                    args["to"] = to_json(v.end);
                } else {
                    args["end"] = to_json(v.end);
                    args["start"] = to_json(v.start);
                }
            } else if constexpr (std::is_same_v<T, DirectionArgs>) {
                args["direction"] = std::string(to_string(v.direction));
            } else if constexpr (std::is_same_v<T, TextArgs>) {
                args["text"] = v.text;
            } else if constexpr (std::is_same_v<T, PointTextArgs>) {
                args["point"] = to_json(v.point);
                args["text"] = v.text;
            } else if constexpr (std::is_same_v<T, MemoArgs>) {
                if (v.content) args["content"] = *v.content;
            } else if constexpr (std::is_same_v<T, StatusArgs>) {
                args["status"] = std::string(to_string(v.status));
            }
        },
        a.args);
    Json j = Json::object();
    j["name"] = std::string(to_string(a.name));
    j["arguments"] = std::move(args);
    return j;
}

inline std::string serialize_action(const Action& a) { return to_json(a).dump(); }

namespace detail {

inline std::string arg_string(const Json& args, const char* key, std::string_view name) {
    const Json& v = require_key(args, key, "arguments");
    if (!v.is_string()) {
        throw Error(ErrorCode::schema,
                    "argument '" + std::string(key) + "' of '" + std::string(name) + "' must be a string",
                    std::string("arguments.") + key);
    }
    return v.get<std::string>();
}

inline NormPoint arg_point(const Json& args, const char* key) {
    return point_from_json(require_key(args, key, "arguments"), ParseMode::strict, std::string("arguments.") + key);
}

}  // namespace detail

/// Strict inverse of to_json(Action).
inline Action action_from_json(const Json& j) {
    try {
        detail::require_object(j, "envelope");
        detail::reject_unknown_keys(j, {"name", "arguments"}, "envelope");
        std::string name_text = detail::require_string(j, "name", "envelope");
        auto name = action_name_from_string(name_text);
        if (!name) {
            throw Error(ErrorCode::unknown_action,
                        "unknown action '" + name_text + "'; canonical names: " + canonical_name_list(), name_text);
        }
        const Json& args = detail::require_key(j, "arguments", "envelope");
        detail::require_object(args, "arguments");
        const auto nm = to_string(*name);

        Action a;
        a.name = *name;
        switch (*name) {
        case ActionName::tap:
        case ActionName::click:
        case ActionName::hover:
        case ActionName::select:
            detail::reject_unknown_keys(args, {"point"}, "arguments");
            a.args = PointArgs{detail::arg_point(args, "point")};
            break;
        case ActionName::swipe:
            detail::reject_unknown_keys(args, {"from", "to"}, "arguments");
            a.args = TwoPointArgs{detail::arg_point(args, "from"), detail::arg_point(args, "to")};
            break;
        case ActionName::select_text:
            detail::reject_unknown_keys(args, {"start", "end"}, "arguments");
            a.args = TwoPointArgs{detail::arg_point(args, "start"), detail::arg_point(args, "end")};
            break;
        case ActionName::scroll: {
            detail::reject_unknown_keys(args, {"direction"}, "arguments");
            auto text = detail::arg_string(args, "direction", nm);
            auto d = direction_from_string(text);
            if (!d) {
                throw Error(ErrorCode::schema,
                            "scroll direction '" + text + "' not one of up, down, left, right (directional category)",
                            "arguments.direction");
            }
            a.args = DirectionArgs{*d};
            break;
        }
        case ActionName::input:
            detail::reject_unknown_keys(args, {"text"}, "arguments");
            a.args = TextArgs{detail::arg_string(args, "text", nm)};
            break;
        case ActionName::point_input:
            detail::reject_unknown_keys(args, {"point", "text"}, "arguments");
            a.args = PointTextArgs{detail::arg_point(args, "point"), detail::arg_string(args, "text", nm)};
            break;
        case ActionName::remember: {
            detail::reject_unknown_keys(args, {"content"}, "arguments");
            MemoArgs m;
            if (args.contains("content")) m.content = detail::arg_string(args, "content", nm);
            a.args = m;
            break;
        }
        case ActionName::enter:
        case ActionName::home:
        case ActionName::back:
            detail::reject_unknown_keys(args, {}, "arguments");
            a.args = NoArgs{};
            break;
        case ActionName::set_task_status: {
            detail::reject_unknown_keys(args, {"status"}, "arguments");
            auto text = detail::arg_string(args, "status", nm);
            auto s = task_status_from_string(text);
            if (!s) {
                throw Error(ErrorCode::schema, "status '" + text + "' not one of continue, complete, infeasible",
                            "arguments.status");
            }
            a.args = StatusArgs{*s};
            break;
        }
        }
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::schema, std::string("malformed envelope: ") + e.what());
    }
}

inline Action parse_action(std::string_view text) {
    return action_from_json(detail::parse_json_text(text, "envelope"));
}

}  // namespace guiagent
