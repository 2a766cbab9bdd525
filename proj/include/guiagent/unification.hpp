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

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "guiagent/actions.hpp"

namespace guiagent {

enum class CoordinateConvention { norm1000, pixel, unit_float };

constexpr std::string_view to_string(CoordinateConvention c) noexcept {
    switch (c) {
    case CoordinateConvention::norm1000: return "norm1000";
    case CoordinateConvention::pixel: return "pixel";
    case CoordinateConvention::unit_float: return "unit_float";
    }
    return "?";
}

inline CoordinateConvention convention_from_string(std::string_view s) {
    if (s == "norm1000") return CoordinateConvention::norm1000;
    if (s == "pixel") return CoordinateConvention::pixel;
    if (s == "unit_float") return CoordinateConvention::unit_float;
    throw Error(ErrorCode::schema, "unknown coordinate convention '" + std::string(s) + "'",
                "coordinate_convention");
}

/// One row of the dialect table. `argument_rename_map` maps a top-level
/// source argument to a destination path; dotted destinations ("point.x")
/// build nested objects. `fixed_arguments` is merged in after renaming.
struct UnificationEntry {
    std::string dialect;
    std::string source_name;
    ActionName canonical_name = ActionName::back;
    std::vector<std::pair<std::string, std::string>> argument_rename_map;
    CoordinateConvention coordinate_convention = CoordinateConvention::norm1000;
    Json fixed_arguments = Json::object();
};

namespace detail {

inline bool is_point_argument(std::string_view key) {
    return key == "point" || key == "from" || key == "to" || key == "start" || key == "end";
}

inline void assign_path(Json& root, const std::string& path, Json value) {
    Json* cur = &root;
    std::size_t pos = 0;
    while (true) {
        auto dot = path.find('.', pos);
        std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (key.empty()) throw Error(ErrorCode::config, "empty segment in rename path '" + path + "'", path);
        if (dot == std::string::npos) {
            if (cur->contains(key)) {
                throw Error(ErrorCode::unification, "argument '" + path + "' assigned twice", path);
            }
            (*cur)[key] = std::move(value);
            return;
        }
        if (!cur->contains(key)) (*cur)[key] = Json::object();
        cur = &(*cur)[key];
        if (!cur->is_object()) throw Error(ErrorCode::unification, "argument path '" + path + "' collides", path);
        pos = dot + 1;
    }
}

inline int convert_axis(const Json& v, CoordinateConvention conv, int dim, const char* axis) {
    switch (conv) {
    case CoordinateConvention::norm1000:
    case CoordinateConvention::pixel:
        if (!v.is_number_integer()) {
            throw Error(ErrorCode::schema, std::string(axis) + " must be an integer in this dialect", axis);
        }
        break;
    case CoordinateConvention::unit_float:
        if (!v.is_number()) throw Error(ErrorCode::schema, std::string(axis) + " must be a number", axis);
        break;
    }
    if (conv == CoordinateConvention::unit_float) {
        double f = v.get<double>();
        if (!(f >= 0.0 && f <= 1.0)) {
            throw Error(ErrorCode::range, std::string(axis) + "=" + std::to_string(f) + " outside [0,1]", axis);
        }
        return static_cast<int>(std::floor(f * kNormScale + 0.5));
    }
    long long raw = v.get<long long>();
    if (conv == CoordinateConvention::norm1000) {
        if (raw < 0 || raw > kNormScale) {
            throw Error(ErrorCode::range, std::string(axis) + "=" + std::to_string(raw) + " outside [0,1000]", axis);
        }
        return static_cast<int>(raw);
    }
    if (raw < 0 || raw >= dim) {
        throw Error(ErrorCode::range,
                    std::string(axis) + "=" + std::to_string(raw) + " outside [0," + std::to_string(dim) + ")", axis);
    }
    return static_cast<int>(round_half_up(raw * kNormScale, dim));
}

}  // namespace detail

inline Json to_json(const UnificationEntry& e) {
    Json renames = Json::object();
    for (const auto& [from, to] : e.argument_rename_map) renames[from] = to;
    Json j = Json::object();
    j["dialect"] = e.dialect;
    j["source_name"] = e.source_name;
    j["canonical_name"] = std::string(to_string(e.canonical_name));
    j["argument_rename_map"] = renames;
    j["coordinate_convention"] = std::string(to_string(e.coordinate_convention));
    if (!e.fixed_arguments.empty()) j["fixed_arguments"] = e.fixed_arguments;
    return j;
}

inline UnificationEntry unification_entry_from_json(const Json& j) {
    detail::require_object(j, "entry");
    detail::reject_unknown_keys(
        j, {"dialect", "source_name", "canonical_name", "argument_rename_map", "coordinate_convention", "fixed_arguments"},
        "entry");
    UnificationEntry e;
    e.dialect = detail::require_string(j, "dialect", "entry");
    e.source_name = detail::require_string(j, "source_name", "entry");
    auto cn = detail::require_string(j, "canonical_name", "entry");
    auto name = action_name_from_string(cn);
    if (!name) throw Error(ErrorCode::unknown_action, "table maps to unknown action '" + cn + "'", cn);
    e.canonical_name = *name;
    if (auto it = j.find("argument_rename_map"); it != j.end()) {
        if (!it->is_object()) throw Error(ErrorCode::schema, "argument_rename_map must be an object");
        for (const auto& item : it->items()) {
            if (!item.value().is_string()) throw Error(ErrorCode::schema, "rename targets must be strings");
            e.argument_rename_map.emplace_back(item.key(), item.value().get<std::string>());
        }
    }
    e.coordinate_convention = convention_from_string(detail::require_string(j, "coordinate_convention", "entry"));
    if (auto it = j.find("fixed_arguments"); it != j.end()) {
        if (!it->is_object()) throw Error(ErrorCode::schema, "fixed_arguments must be an object");
        e.fixed_arguments = *it;
    }
    return e;
}

/// Versioned mapping from dataset-specific action dialects onto the
/// canonical action space. Loaded once, read-only afterwards.
class UnificationTable {
public:
    UnificationTable() = default;
    UnificationTable(int version, std::vector<UnificationEntry> entries)
        : version_(version), entries_(std::move(entries)) {}

    int version() const noexcept { return version_; }
    const std::vector<UnificationEntry>& entries() const noexcept { return entries_; }

    std::set<std::string> dialects() const {
        std::set<std::string> out;
        for (const auto& e : entries_) out.insert(e.dialect);
        return out;
    }

    bool has_dialect(std::string_view dialect) const {
        for (const auto& e : entries_) {
            if (e.dialect == dialect) return true;
        }
        return false;
    }

    /// Exactly one entry must match; zero or several is an error.
    const UnificationEntry& lookup(std::string_view dialect, std::string_view source_name) const {
        if (!has_dialect(dialect)) {
            throw Error(ErrorCode::unification, "dialect '" + std::string(dialect) + "' is not registered",
                        std::string(dialect));
        }
        const UnificationEntry* found = nullptr;
        for (const auto& e : entries_) {
            if (e.dialect != dialect || e.source_name != source_name) continue;
            if (found) {
                throw Error(ErrorCode::unification,
                            "ambiguous mapping for '" + std::string(source_name) + "' in dialect '" +
                                std::string(dialect) + "'",
                            std::string(dialect) + ":" + std::string(source_name));
            }
            found = &e;
        }
        if (!found) {
            throw Error(ErrorCode::unification,
                        "no mapping for '" + std::string(source_name) + "' in dialect '" + std::string(dialect) + "'",
                        std::string(dialect) + ":" + std::string(source_name));
        }
        return *found;
    }

    CoordinateConvention convention_of(std::string_view dialect) const {
        for (const auto& e : entries_) {
            if (e.dialect == dialect) return e.coordinate_convention;
        }
        throw Error(ErrorCode::unification, "dialect '" + std::string(dialect) + "' is not registered",
                    std::string(dialect));
    }

    /// Maps a dialect action onto the canonical space. Pixel dialects need
    /// `dims` to re-normalize coordinates.
    Action unify(std::string_view source_name, const Json& source_args, std::string_view dialect,
                 std::optional<ScreenDims> dims = std::nullopt) const {
        const UnificationEntry& e = lookup(dialect, source_name);
        if (!source_args.is_object() && !source_args.is_null()) {
            throw Error(ErrorCode::schema, "source arguments must be an object", "arguments");
        }
        Json args = Json::object();
        if (source_args.is_object()) {
            for (const auto& item : source_args.items()) {
                std::string dest = item.key();
                for (const auto& [from, to] : e.argument_rename_map) {
                    if (from == item.key()) {
                        dest = to;
                        break;
                    }
                }
                detail::assign_path(args, dest, item.value());
            }
        }
        for (const auto& item : e.fixed_arguments.items()) detail::assign_path(args, item.key(), item.value());

        if (e.coordinate_convention == CoordinateConvention::pixel && !dims) {
            throw Error(ErrorCode::unification,
                        "dialect '" + std::string(dialect) + "' uses pixel coordinates; screen dims required",
                        std::string(dialect));
        }
        ScreenDims d = dims.value_or(ScreenDims{1, 1});
        if (e.coordinate_convention == CoordinateConvention::pixel) check_dims(d);
        for (auto& item : args.items()) {
            if (!detail::is_point_argument(item.key())) continue;
            Json& p = item.value();
            if (!p.is_object() || !p.contains("x") || !p.contains("y")) {
                throw Error(ErrorCode::schema, "argument '" + item.key() + "' must be an {x,y} object", item.key());
            }
            Json converted = Json::object();
            converted["x"] = detail::convert_axis(p["x"], e.coordinate_convention, d.width, "x");
            converted["y"] = detail::convert_axis(p["y"], e.coordinate_convention, d.height, "y");
            for (const auto& extra : p.items()) {
                if (extra.key() != "x" && extra.key() != "y") converted[extra.key()] = extra.value();
            }
            p = std::move(converted);
        }
        Json envelope = Json::object();
        envelope["name"] = std::string(to_string(e.canonical_name));
        envelope["arguments"] = std::move(args);
        return action_from_json(envelope);
    }

    Json to_json() const {
        Json arr = Json::array();
        for (const auto& e : entries_) arr.push_back(guiagent::to_json(e));
        Json j = Json::object();
        j["version"] = version_;
        j["entries"] = arr;
        return j;
    }

    static UnificationTable from_json(const Json& j) {
        detail::require_object(j, "unification_table");
        detail::reject_unknown_keys(j, {"version", "entries"}, "unification_table");
        int version = static_cast<int>(detail::require_integer(j, "version", "unification_table"));
        const Json& arr = detail::require_key(j, "entries", "unification_table");
        if (!arr.is_array()) throw Error(ErrorCode::schema, "unification_table.entries must be an array");
        std::vector<UnificationEntry> entries;
        for (const auto& item : arr) entries.push_back(unification_entry_from_json(item));
        return UnificationTable(version, std::move(entries));
    }

    /// Built-in table: canonical identity, a mobile trajectory dialect with
    /// pixel coordinates, and a web dialect with [0,1] float coordinates.
    static const UnificationTable& builtin() {
        static const UnificationTable table = make_builtin();
        return table;
    }

private:
    static UnificationTable make_builtin() {
        std::vector<UnificationEntry> rows;
        for (auto n : kAllActions) {
            rows.push_back({"canonical", std::string(to_string(n)), n, {}, CoordinateConvention::norm1000});
        }
        using C = CoordinateConvention;
        const std::vector<std::pair<std::string, std::string>> xy = {{"x", "point.x"}, {"y", "point.y"}};
        auto status = [](TaskStatus s) {
            Json j = Json::object();
            j["status"] = std::string(to_string(s));
            return j;
        };
        auto mobile = [&](std::string src, ActionName n, std::vector<std::pair<std::string, std::string>> ren,
                          Json fixed = Json::object()) {
            rows.push_back({"mobile_traj", std::move(src), n, std::move(ren), C::pixel, std::move(fixed)});
        };
        mobile("press", ActionName::tap, xy);
        mobile("type", ActionName::input, {});
        mobile("type_at", ActionName::point_input, xy);
        mobile("swipe", ActionName::swipe, {{"x1", "from.x"}, {"y1", "from.y"}, {"x2", "to.x"}, {"y2", "to.y"}});
        mobile("scroll", ActionName::scroll, {{"dir", "direction"}});
        mobile("press_back", ActionName::back, {});
        mobile("press_home", ActionName::home, {});
        mobile("press_enter", ActionName::enter, {});
        mobile("note", ActionName::remember, {{"text", "content"}});
        mobile("status_complete", ActionName::set_task_status, {}, status(TaskStatus::complete));
        mobile("status_impossible", ActionName::set_task_status, {}, status(TaskStatus::infeasible));

        auto web = [&](std::string src, ActionName n, std::vector<std::pair<std::string, std::string>> ren,
                       Json fixed = Json::object()) {
            rows.push_back({"web", std::move(src), n, std::move(ren), C::unit_float, std::move(fixed)});
        };
        web("click", ActionName::click, {{"position", "point"}});
        web("tap", ActionName::tap, {{"position", "point"}});
        web("hover", ActionName::hover, {{"position", "point"}});
        web("select", ActionName::select, {{"position", "point"}});
        web("drag", ActionName::swipe, {{"start", "from"}, {"end", "to"}});
        web("highlight", ActionName::select_text, {});
        web("scroll", ActionName::scroll, {});
        web("type", ActionName::input, {{"value", "text"}});
        web("fill", ActionName::point_input, {{"position", "point"}, {"value", "text"}});
        web("key_enter", ActionName::enter, {});
        web("go_back", ActionName::back, {});
        web("go_home", ActionName::home, {});
        web("memorize", ActionName::remember, {{"text", "content"}});
        web("done", ActionName::set_task_status, {}, status(TaskStatus::complete));
        web("give_up", ActionName::set_task_status, {}, status(TaskStatus::infeasible));
        return UnificationTable(1, std::move(rows));
    }

    int version_ = 1;
    std::vector<UnificationEntry> entries_;
};

/// Inverse of `unify`: expresses a canonical action in `dialect`. The first
/// matching row wins; the result is checked by unifying it back.
inline std::pair<std::string, Json> to_dialect(const Action& a, std::string_view dialect,
                                               std::optional<ScreenDims> dims = std::nullopt,
                                               const UnificationTable& table = UnificationTable::builtin()) {
    Json canonical = to_json(a)["arguments"];
    const UnificationEntry* row = nullptr;
    for (const auto& e : table.entries()) {
        if (e.dialect != dialect || e.canonical_name != a.name) continue;
        bool fits = true;
        for (const auto& f : e.fixed_arguments.items()) {
            if (!canonical.contains(f.key()) || canonical[f.key()] != f.value()) fits = false;
        }
        if (fits) {
            row = &e;
            break;
        }
    }
    if (!row) {
        throw Error(ErrorCode::unification,
                    "no row expresses '" + std::string(to_string(a.name)) + "' in dialect '" + std::string(dialect) + "'",
                    std::string(dialect) + ":" + std::string(to_string(a.name)));
    }
    for (const auto& f : row->fixed_arguments.items()) canonical.erase(f.key());

    auto conv = row->coordinate_convention;
    if (conv == CoordinateConvention::pixel && !dims) {
        throw Error(ErrorCode::unification, "pixel dialect needs screen dims", std::string(dialect));
    }
    for (auto& item : canonical.items()) {
        if (!detail::is_point_argument(item.key())) continue;
        NormPoint p{item.value()["x"].get<int>(), item.value()["y"].get<int>()};
        Json out = Json::object();
        if (conv == CoordinateConvention::pixel) {
            auto px = denormalize_point(p, *dims);
            out["x"] = px.x;
            out["y"] = px.y;
        } else if (conv == CoordinateConvention::unit_float) {
            out["x"] = p.x / 1000.0;
            out["y"] = p.y / 1000.0;
        } else {
            out = item.value();
        }
        item.value() = out;
    }

    Json args = Json::object();
    for (const auto& [from, to] : row->argument_rename_map) {
        // walk the dotted destination, detach the leaf
        Json* parent = &canonical;
        std::string leaf = to;
        for (auto dot = leaf.find('.'); dot != std::string::npos; dot = leaf.find('.')) {
            std::string key = leaf.substr(0, dot);
            if (!parent->contains(key)) break;
            parent = &(*parent)[key];
            leaf = leaf.substr(dot + 1);
        }
        if (leaf.find('.') != std::string::npos || !parent->contains(leaf)) continue;
        args[from] = (*parent)[leaf];
        parent->erase(leaf);
    }
    for (auto& item : canonical.items()) {
        if (item.value().is_object() && item.value().empty()) continue;
        if (args.contains(item.key())) {
            throw Error(ErrorCode::unification, "argument '" + item.key() + "' collides in dialect form", item.key());
        }
        args[item.key()] = item.value();
    }
    std::string name = row->source_name;
    if (table.unify(name, args, dialect, dims) != a) {
        throw Error(ErrorCode::unification,
                    "'" + serialize_action(a) + "' does not survive a round trip through '" + std::string(dialect) + "'",
                    std::string(dialect));
    }
    return {name, args};
}

inline Action unify_action(std::string_view source_name, const Json& source_args, std::string_view dialect,
                           std::optional<ScreenDims> dims = std::nullopt,
                           const UnificationTable& table = UnificationTable::builtin()) {
    return table.unify(source_name, source_args, dialect, dims);
}

}  // namespace guiagent
