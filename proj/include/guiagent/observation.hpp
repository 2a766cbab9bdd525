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

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "guiagent/geometry.hpp"
#include "guiagent/json.hpp"

namespace guiagent {

struct SceneElement {
    std::string id;
    std::string role;  // button, text_field, list_item, tab, label, toggle, icon...
    std::string label;
    NormBox box;
    bool editable = false;
    std::string text;

    friend bool operator==(const SceneElement&, const SceneElement&) = default;
};

struct Scene {
    std::vector<SceneElement> elements;
    friend bool operator==(const Scene&, const Scene&) = default;
};

/// What the agent sees at one step: a structured scene descriptor or an
/// opaque text description, never a rendered image.
struct Observation {
    std::string id;
    ScreenDims dims{1, 1};
    std::variant<Scene, std::string> scene = Scene{};
    std::int64_t timestamp = 0;
    // Natural-language description, filled in by synthesis when available.
    std::optional<std::string> description;

    const Scene* structured() const noexcept { return std::get_if<Scene>(&scene); }

    friend bool operator==(const Observation&, const Observation&) = default;
};

inline void check_observation(const Observation& o) {
    if (o.id.empty()) throw Error(ErrorCode::validation, "observation id is empty", "id");
    check_dims(o.dims);
    if (const auto* s = o.structured()) {
        for (const auto& e : s->elements) check_box(e.box);
    }
}

/// Agent-facing text for an observation. Element ids are withheld so the
/// agent has to ground through coordinates.
inline std::string render_observation(const Observation& o) {
    std::string out = "Screen " + std::to_string(o.dims.width) + "x" + std::to_string(o.dims.height);
    const Scene* s = o.structured();
    if (!s) return out + "\n" + std::get<std::string>(o.scene);
    if (s->elements.empty()) return out + "\n(no visible elements)";
    for (const auto& e : s->elements) {
        out += "\n- " + e.role + " " + Json(e.label).dump() + " " + to_json(e.box).dump();
        if (e.editable) out += " editable";
        if (!e.text.empty()) out += " value=" + Json(e.text).dump();
    }
    return out;
}

inline Json to_json(const SceneElement& e) {
    Json j = Json::object();
    j["id"] = e.id;
    j["role"] = e.role;
    j["label"] = e.label;
    j["box"] = to_json(e.box);
    j["editable"] = e.editable;
    j["text"] = e.text;
    return j;
}

inline SceneElement scene_element_from_json(const Json& j) {
    detail::require_object(j, "element");
    SceneElement e;
    e.id = detail::require_string(j, "id", "element");
    e.role = detail::require_string(j, "role", "element");
    e.label = detail::optional_string(j, "label", "element");
    e.box = box_from_json(detail::require_key(j, "box", "element"), ParseMode::strict, "element.box");
    if (auto it = j.find("editable"); it != j.end()) {
        if (!it->is_boolean()) throw Error(ErrorCode::schema, "element.editable must be a boolean", "editable");
        e.editable = it->get<bool>();
    }
    e.text = detail::optional_string(j, "text", "element");
    return e;
}

inline Json to_json(const Observation& o) {
    Json j = Json::object();
    j["id"] = o.id;
    j["dims"] = to_json(o.dims);
    if (const auto* s = o.structured()) {
        Json elems = Json::array();
        for (const auto& e : s->elements) elems.push_back(to_json(e));
        Json scene = Json::object();
        scene["elements"] = elems;
        j["scene"] = scene;
    } else {
        j["scene"] = std::get<std::string>(o.scene);
    }
    j["timestamp"] = o.timestamp;
    if (o.description) j["description"] = *o.description;
    return j;
}

inline Observation observation_from_json(const Json& j) {
    detail::require_object(j, "observation");
    Observation o;
    o.id = detail::require_string(j, "id", "observation");
    o.dims = dims_from_json(detail::require_key(j, "dims", "observation"), "observation.dims");
    const Json& scene = detail::require_key(j, "scene", "observation");
    if (scene.is_string()) {
        o.scene = scene.get<std::string>();
    } else {
        detail::require_object(scene, "observation.scene");
        Scene s;
        const Json& elems = detail::require_key(scene, "elements", "observation.scene");
        if (!elems.is_array()) throw Error(ErrorCode::schema, "scene.elements must be an array", "elements");
        for (const auto& e : elems) s.elements.push_back(scene_element_from_json(e));
        o.scene = std::move(s);
    }
    if (auto it = j.find("timestamp"); it != j.end() && it->is_number_integer()) o.timestamp = it->get<std::int64_t>();
    if (auto it = j.find("description"); it != j.end() && it->is_string()) o.description = it->get<std::string>();
    return o;
}

}  // namespace guiagent
