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

#include <json.hpp>

#include <initializer_list>
#include <string>
#include <string_view>

#include "guiagent/error.hpp"

namespace guiagent {

// Insertion-ordered so every emitter controls its own key order.
using Json = nlohmann::ordered_json;

enum class ParseMode { strict, lenient };

namespace detail {

inline Json parse_json_text(std::string_view text, std::string_view what) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse, std::string(what) + ": " + e.what(), std::string(what),
                    e.byte > 0 ? std::optional<std::size_t>(e.byte - 1) : std::nullopt);
    }
}

inline const Json& require_object(const Json& j, std::string_view path) {
    if (!j.is_object()) {
        throw Error(ErrorCode::schema, std::string(path) + " must be a JSON object", std::string(path));
    }
    return j;
}

inline const Json& require_key(const Json& obj, std::string_view key, std::string_view path) {
    auto it = obj.find(std::string(key));
    if (it == obj.end()) {
        throw Error(ErrorCode::schema, "missing field " + std::string(path) + "." + std::string(key),
                    std::string(path) + "." + std::string(key));
    }
    return *it;
}

inline std::string require_string(const Json& obj, std::string_view key, std::string_view path) {
    const Json& v = require_key(obj, key, path);
    if (!v.is_string()) {
        throw Error(ErrorCode::schema, std::string(path) + "." + std::string(key) + " must be a string",
                    std::string(path) + "." + std::string(key));
    }
    return v.get<std::string>();
}

inline std::string optional_string(const Json& obj, std::string_view key, std::string_view path,
                                   std::string fallback = {}) {
    auto it = obj.find(std::string(key));
    if (it == obj.end() || it->is_null()) return fallback;
    if (!it->is_string()) {
        throw Error(ErrorCode::schema, std::string(path) + "." + std::string(key) + " must be a string",
                    std::string(path) + "." + std::string(key));
    }
    return it->get<std::string>();
}

inline long long require_integer(const Json& obj, std::string_view key, std::string_view path) {
    const Json& v = require_key(obj, key, path);
    if (!v.is_number_integer()) {
        throw Error(ErrorCode::schema, std::string(path) + "." + std::string(key) + " must be an integer",
                    std::string(path) + "." + std::string(key));
    }
    if (v.is_number_unsigned() && v.get<unsigned long long>() > 1'000'000'000ULL) {
        throw Error(ErrorCode::range, std::string(path) + "." + std::string(key) + " is too large",
                    std::string(key));
    }
    return v.get<long long>();
}

// Rejects keys outside `allowed`; used by every strict-mode parser.
inline void reject_unknown_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                                std::string_view path) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (auto key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw Error(ErrorCode::schema, "unexpected field " + std::string(path) + "." + item.key(),
                        std::string(path) + "." + item.key());
        }
    }
}

}  // namespace detail
}  // namespace guiagent
