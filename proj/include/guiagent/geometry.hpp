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
#include <compare>
#include <cstdint>
#include <string>

#include "guiagent/error.hpp"
#include "guiagent/json.hpp"

/// Screen geometry on the relative [0, 1000] grid.
///
/// The origin is the top-left corner of the screen, x grows rightward and y
/// downward. Pixel coordinates map to the grid with round-half-up:
///
///     norm = floor((pixel * 1000) / dim + 1/2)
///
/// computed in exact integer arithmetic. The inverse clamps to the last
/// addressable pixel so that 1000 always lands on screen.
namespace guiagent {

inline constexpr int kNormScale = 1000;

struct ScreenDims {
    int width = 0;
    int height = 0;

    constexpr bool valid() const noexcept { return width >= 1 && height >= 1; }
    friend constexpr bool operator==(const ScreenDims&, const ScreenDims&) = default;
};

struct PixelPoint {
    int x = 0;
    int y = 0;
    friend constexpr bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// Inclusive pixel rectangle.
struct PixelBox {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;
    friend constexpr bool operator==(const PixelBox&, const PixelBox&) = default;
};

struct NormPoint {
    int x = 0;
    int y = 0;

    constexpr bool valid() const noexcept {
        return x >= 0 && x <= kNormScale && y >= 0 && y <= kNormScale;
    }
    friend constexpr auto operator<=>(const NormPoint&, const NormPoint&) = default;
};

struct NormBox {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;

    constexpr bool valid() const noexcept {
        return 0 <= x1 && x1 <= x2 && x2 <= kNormScale && 0 <= y1 && y1 <= y2 && y2 <= kNormScale;
    }
    // Floor of the midpoint; always inside the box.
    constexpr NormPoint center() const noexcept { return {(x1 + x2) / 2, (y1 + y2) / 2}; }
    friend constexpr auto operator<=>(const NormBox&, const NormBox&) = default;
};

/// floor(num / den + 1/2) for num >= 0, den > 0.
constexpr std::int64_t round_half_up(std::int64_t num, std::int64_t den) noexcept {
    return (2 * num + den) / (2 * den);
}

inline void check_dims(const ScreenDims& dims) {
    if (dims.width < 1) throw Error(ErrorCode::validation, "screen width must be >= 1", "width");
    if (dims.height < 1) throw Error(ErrorCode::validation, "screen height must be >= 1", "height");
}

inline void check_point(const NormPoint& p) {
    if (p.x < 0 || p.x > kNormScale)
        throw Error(ErrorCode::range, "x=" + std::to_string(p.x) + " outside [0,1000]", "x");
    if (p.y < 0 || p.y > kNormScale)
        throw Error(ErrorCode::range, "y=" + std::to_string(p.y) + " outside [0,1000]", "y");
}

inline void check_box(const NormBox& b) {
    check_point({b.x1, b.y1});
    check_point({b.x2, b.y2});
    if (b.x1 > b.x2) throw Error(ErrorCode::validation, "box has x1 > x2", "x");
    if (b.y1 > b.y2) throw Error(ErrorCode::validation, "box has y1 > y2", "y");
}

namespace detail {

inline int normalize_axis(int pixel, int dim, const char* axis) {
    if (pixel < 0 || pixel >= dim) {
        throw Error(ErrorCode::range,
                    std::string(axis) + "=" + std::to_string(pixel) + " outside [0," + std::to_string(dim) + ")",
                    axis);
    }
    return static_cast<int>(round_half_up(std::int64_t{pixel} * kNormScale, dim));
}

inline int denormalize_axis(int norm, int dim) {
    auto px = round_half_up(std::int64_t{norm} * dim, kNormScale);
    return static_cast<int>(std::min<std::int64_t>(px, dim - 1));
}

}  // namespace detail

inline NormPoint normalize_point(PixelPoint p, ScreenDims dims) {
    check_dims(dims);
    return {detail::normalize_axis(p.x, dims.width, "x"), detail::normalize_axis(p.y, dims.height, "y")};
}

inline PixelPoint denormalize_point(NormPoint p, ScreenDims dims) {
    check_dims(dims);
    check_point(p);
    return {detail::denormalize_axis(p.x, dims.width), detail::denormalize_axis(p.y, dims.height)};
}

/// Corners are normalized independently; disordered corners are an error,
/// never silently swapped.
inline NormBox normalize_box(PixelBox b, ScreenDims dims) {
    check_dims(dims);
    if (b.x1 > b.x2) throw Error(ErrorCode::validation, "pixel box has x1 > x2", "x");
    if (b.y1 > b.y2) throw Error(ErrorCode::validation, "pixel box has y1 > y2", "y");
    NormPoint tl = normalize_point({b.x1, b.y1}, dims);
    NormPoint br = normalize_point({b.x2, b.y2}, dims);
    return {tl.x, tl.y, br.x, br.y};
}

/// Continuous corner convention: accepts 0 <= x <= width, so the screen
/// corners (0,0) and (width,height) map to (0,0) and (1000,1000).
inline NormPoint normalize_edge(PixelPoint p, ScreenDims dims) {
    check_dims(dims);
    if (p.x < 0 || p.x > dims.width)
        throw Error(ErrorCode::range, "edge x=" + std::to_string(p.x) + " outside [0,width]", "x");
    if (p.y < 0 || p.y > dims.height)
        throw Error(ErrorCode::range, "edge y=" + std::to_string(p.y) + " outside [0,height]", "y");
    return {static_cast<int>(round_half_up(std::int64_t{p.x} * kNormScale, dims.width)),
            static_cast<int>(round_half_up(std::int64_t{p.y} * kNormScale, dims.height))};
}

/// Edges inclusive.
constexpr bool point_in_box(NormPoint p, NormBox b) noexcept {
    return b.x1 <= p.x && p.x <= b.x2 && b.y1 <= p.y && p.y <= b.y2;
}

// JSON encodings: {"x":..,"y":..} and {"x1":..,"y1":..,"x2":..,"y2":..}.

inline Json to_json(const NormPoint& p) {
    Json j = Json::object();
    j["x"] = p.x;
    j["y"] = p.y;
    return j;
}

inline Json to_json(const NormBox& b) {
    Json j = Json::object();
    j["x1"] = b.x1;
    j["y1"] = b.y1;
    j["x2"] = b.x2;
    j["y2"] = b.y2;
    return j;
}

namespace detail {

inline int coord_field(const Json& obj, const char* key, std::string_view path) {
    const Json& v = require_key(obj, key, path);
    if (!v.is_number_integer()) {
        // Fractional and non-numeric coordinates are both rejected here.
        throw Error(ErrorCode::schema, std::string(path) + "." + key + " must be an integer", key);
    }
    if (v.is_number_unsigned()) {
        auto u = v.get<unsigned long long>();
        if (u > static_cast<unsigned long long>(kNormScale)) {
            throw Error(ErrorCode::range, std::string(key) + "=" + std::to_string(u) + " outside [0,1000]", key);
        }
        return static_cast<int>(u);
    }
    auto s = v.get<long long>();
    if (s < 0 || s > kNormScale) {
        throw Error(ErrorCode::range, std::string(key) + "=" + std::to_string(s) + " outside [0,1000]", key);
    }
    return static_cast<int>(s);
}

}  // namespace detail

inline NormPoint point_from_json(const Json& j, ParseMode mode = ParseMode::strict,
                                 std::string_view path = "point") {
    detail::require_object(j, path);
    if (mode == ParseMode::strict) detail::reject_unknown_keys(j, {"x", "y"}, path);
    return {detail::coord_field(j, "x", path), detail::coord_field(j, "y", path)};
}

inline NormBox box_from_json(const Json& j, ParseMode mode = ParseMode::strict,
                             std::string_view path = "box") {
    detail::require_object(j, path);
    if (mode == ParseMode::strict) detail::reject_unknown_keys(j, {"x1", "y1", "x2", "y2"}, path);
    NormBox b{detail::coord_field(j, "x1", path), detail::coord_field(j, "y1", path),
              detail::coord_field(j, "x2", path), detail::coord_field(j, "y2", path)};
    check_box(b);
    return b;
}

inline Json to_json(const ScreenDims& d) {
    Json j = Json::object();
    j["width"] = d.width;
    j["height"] = d.height;
    return j;
}

inline ScreenDims dims_from_json(const Json& j, std::string_view path = "dims") {
    detail::require_object(j, path);
    ScreenDims d{static_cast<int>(detail::require_integer(j, "width", path)),
                 static_cast<int>(detail::require_integer(j, "height", path))};
    check_dims(d);
    return d;
}

}  // namespace guiagent
