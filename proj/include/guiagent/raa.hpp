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

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "guiagent/error.hpp"
#include "guiagent/geometry.hpp"
#include "guiagent/json.hpp"

/// Reference-augmented annotation: inline markers binding a span of text to
/// a point or box on the screen.
///
///     <ref type="point" x="500" y="500" note="submit">the Submit button</ref>
///     <ref type="box" x1="10" y1="20" x2="300" y2="80">Search</ref>
///
/// Markers do not nest. Attributes are emitted in the fixed order
/// type, coordinates, note. Inside `note`, '&' and '"' are written as
/// `&amp;` and `&quot;`; plain text and content are never escaped, so they
/// may not contain a marker opening or `</ref>`. See docs/raa_grammar.md.
namespace guiagent::raa {

enum class RefType { point, box };

struct PlainText {
    std::string text;
    friend bool operator==(const PlainText&, const PlainText&) = default;
};

struct Reference {
    std::variant<NormPoint, NormBox> target;
    std::optional<std::string> note;
    std::string content;

    RefType type() const noexcept { return std::holds_alternative<NormPoint>(target) ? RefType::point : RefType::box; }

    static Reference point(NormPoint p, std::string content, std::optional<std::string> note = std::nullopt) {
        return {p, std::move(note), std::move(content)};
    }
    static Reference box(NormBox b, std::string content, std::optional<std::string> note = std::nullopt) {
        return {b, std::move(note), std::move(content)};
    }

    friend bool operator==(const Reference&, const Reference&) = default;
};

using Segment = std::variant<PlainText, Reference>;

struct Document {
    std::vector<Segment> segments;

    /// Appends plain text, merging with a trailing plain segment.
    void append_text(std::string_view text) {
        if (text.empty()) return;
        if (!segments.empty()) {
            if (auto* last = std::get_if<PlainText>(&segments.back())) {
                last->text += text;
                return;
            }
        }
        segments.push_back(PlainText{std::string(text)});
    }
    void append(Reference ref) { segments.push_back(std::move(ref)); }

    std::size_t reference_count() const {
        std::size_t n = 0;
        for (const auto& s : segments) n += std::holds_alternative<Reference>(s) ? 1 : 0;
        return n;
    }

    friend bool operator==(const Document&, const Document&) = default;
};

namespace detail {

inline constexpr std::string_view kOpen = "<ref";
inline constexpr std::string_view kClose = "</ref>";

inline bool is_attr_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// "<ref" counts as a marker opening only when followed by whitespace or '>'.
inline bool opens_marker_at(std::string_view text, std::size_t pos) {
    if (text.compare(pos, kOpen.size(), kOpen) != 0) return false;
    std::size_t next = pos + kOpen.size();
    return next < text.size() && (is_attr_space(text[next]) || text[next] == '>');
}

inline std::optional<std::size_t> find_marker_open(std::string_view text, std::size_t from) {
    for (auto pos = text.find(kOpen, from); pos != std::string_view::npos; pos = text.find(kOpen, pos + 1)) {
        if (opens_marker_at(text, pos)) return pos;
    }
    return std::nullopt;
}

inline std::string escape_note(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '"') out += "&quot;";
        else out += c;
    }
    return out;
}

inline std::string unescape_note(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        if (s.compare(i, 6, "&quot;") == 0) {
            out += '"';
            i += 6;
        } else if (s.compare(i, 5, "&amp;") == 0) {
            out += '&';
            i += 5;
        } else {
            out += s[i++];
        }
    }
    return out;
}

struct MarkerFailure {
    std::size_t offset;
    std::string message;
};

struct MarkerResult {
    std::optional<Reference> ref;
    std::size_t end = 0;  // one past "</ref>"
    MarkerFailure failure{0, {}};
};

inline MarkerResult parse_marker(std::string_view text, std::size_t open) {
    MarkerResult r;
    auto fail = [&](std::size_t off, std::string msg) {
        r.ref.reset();
        r.failure = {off, std::move(msg)};
        return r;
    };
    std::size_t i = open + kOpen.size();
    std::vector<std::pair<std::string, std::pair<std::string, std::size_t>>> attrs;
    while (true) {
        std::size_t ws = i;
        while (i < text.size() && is_attr_space(text[i])) ++i;
        if (i >= text.size()) return fail(open, "unterminated <ref> tag");
        if (text[i] == '>') {
            ++i;
            break;
        }
        if (i == ws) return fail(i, "expected whitespace between attributes");
        std::size_t name_start = i;
        while (i < text.size() && (std::islower(static_cast<unsigned char>(text[i])) ||
                                   std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
            ++i;
        }
        if (i == name_start) return fail(i, "expected attribute name");
        std::string name(text.substr(name_start, i - name_start));
        if (i >= text.size() || text[i] != '=') return fail(i, "expected '=' after attribute " + name);
        ++i;
        if (i >= text.size() || text[i] != '"') return fail(i, "expected '\"' to open attribute " + name);
        ++i;
        std::size_t value_start = i;
        auto close_quote = text.find('"', i);
        if (close_quote == std::string_view::npos) return fail(value_start, "unterminated attribute " + name);
        for (const auto& a : attrs) {
            if (a.first == name) return fail(name_start, "duplicate attribute " + name);
        }
        attrs.push_back({name, {std::string(text.substr(value_start, close_quote - value_start)), value_start}});
        i = close_quote + 1;
    }

    auto attr = [&](std::string_view key) -> const std::pair<std::string, std::size_t>* {
        for (const auto& a : attrs) {
            if (a.first == key) return &a.second;
        }
        return nullptr;
    };
    auto number = [&](std::string_view key, int& out) -> std::optional<MarkerFailure> {
        const auto* v = attr(key);
        if (!v) return MarkerFailure{open, "missing coordinate " + std::string(key)};
        const std::string& s = v->first;
        if (s.empty() || s.size() > 4) return MarkerFailure{v->second, "bad coordinate " + std::string(key)};
        for (char c : s) {
            if (!std::isdigit(static_cast<unsigned char>(c))) {
                return MarkerFailure{v->second, "bad coordinate " + std::string(key)};
            }
        }
        out = std::stoi(s);
        if (out > kNormScale) return MarkerFailure{v->second, std::string(key) + " outside [0,1000]"};
        return std::nullopt;
    };

    const auto* type = attr("type");
    if (!type) return fail(open, "missing type attribute");
    Reference ref;
    std::vector<std::string_view> allowed;
    if (type->first == "point") {
        NormPoint p;
        if (auto f = number("x", p.x)) return fail(f->offset, f->message);
        if (auto f = number("y", p.y)) return fail(f->offset, f->message);
        ref.target = p;
        allowed = {"type", "x", "y", "note"};
    } else if (type->first == "box") {
        NormBox b;
        if (auto f = number("x1", b.x1)) return fail(f->offset, f->message);
        if (auto f = number("y1", b.y1)) return fail(f->offset, f->message);
        if (auto f = number("x2", b.x2)) return fail(f->offset, f->message);
        if (auto f = number("y2", b.y2)) return fail(f->offset, f->message);
        if (!b.valid()) return fail(type->second, "box corners out of order");
        ref.target = b;
        allowed = {"type", "x1", "y1", "x2", "y2", "note"};
    } else {
        return fail(type->second, "type must be \"point\" or \"box\"");
    }
    for (const auto& a : attrs) {
        bool ok = false;
        for (auto k : allowed) ok = ok || a.first == k;
        if (!ok) return fail(a.second.second, "unexpected attribute " + a.first);
    }
    if (const auto* note = attr("note")) ref.note = unescape_note(note->first);

    auto close = text.find(kClose, i);
    if (close == std::string_view::npos) return fail(open, "unclosed <ref> marker");
    if (auto inner = find_marker_open(text, i); inner && *inner < close) {
        return fail(*inner, "nested <ref> marker");
    }
    if (close == i) return fail(i, "reference content is empty");
    ref.content = std::string(text.substr(i, close - i));
    r.ref = std::move(ref);
    r.end = close + kClose.size();
    return r;
}

inline bool has_marker_syntax(std::string_view s) {
    return find_marker_open(s, 0).has_value() || s.find(kClose) != std::string_view::npos;
}

}  // namespace detail

/// Throws in strict mode on the first malformed marker; lenient mode keeps
/// malformed markup as plain text. Plain bytes are preserved verbatim.
inline Document parse(std::string_view text, ParseMode mode = ParseMode::strict) {
    Document doc;
    std::size_t i = 0;
    std::size_t plain_start = 0;
    while (i < text.size()) {
        auto open = detail::find_marker_open(text, i);
        auto stray = text.find(detail::kClose, i);
        if (stray != std::string_view::npos && (!open || stray < *open)) {
            if (mode == ParseMode::strict) {
                throw Error(ErrorCode::parse, "</ref> without matching opening marker", "raa", stray);
            }
            i = stray + detail::kClose.size();
            continue;
        }
        if (!open) break;
        auto result = detail::parse_marker(text, *open);
        if (!result.ref) {
            if (mode == ParseMode::strict) {
                throw Error(ErrorCode::parse, result.failure.message, "raa", result.failure.offset);
            }
            i = *open + 1;
            continue;
        }
        doc.append_text(text.substr(plain_start, *open - plain_start));
        doc.append(std::move(*result.ref));
        i = plain_start = result.end;
    }
    doc.append_text(text.substr(plain_start));
    return doc;
}

/// Invariants that make emit/parse exact inverses.
inline void check_document(const Document& doc) {
    bool prev_plain = false;
    for (std::size_t k = 0; k < doc.segments.size(); ++k) {
        const auto& seg = doc.segments[k];
        if (const auto* p = std::get_if<PlainText>(&seg)) {
            if (p->text.empty()) throw Error(ErrorCode::validation, "empty plain segment", "segment");
            if (prev_plain) throw Error(ErrorCode::validation, "adjacent plain segments", "segment");
            if (detail::has_marker_syntax(p->text)) {
                throw Error(ErrorCode::validation, "plain text contains marker syntax", "segment");
            }
            prev_plain = true;
            continue;
        }
        prev_plain = false;
        const auto& ref = std::get<Reference>(seg);
        if (ref.content.empty()) throw Error(ErrorCode::validation, "reference content is empty", "content");
        if (detail::has_marker_syntax(ref.content)) {
            throw Error(ErrorCode::validation, "reference content contains marker syntax", "content");
        }
        if (const auto* p = std::get_if<NormPoint>(&ref.target)) check_point(*p);
        else check_box(std::get<NormBox>(ref.target));
    }
}

inline std::string emit_reference(const Reference& ref) {
    std::string out = "<ref type=\"";
    if (const auto* p = std::get_if<NormPoint>(&ref.target)) {
        out += "point\" x=\"" + std::to_string(p->x) + "\" y=\"" + std::to_string(p->y) + '"';
    } else {
        const auto& b = std::get<NormBox>(ref.target);
        out += "box\" x1=\"" + std::to_string(b.x1) + "\" y1=\"" + std::to_string(b.y1) + "\" x2=\"" +
               std::to_string(b.x2) + "\" y2=\"" + std::to_string(b.y2) + '"';
    }
    if (ref.note) out += " note=\"" + detail::escape_note(*ref.note) + '"';
    out += '>';
    out += ref.content;
    out += detail::kClose;
    return out;
}

inline std::string emit(const Document& doc) {
    std::string out;
    for (const auto& seg : doc.segments) {
        if (const auto* p = std::get_if<PlainText>(&seg)) out += p->text;
        else out += emit_reference(std::get<Reference>(seg));
    }
    return out;
}

inline std::string plain_text(const Document& doc) {
    std::string out;
    for (const auto& seg : doc.segments) {
        if (const auto* p = std::get_if<PlainText>(&seg)) out += p->text;
        else out += std::get<Reference>(seg).content;
    }
    return out;
}

/// Removes markers, keeping the referenced text in place.
inline std::string strip(std::string_view text, ParseMode mode = ParseMode::strict) {
    return plain_text(parse(text, mode));
}

/// Every coordinate referenced in `text`; lenient so it can scan arbitrary content.
inline std::vector<Reference> references(std::string_view text, ParseMode mode = ParseMode::lenient) {
    std::vector<Reference> out;
    for (auto& seg : parse(text, mode).segments) {
        if (auto* r = std::get_if<Reference>(&seg)) out.push_back(std::move(*r));
    }
    return out;
}

}  // namespace guiagent::raa

namespace guiagent {

inline raa::Document parse_raa(std::string_view text, ParseMode mode = ParseMode::strict) {
    return raa::parse(text, mode);
}
inline std::string emit_raa(const raa::Document& doc) { return raa::emit(doc); }
inline std::string strip_raa(std::string_view text, ParseMode mode = ParseMode::strict) {
    return raa::strip(text, mode);
}

}  // namespace guiagent
