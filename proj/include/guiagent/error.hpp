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

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace guiagent {

enum class ErrorCode {
    range,              // coordinate or index outside its domain
    validation,         // value violates a type invariant
    parse,              // malformed text (JSON, RAA markers)
    schema,             // well-formed JSON with missing/extra/mistyped fields
    unknown_action,     // action name outside the canonical space
    not_in_space,       // action disabled by the active ActionSpaceConfig
    unification,        // dialect mapping missing or ambiguous
    state,              // operation illegal in the current state
    protocol,           // reasoning-cycle rule violated
    structured_output,  // model output lacks a mandatory section
    synthesis,          // data synthesis produced unusable output
    standardization,    // raw record field cannot be mapped; subject is the field path
    transport,          // chat backend failure; retryable
    lookup,             // unknown id (task, screen, dialect, template)
    config,             // bad configuration or manifest
    io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::range: return "range";
    case ErrorCode::validation: return "validation";
    case ErrorCode::parse: return "parse";
    case ErrorCode::schema: return "schema";
    case ErrorCode::unknown_action: return "unknown_action";
    case ErrorCode::not_in_space: return "not_in_space";
    case ErrorCode::unification: return "unification";
    case ErrorCode::state: return "state";
    case ErrorCode::protocol: return "protocol";
    case ErrorCode::structured_output: return "structured_output";
    case ErrorCode::synthesis: return "synthesis";
    case ErrorCode::standardization: return "standardization";
    case ErrorCode::transport: return "transport";
    case ErrorCode::lookup: return "lookup";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
    }
    return "unknown";
}

/// Every failure raised by the library. `subject()` names the offending
/// entity (an axis, a section label, a field path, a dialect) and `offset()`
/// carries a byte position for text parsers.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string subject = {},
          std::optional<std::size_t> offset = std::nullopt)
        : std::runtime_error(compose(code, message, offset)),
          code_(code),
          subject_(std::move(subject)),
          offset_(offset) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& subject() const noexcept { return subject_; }
    std::optional<std::size_t> offset() const noexcept { return offset_; }

    bool retryable() const noexcept { return code_ == ErrorCode::transport; }

private:
    static std::string compose(ErrorCode code, const std::string& message,
                               std::optional<std::size_t> offset) {
        std::string out{to_string(code)};
        out += " error: ";
        out += message;
        if (offset) {
            out += " (at byte ";
            out += std::to_string(*offset);
            out += ')';
        }
        return out;
    }

    ErrorCode code_;
    std::string subject_;
    std::optional<std::size_t> offset_;
};

}  // namespace guiagent
