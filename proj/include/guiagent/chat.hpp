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

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "guiagent/error.hpp"
#include "guiagent/json.hpp"

namespace guiagent {

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

inline Json to_json(const ChatMessage& m) {
    Json j = Json::object();
    j["role"] = m.role;
    j["content"] = m.content;
    return j;
}

inline ChatMessage chat_message_from_json(const Json& j) {
    detail::require_object(j, "message");
    ChatMessage m{detail::require_string(j, "role", "message"), detail::require_string(j, "content", "message")};
    if (m.role != "system" && m.role != "user" && m.role != "assistant") {
        throw Error(ErrorCode::schema, "unknown message role '" + m.role + "'", "message.role");
    }
    return m;
}

struct DecodeParams {
    double temperature = 0.0;
    int max_tokens = 1024;
    std::uint64_t seed = 0;
};

struct ClientInfo {
    std::string model;
    std::size_t max_context = 0;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual ClientInfo info() const = 0;
    /// Throws Error{transport} for retryable backend failures.
    virtual std::string complete(std::span<const ChatMessage> messages, const DecodeParams& params) = 0;
};

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t content_hash(std::span<const ChatMessage> messages) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& m : messages) {
        h = fnv1a(m.role, h);
        h = fnv1a(std::string_view("\x1f", 1), h);
        h = fnv1a(m.content, h);
        h = fnv1a(std::string_view("\x1e", 1), h);
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Reads the `task: <tag>` line a prompt template puts in its system message.
inline std::string prompt_task_tag(std::span<const ChatMessage> messages) {
    for (const auto& m : messages) {
        if (m.role != "system") continue;
        std::size_t pos = 0;
        while (pos <= m.content.size()) {
            auto eol = m.content.find('\n', pos);
            std::string_view line(m.content.data() + pos,
                                  (eol == std::string::npos ? m.content.size() : eol) - pos);
            if (line.starts_with("task: ")) return std::string(line.substr(6));
            if (eol == std::string::npos) break;
            pos = eol + 1;
        }
    }
    return {};
}

/// Sections of a user prompt laid out as "## name" header lines.
inline std::map<std::string, std::string> prompt_slots(std::string_view text) {
    std::map<std::string, std::string> slots;
    std::string current;
    std::string body;
    bool in_slot = false;
    auto flush = [&] {
        if (!in_slot) return;
        while (!body.empty() && body.back() == '\n') body.pop_back();
        slots[current] = body;
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        if (line.starts_with("## ")) {
            flush();
            current = std::string(line.substr(3));
            body.clear();
            in_slot = true;
        } else if (in_slot) {
            body += line;
            body += '\n';
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    flush();
    return slots;
}

/// Deterministic offline backend.
///
/// * echo: returns the last user message.
/// * template: picks the response template registered for the prompt's
///   task tag and fills `{slot}` (a "## slot" section of the user prompt),
///   `{slot|first_line}`, `{input}` (the whole last user message) and
///   `{hash}` (content hash of the request).
///
/// Canned responses keyed by request hash, then by task tag, take
/// precedence in both modes. Every request is recorded.
class StubClient final : public ChatClient {
public:
    enum class Mode { echo, templated };

    explicit StubClient(Mode mode = Mode::templated, std::map<std::string, std::string> templates = {})
        : mode_(mode), templates_(std::move(templates)) {}

    ClientInfo info() const override { return {"stub", 1u << 20}; }

    void set_canned(std::string key, std::string response) {
        std::lock_guard lock(mu_);
        canned_[std::move(key)] = std::move(response);
    }
    void set_template(std::string tag, std::string response_template) {
        std::lock_guard lock(mu_);
        templates_[std::move(tag)] = std::move(response_template);
    }
    void fail_next(int count) {
        std::lock_guard lock(mu_);
        pending_failures_ = count;
    }

    std::vector<std::vector<ChatMessage>> calls() const {
        std::lock_guard lock(mu_);
        return calls_;
    }

    std::string complete(std::span<const ChatMessage> messages, const DecodeParams&) override {
        std::unique_lock lock(mu_);
        calls_.emplace_back(messages.begin(), messages.end());
        if (pending_failures_ > 0) {
            --pending_failures_;
            throw Error(ErrorCode::transport, "stub: injected transport failure");
        }
        const std::string hash = hex64(content_hash(messages));
        const std::string tag = prompt_task_tag(messages);
        if (auto it = canned_.find(hash); it != canned_.end()) return it->second;
        if (auto it = canned_.find(tag); it != canned_.end()) return it->second;
        std::string last_user;
        for (const auto& m : messages) {
            if (m.role == "user") last_user = m.content;
        }
        if (mode_ == Mode::echo) return last_user;
        auto it = templates_.find(tag);
        if (it == templates_.end()) return "stub " + hash;
        return fill(it->second, prompt_slots(last_user), hash, last_user);
    }

private:
    static std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

    static std::string fill(const std::string& tmpl, const std::map<std::string, std::string>& slots,
                            const std::string& hash, const std::string& input) {
        std::string out;
        std::size_t i = 0;
        while (i < tmpl.size()) {
            auto open = tmpl.find('{', i);
            if (open == std::string::npos) break;
            auto close = tmpl.find('}', open);
            if (close == std::string::npos) break;
            out.append(tmpl, i, open - i);
            std::string key = tmpl.substr(open + 1, close - open - 1);
            bool first = false;
            if (auto bar = key.find('|'); bar != std::string::npos) {
                first = key.substr(bar + 1) == "first_line";
                key = key.substr(0, bar);
            }
            if (key == "hash") {
                out += hash;
            } else if (key == "input") {
                out += input;
            } else if (auto it = slots.find(key); it != slots.end()) {
                out += first ? first_line(it->second) : it->second;
            } else {
                out.append(tmpl, open, close - open + 1);
            }
            i = close + 1;
        }
        out.append(tmpl, i, std::string::npos);
        return out;
    }

    Mode mode_;
    std::map<std::string, std::string> templates_;
    std::map<std::string, std::string> canned_;
    std::vector<std::vector<ChatMessage>> calls_;
    int pending_failures_ = 0;
    mutable std::mutex mu_;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
    double multiplier = 2.0;
};

/// Retries transport failures with exponential backoff; other errors pass through.
class RetryingClient final : public ChatClient {
public:
    RetryingClient(ChatClient& inner, RetryPolicy policy = {}) : inner_(inner), policy_(policy) {}

    ClientInfo info() const override { return inner_.info(); }

    std::string complete(std::span<const ChatMessage> messages, const DecodeParams& params) override {
        auto delay = policy_.initial_backoff;
        for (int attempt = 1;; ++attempt) {
            try {
                return inner_.complete(messages, params);
            } catch (const Error& e) {
                if (!e.retryable() || attempt >= policy_.attempts) throw;
            }
            if (delay.count() > 0) std::this_thread::sleep_for(delay);
            delay = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(delay.count()) * policy_.multiplier));
        }
    }

private:
    ChatClient& inner_;
    RetryPolicy policy_;
};

}  // namespace guiagent
