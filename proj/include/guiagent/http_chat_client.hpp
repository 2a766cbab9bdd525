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
#include <string>

#include <httplib.h>

#include "guiagent/chat.hpp"

namespace guiagent {

/// Chat client for an OpenAI-compatible `/v1/chat/completions` endpoint
/// (vLLM, llama.cpp server and friends). Plain HTTP only.
class HttpChatClient final : public ChatClient {
public:
    struct Options {
        std::string model = "default";
        std::string api_key;
        std::string path = "/v1/chat/completions";
        std::chrono::seconds timeout{60};
        std::size_t max_context = 32768;
    };

    // separate overload: GCC rejects `Options options = {}` on a nested
    // struct with member initializers
    explicit HttpChatClient(std::string base_url) : HttpChatClient(std::move(base_url), Options()) {}
    HttpChatClient(std::string base_url, Options options)
        : base_url_(std::move(base_url)), options_(std::move(options)) {
        if (!base_url_.starts_with("http://")) {
            throw Error(ErrorCode::config, "endpoint must be an http:// URL, got '" + base_url_ + "'", "endpoint");
        }
    }

    ClientInfo info() const override { return {options_.model, options_.max_context}; }

    std::string complete(std::span<const ChatMessage> messages, const DecodeParams& params) override {
        Json msgs = Json::array();
        for (const auto& m : messages) msgs.push_back(to_json(m));
        Json body = Json::object();
        body["model"] = options_.model;
        body["messages"] = msgs;
        body["temperature"] = params.temperature;
        body["max_tokens"] = params.max_tokens;
        body["seed"] = params.seed;

        httplib::Client cli(base_url_);
        auto secs = static_cast<time_t>(options_.timeout.count());
        cli.set_connection_timeout(secs, 0);
        cli.set_read_timeout(secs, 0);
        cli.set_write_timeout(secs, 0);
        httplib::Headers headers;
        if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

        auto res = cli.Post(options_.path, headers, body.dump(), "application/json");
        if (!res) {
            throw Error(ErrorCode::transport, "request to " + base_url_ + " failed: " + httplib::to_string(res.error()),
                        base_url_);
        }
        if (res->status == 429 || res->status >= 500) {
            throw Error(ErrorCode::transport, "backend answered HTTP " + std::to_string(res->status), base_url_);
        }
        if (res->status != 200) {
            throw Error(ErrorCode::config, "backend rejected the request with HTTP " + std::to_string(res->status) +
                                               ": " + res->body.substr(0, 200),
                        base_url_);
        }
        Json reply = detail::parse_json_text(res->body, "completion");
        try {
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw Error(ErrorCode::schema, "completion has no choices[0].message.content", "choices");
        }
    }

private:
    std::string base_url_;
    Options options_;
};

}  // namespace guiagent
