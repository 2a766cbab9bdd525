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

#include <gtest/gtest.h>

#include <thread>

#include "guiagent/chat.hpp"
#include "guiagent/http_chat_client.hpp"

using namespace guiagent;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected guiagent::Error";
    return ErrorCode::io;
}

std::vector<ChatMessage> prompt(std::string tag, std::string user) {
    return {{"system", "Be helpful.\ntask: " + tag + "\ntemplates: v1"}, {"user", std::move(user)}};
}

// counts calls, then throws the given code
class Failing final : public ChatClient {
public:
    explicit Failing(ErrorCode code) : code_(code) {}
    ClientInfo info() const override { return {"failing", 0}; }
    std::string complete(std::span<const ChatMessage>, const DecodeParams&) override {
        ++calls;
        throw Error(code_, "nope");
    }
    int calls = 0;

private:
    ErrorCode code_;
};

}  // namespace

TEST(Chat, Fnv1aKnownVectors) {
    // published FNV-1a 64 test vectors
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Chat, ContentHashSeesRolesAndBoundaries) {
    std::vector<ChatMessage> a = {{"user", "ab"}, {"user", "c"}};
    std::vector<ChatMessage> b = {{"user", "a"}, {"user", "bc"}};
    std::vector<ChatMessage> c = {{"assistant", "ab"}, {"user", "c"}};
    EXPECT_NE(content_hash(a), content_hash(b));
    EXPECT_NE(content_hash(a), content_hash(c));
    EXPECT_EQ(content_hash(a), content_hash(std::vector<ChatMessage>(a)));
}

TEST(Chat, PromptSlots) {
    auto slots = prompt_slots("Preface line\n\n## goal\nOpen it\n\n## scene\nline 1\nline 2\n");
    ASSERT_EQ(slots.size(), 2u);
    EXPECT_EQ(slots["goal"], "Open it");
    EXPECT_EQ(slots["scene"], "line 1\nline 2");
    EXPECT_TRUE(prompt_slots("no sections").empty());
    EXPECT_EQ(prompt_task_tag(prompt("describe", "x")), "describe");
    EXPECT_EQ(prompt_task_tag(std::vector<ChatMessage>{{"user", "task: fake"}}), "");
}

TEST(Chat, StubEcho) {
    StubClient stub(StubClient::Mode::echo);
    auto msgs = prompt("refine", "The <ref type=\"point\" x=\"1\" y=\"2\">button</ref> is blue.");
    EXPECT_EQ(stub.complete(msgs, {}), msgs[1].content);
    EXPECT_EQ(stub.calls().size(), 1u);
    EXPECT_EQ(stub.calls()[0], msgs);
}

TEST(Chat, StubTemplates) {
    StubClient stub(StubClient::Mode::templated,
                    {{"summary", "Goal {goal}; first {scene|first_line}; {missing}; all={input}|"}});
    auto msgs = prompt("summary", "## goal\nG\n\n## scene\nL1\nL2");
    EXPECT_EQ(stub.complete(msgs, {}), "Goal G; first L1; {missing}; all=## goal\nG\n\n## scene\nL1\nL2|");
    stub.set_template("hash", "h={hash}");
    auto h = prompt("hash", "x");
    EXPECT_EQ(stub.complete(h, {}), "h=" + hex64(content_hash(h)));
    // unknown tag: deterministic placeholder
    auto u = prompt("nope", "x");
    EXPECT_EQ(stub.complete(u, {}), "stub " + hex64(content_hash(u)));
    EXPECT_EQ(stub.complete(u, {}), stub.complete(u, {}));
}

TEST(Chat, CannedHashBeatsTag) {
    StubClient stub;
    auto a = prompt("reflection", "## previous_expectation\nA");
    auto b = prompt("reflection", "## previous_expectation\nB");
    stub.set_canned("reflection", "by tag");
    stub.set_canned(hex64(content_hash(a)), "by hash");
    EXPECT_EQ(stub.complete(a, {}), "by hash");
    EXPECT_EQ(stub.complete(b, {}), "by tag");
}

TEST(Chat, InjectedFailuresAreRetryable) {
    StubClient stub(StubClient::Mode::echo);
    stub.fail_next(2);
    auto msgs = prompt("x", "hi");
    try {
        stub.complete(msgs, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::transport);
        EXPECT_TRUE(e.retryable());
    }
    RetryingClient retry(stub, {3, std::chrono::milliseconds(0), 2.0});
    EXPECT_EQ(retry.complete(msgs, {}), "hi");
    EXPECT_EQ(stub.calls().size(), 3u);
}

TEST(Chat, RetryGivesUpAfterThreeAttempts) {
    Failing inner(ErrorCode::transport);
    RetryingClient retry(inner, {3, std::chrono::milliseconds(1), 2.0});
    EXPECT_EQ(code_of([&] { retry.complete(prompt("x", "y"), {}); }), ErrorCode::transport);
    EXPECT_EQ(inner.calls, 3);

    Failing other(ErrorCode::synthesis);
    RetryingClient no_retry(other, {3, std::chrono::milliseconds(1), 2.0});
    EXPECT_EQ(code_of([&] { no_retry.complete(prompt("x", "y"), {}); }), ErrorCode::synthesis);
    EXPECT_EQ(other.calls, 1);
}

TEST(Chat, StubIsThreadSafe) {
    StubClient stub(StubClient::Mode::echo);
    std::vector<std::thread> pool;
    for (int k = 0; k < 8; ++k) {
        pool.emplace_back([&, k] {
            for (int i = 0; i < 200; ++i) {
                auto msgs = prompt("t", std::to_string(k * 1000 + i));
                ASSERT_EQ(stub.complete(msgs, {}), msgs[1].content);
            }
        });
    }
    for (auto& t : pool) t.join();
    EXPECT_EQ(stub.calls().size(), 1600u);
}

TEST(HttpChat, TalksToCompatibleServer) {
    httplib::Server server;
    Json seen;
    int failures_left = 1;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        if (failures_left-- > 0) {
            res.status = 503;
            return;
        }
        seen = Json::parse(req.body);
        Json reply = {{"choices", Json::array({{{"message", {{"role", "assistant"}, {"content", "pong"}}}}})}};
        res.set_content(reply.dump(), "application/json");
    });
    server.Post("/bad/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"choices\":[]}", "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpChatClient::Options opt;
    opt.model = "tiny";
    opt.timeout = std::chrono::seconds(5);
    HttpChatClient http("http://127.0.0.1:" + std::to_string(port), opt);
    RetryingClient client(http, {3, std::chrono::milliseconds(1), 2.0});
    DecodeParams dp;
    dp.seed = 9;
    EXPECT_EQ(client.complete(prompt("x", "ping"), dp), "pong");
    EXPECT_EQ(seen["model"], "tiny");
    EXPECT_EQ(seen["seed"], 9);
    EXPECT_EQ(seen["messages"][1]["content"], "ping");

    opt.path = "/bad/v1/chat/completions";
    HttpChatClient bad("http://127.0.0.1:" + std::to_string(port), opt);
    EXPECT_EQ(code_of([&] { bad.complete(prompt("x", "y"), {}); }), ErrorCode::schema);

    server.stop();
    th.join();

    // nothing listens there any more
    opt.path = "/v1/chat/completions";
    opt.timeout = std::chrono::seconds(1);
    HttpChatClient gone("http://127.0.0.1:" + std::to_string(port), opt);
    EXPECT_EQ(code_of([&] { gone.complete(prompt("x", "y"), {}); }), ErrorCode::transport);
    EXPECT_EQ(code_of([] { HttpChatClient("https://example.com"); }), ErrorCode::config);
}
