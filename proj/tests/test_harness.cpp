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

#include <algorithm>
#include <sstream>

#include "guiagent/fixtures.hpp"
#include "guiagent/harness.hpp"
#include "oracles.hpp"

using namespace guiagent;

namespace {

const std::vector<GroundingCase>& suite() {
    static const auto s = fixtures::grounding_suite();
    return s;
}

EpisodeResult result(std::string difficulty, bool success) {
    EpisodeResult r;
    r.difficulty = std::move(difficulty);
    r.success = success;
    r.status = success ? "complete" : "exhausted";
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// grounding

TEST(Grounding, SuiteShape) {
    EXPECT_EQ(suite().size(), 240u);
    std::map<std::pair<std::string, std::string>, int> per;
    for (const auto& c : suite()) ++per[{c.platform, c.element_type}];
    EXPECT_EQ(per.size(), 6u);
    for (const auto& [k, n] : per) EXPECT_EQ(n, 40);
    // same seed, same suite
    auto again = fixtures::grounding_suite();
    for (std::size_t i = 0; i < suite().size(); ++i) EXPECT_EQ(to_json(again[i]), to_json(suite()[i]));
}

TEST(Grounding, OracleScoresEverything) {
    fixtures::GroundingOracle oracle(suite());
    auto r = eval_grounding(suite(), oracle);
    EXPECT_EQ(r.overall().hits, 240u);
    EXPECT_DOUBLE_EQ(*r.overall().accuracy(), 1.0);
    EXPECT_TRUE(r.misses.empty());
    for (auto p : kPlatforms)
        for (auto t : kElementTypes) EXPECT_DOUBLE_EQ(*r.cell(p, t).accuracy(), 1.0);
}

TEST(Grounding, CornerAgentMatchesGoldsContainingTheCorner) {
    ConstantAgent corner(Action::tap({0, 0}), "corner");
    auto r = eval_grounding(suite(), corner);
    std::size_t expect = 0;
    for (const auto& c : suite()) expect += oracle::contains(0, 0, {c.gold.x1, c.gold.y1, c.gold.x2, c.gold.y2});
    EXPECT_GT(expect, 0u);
    EXPECT_LT(expect, suite().size());
    EXPECT_EQ(r.overall().hits, expect);
    EXPECT_EQ(r.misses.size(), suite().size() - expect);
}

TEST(Grounding, MalformedAgentScoresZeroAndLogsMisses) {
    MalformedAgent bad;
    auto r = eval_grounding(suite(), bad);
    EXPECT_EQ(r.overall().hits, 0u);
    ASSERT_EQ(r.misses.size(), 240u);
    EXPECT_TRUE(std::is_sorted(r.misses.begin(), r.misses.end(),
                               [](auto& a, auto& b) { return a.case_id < b.case_id; }));
    for (const auto& m : r.misses) EXPECT_EQ(m.reason, "unparseable answer");
    EXPECT_THROW(eval_grounding({}, bad), Error);
}

TEST(Grounding, AnswerForms) {
    auto pt = [](std::string_view s) { return extract_grounding_point(s).point; };
    EXPECT_EQ(pt("{\"name\":\"tap\",\"arguments\":{\"point\":{\"x\":3,\"y\":4}}}"), (NormPoint{3, 4}));
    EXPECT_EQ(pt("### Action\n{\"name\":\"click\",\"arguments\":{\"point\":{\"x\":3,\"y\":4}}}"), (NormPoint{3, 4}));
    EXPECT_EQ(pt("It is <ref type=\"box\" x1=\"10\" y1=\"10\" x2=\"21\" y2=\"30\">here</ref>"), (NormPoint{15, 20}));
    EXPECT_EQ(pt("{\"x\":7,\"y\":8}"), (NormPoint{7, 8}));
    EXPECT_FALSE(pt("{\"name\":\"back\",\"arguments\":{}}"));
    EXPECT_FALSE(pt("over there"));
}

TEST(Grounding, ReportIsOrderIndependentAndByteStable) {
    fixtures::GroundingOracle oracle(suite());
    ConstantAgent corner(Action::tap({0, 0}), "corner");
    auto a = eval_grounding(suite(), corner);
    auto reversed = suite();
    std::reverse(reversed.begin(), reversed.end());
    auto b = eval_grounding(reversed, corner);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    EXPECT_EQ(render_table(a), render_table(b));

    Json j = to_json(a);
    for (auto p : kPlatforms)
        for (auto t : kElementTypes) EXPECT_TRUE(j["cells"][std::string(p)][std::string(t)].contains("accuracy"));
    EXPECT_TRUE(j["avg"].contains("accuracy"));

    std::istringstream lines(render_table(eval_grounding(suite(), oracle)));
    std::string h1, h2, row;
    std::getline(lines, h1);
    std::getline(lines, h2);
    std::getline(lines, row);  // separator or values
    EXPECT_NE(h1.find("Mobile"), std::string::npos);
    EXPECT_NE(h1.find("Desktop"), std::string::npos);
    EXPECT_NE(h1.find("Avg."), std::string::npos);
    EXPECT_NE(h2.find("Text"), std::string::npos);
    EXPECT_NE(h2.find("Icon"), std::string::npos);
    EXPECT_NE(render_table(eval_grounding(suite(), oracle)).find("100.0"), std::string::npos);
}

TEST(Grounding, SuiteJsonRoundTrip) {
    std::stringstream ss;
    for (const auto& c : suite()) ss << to_json(c).dump() << "\n";
    auto back = read_grounding_suite(ss);
    ASSERT_EQ(back.size(), suite().size());
    for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(to_json(back[i]), to_json(suite()[i]));
    std::istringstream bad("{\"id\":\"x\"}\n");
    EXPECT_THROW(read_grounding_suite(bad), Error);
}

// ---------------------------------------------------------------------------
// episodes

TEST(Episodes, ScriptedSolutionsSucceed) {
    std::vector<EpisodeResult> all;
    for (const auto& app : mockenv::apps::all()) {
        for (const auto& task : app.tasks) {
            mockenv::Environment env(app);
            ScriptedAgent agent(mockenv::oracle_agent(app, task.id));
            auto r = run_episode(env, task.id, agent);
            EXPECT_TRUE(r.success) << task.id;
            EXPECT_EQ(r.status, "complete");
            EXPECT_EQ(r.steps, static_cast<int>(task.solution.size()));
            all.push_back(r);
        }
    }
    auto table = success_rate(all, "oracle");
    EXPECT_DOUBLE_EQ(*table.overall.accuracy(), 1.0);
    EXPECT_EQ(table.groups.at("easy").total, 5u);
    EXPECT_EQ(table.groups.at("middle").total, 5u);
    EXPECT_EQ(table.groups.at("hard").total, 3u);
}

TEST(Episodes, RandomAgentIsBoundedAndDeterministic) {
    auto app = mockenv::apps::contacts();
    for (const auto& task : app.tasks) {
        mockenv::Environment e1(app), e2(app);
        RandomAgent r1(5), r2(5);
        EpisodeConfig cfg;
        cfg.budget = 10;
        auto a = run_episode(e1, task.id, r1, cfg);
        auto b = run_episode(e2, task.id, r2, cfg);
        EXPECT_LE(a.steps, 10);
        EXPECT_EQ(to_json(a), to_json(b));
        EXPECT_TRUE(a.status == "complete" || a.status == "infeasible" || a.status == "exhausted") << a.status;
    }
}

TEST(Episodes, ZeroBudgetIsExhausted) {
    auto app = mockenv::apps::settings();
    mockenv::Environment env(app);
    ScriptedAgent agent(mockenv::oracle_agent(app, "turn_on_wifi"));
    EpisodeConfig cfg;
    cfg.budget = 0;
    auto r = run_episode(env, "turn_on_wifi", agent, cfg);
    EXPECT_EQ(r.steps, 0);
    EXPECT_EQ(r.status, "exhausted");
    EXPECT_FALSE(r.success);
}

TEST(Episodes, ParseFailurePolicies) {
    auto app = mockenv::apps::settings();
    MalformedAgent bad;
    mockenv::Environment env(app);
    auto aborted = run_episode(env, "turn_on_wifi", bad);
    EXPECT_EQ(aborted.status, "aborted");
    EXPECT_EQ(aborted.steps, 1);
    EXPECT_EQ(aborted.log.size(), 1u);

    EpisodeConfig cfg;
    cfg.budget = 4;
    cfg.on_parse_failure = ParseFailurePolicy::skip_step;
    auto skipped = run_episode(env, "turn_on_wifi", bad, cfg);
    EXPECT_EQ(skipped.status, "exhausted");
    EXPECT_EQ(skipped.steps, 4);
    EXPECT_EQ(skipped.log.size(), 4u);

    // an action outside the mobile space is a failure too, not a crash
    ConstantAgent hover(Action::hover({5, 5}));
    auto h = run_episode(env, "turn_on_wifi", hover);
    EXPECT_EQ(h.status, "aborted");
}

TEST(Episodes, EarlyCompletionFails) {
    auto app = mockenv::apps::settings();
    mockenv::Environment env(app);
    ConstantAgent quitter(Action::set_task_status(TaskStatus::complete));
    auto r = run_episode(env, "turn_on_wifi", quitter);
    EXPECT_EQ(r.steps, 1);
    EXPECT_FALSE(r.success);
    EXPECT_EQ(r.status, "complete");
}

// ---------------------------------------------------------------------------
// success tables

TEST(SuccessRate, OneOfFourEasy) {
    std::vector<EpisodeResult> rs = {result("easy", true), result("easy", false), result("easy", false),
                                     result("easy", false)};
    auto t = success_rate(rs, "x");
    EXPECT_DOUBLE_EQ(*t.rate("easy"), 0.25);
    EXPECT_FALSE(t.rate("middle"));
    EXPECT_FALSE(t.rate("hard"));
    Json j = to_json(t);
    EXPECT_TRUE(j["middle"].is_null());
    EXPECT_TRUE(j["hard"].is_null());
    EXPECT_DOUBLE_EQ(j["overall"]["rate"].get<double>(), 0.25);
}

TEST(SuccessRate, MixedTen) {
    // easy 3/4, middle 1/3, hard 0/3
    std::vector<EpisodeResult> rs = {result("easy", true),    result("easy", true),    result("easy", true),
                                     result("easy", false),   result("middle", true),  result("middle", false),
                                     result("middle", false), result("hard", false),   result("hard", false),
                                     result("hard", false)};
    auto t = success_rate(rs, "mix");
    EXPECT_DOUBLE_EQ(*t.rate("easy"), 3.0 / 4.0);
    EXPECT_DOUBLE_EQ(*t.rate("middle"), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(*t.rate("hard"), 0.0);
    EXPECT_DOUBLE_EQ(*t.overall.accuracy(), 4.0 / 10.0);
    std::string table = render_table(t);
    for (auto col : {"Easy", "Middle", "Hard", "Overall", "0.75", "0.33", "0.00", "0.40"})
        EXPECT_NE(table.find(col), std::string::npos) << col;
    auto shuffled = rs;
    std::reverse(shuffled.begin(), shuffled.end());
    EXPECT_EQ(to_json(success_rate(shuffled, "mix")).dump(), to_json(t).dump());
}

TEST(SuccessRate, Empty) {
    auto t = success_rate({}, "none");
    EXPECT_FALSE(t.overall.accuracy());
    EXPECT_TRUE(to_json(t)["overall"]["rate"].is_null());
    EXPECT_NE(render_table(t).find("-"), std::string::npos);
}
