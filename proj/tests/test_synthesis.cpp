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

#include <sstream>
#include <thread>

#include "guiagent/fixtures.hpp"
#include "guiagent/synthesis.hpp"
#include "oracles.hpp"

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

std::string subject_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.subject();
    }
    ADD_FAILURE() << "expected guiagent::Error";
    return {};
}

const std::vector<Trajectory>& corpus() {
    static const std::vector<Trajectory> c = [] {
        std::vector<Trajectory> out;
        for (const auto& raw : fixtures::bundled_corpus()) out.push_back(decode_trajectory(raw));
        return out;
    }();
    return c;
}

const Trajectory& longest() {
    const Trajectory* best = &corpus().front();
    for (const auto& t : corpus()) {
        if (t.size() > best->size()) best = &t;
    }
    return *best;
}

StubClient stub() { return StubClient(StubClient::Mode::templated, TemplateSet::builtin().stub_templates()); }

Observation screen(std::vector<std::string> labels) {
    Observation o;
    o.id = "s-" + std::to_string(labels.size());
    o.dims = {1080, 2400};
    Scene s;
    int y = 100;
    for (auto& l : labels) {
        s.elements.push_back({l, "button", l, {100, y, 900, y + 60}, false, ""});
        y += 100;
    }
    o.scene = s;
    return o;
}

}  // namespace

// ---------------------------------------------------------------------------
// templates

TEST(Templates, RenderLaysOutSlots) {
    auto t = TemplateSet::builtin();
    auto msgs = t.render("reflection", {{"previous_expectation", "E"}, {"observation", "O\nO2"}});
    ASSERT_EQ(msgs.size(), 2u);
    EXPECT_EQ(prompt_task_tag(msgs), "reflection");
    auto slots = prompt_slots(msgs[1].content);
    EXPECT_EQ(slots["previous_expectation"], "E");
    EXPECT_EQ(slots["observation"], "O\nO2");
    EXPECT_EQ(code_of([&] { t.render("reflection", {{"observation", "O"}}); }), ErrorCode::synthesis);
    EXPECT_EQ(code_of([&] { t.render("nope", {}); }), ErrorCode::lookup);
}

TEST(Templates, JsonRoundTrip) {
    auto t = TemplateSet::builtin();
    Json j = to_json(t);
    auto back = template_set_from_json(Json::parse(j.dump()));
    EXPECT_EQ(to_json(back), j);
    j["prompts"].erase("expectation");
    EXPECT_EQ(code_of([&] { template_set_from_json(j); }), ErrorCode::config);
}

// ---------------------------------------------------------------------------
// stage 1

TEST(Stage1, PixelBoxIsNormalized) {
    Json raw = {{"id", "r1"},
                {"kind", "grounding"},
                {"dims", {{"width", 1080}, {"height", 1920}}},
                {"question", "Where is the Save button?"},
                {"bbox", {540, 100, 1079, 1919}},
                {"element_text", "Save"}};
    auto r = canonicalize_record(raw, "screen_qa");
    ASSERT_TRUE(r.box);
    EXPECT_EQ(r.box->x1, oracle::normalize_axis(540, 1080));
    EXPECT_EQ(r.box->y1, oracle::normalize_axis(100, 1920));
    EXPECT_EQ(r.box->x2, oracle::normalize_axis(1079, 1080));
    EXPECT_EQ(r.box->y2, oracle::normalize_axis(1919, 1920));
    EXPECT_EQ(r.instruction, "Where is the Save button?");
    auto refs = raa::references(r.response, ParseMode::strict);
    ASSERT_EQ(refs.size(), 1u);
    EXPECT_EQ(std::get<NormBox>(refs[0].target), *r.box);
    EXPECT_EQ(refs[0].content, "Save");

    auto s = standardize_record(raw, "screen_qa");
    EXPECT_EQ(s.kind, TaskKind::stage1_grounding);
    EXPECT_EQ(s.messages.back().content, r.response);
    EXPECT_EQ(s.source.trajectory, "r1");
}

TEST(Stage1, CanonicalizeIsIdempotent) {
    std::size_t n = 0;
    for (const auto& in : fixtures::bundled_stage1()) {
        auto once = canonicalize_record(in.record, in.dialect);
        auto twice = canonicalize_record(to_json(once), "canonical");
        EXPECT_EQ(once, twice) << once.id;
        ++n;
    }
    EXPECT_GT(n, 50u);
}

TEST(Stage1, VagueInstructionsComeFromTheRegistry) {
    auto templates = TemplateSet::builtin();
    for (std::string instr : {"", "  ", "Contacts", "Save?"}) {
        Json raw = {{"id", "vague-" + std::to_string(instr.size())},
                    {"kind", "grounding"},
                    {"dims", {{"width", 100}, {"height", 100}}},
                    {"instruction", instr},
                    {"point", {500, 500}},
                    {"label", "Save"}};
        auto r = canonicalize_record(raw, "canonical");
        // expected: registry entry picked by FNV-1a of the id, {label} filled by hand
        const auto& list = templates.instructions.at("grounding");
        std::string expect = list[fnv1a(raw["id"].get<std::string>()) % list.size()];
        expect.replace(expect.find("{label}"), 7, "Save");
        EXPECT_EQ(r.instruction, expect) << "'" << instr << "'";
    }
    Json clear = {{"id", "c"},
                  {"kind", "qa"},
                  {"dims", {{"width", 100}, {"height", 100}}},
                  {"instruction", "What is the total?"},
                  {"response", "It is 42."}};
    EXPECT_EQ(canonicalize_record(clear, "canonical").instruction, "What is the total?");
}

TEST(Stage1, ReferenceInsertion) {
    Json raw = {{"id", "q"},
                {"kind", "qa"},
                {"dims", {{"width", 1000}, {"height", 1000}}},
                {"instruction", "Which tab is open?"},
                {"response", "The Contacts tab is open."},
                {"box", {10, 20, 30, 40}},
                {"label", "Contacts"}};
    EXPECT_EQ(canonicalize_record(raw, "canonical").response,
              "The <ref type=\"box\" x1=\"10\" y1=\"20\" x2=\"30\" y2=\"40\">Contacts</ref> tab is open.");
    raw["label"] = "Phone";
    EXPECT_EQ(canonicalize_record(raw, "canonical").response,
              "The Contacts tab is open. (<ref type=\"box\" x1=\"10\" y1=\"20\" x2=\"30\" y2=\"40\">Phone</ref>)");
    raw.erase("box");
    EXPECT_EQ(canonicalize_record(raw, "canonical").response, "The Contacts tab is open.");
}

TEST(Stage1, UnmappableFieldsNameTheirPath) {
    Json raw = {{"id", "bad"},
                {"kind", "grounding"},
                {"dims", {{"width", 1080}, {"height", 1920}}},
                {"question", "Where?"},
                {"bbox", {0, 0, 1080, 10}}};
    EXPECT_EQ(code_of([&] { canonicalize_record(raw, "screen_qa"); }), ErrorCode::standardization);
    EXPECT_EQ(subject_of([&] { canonicalize_record(raw, "screen_qa"); }), "bbox[2]");
    raw["bbox"] = {50, 0, 10, 10};
    EXPECT_EQ(subject_of([&] { canonicalize_record(raw, "screen_qa"); }), "bbox");
    raw["bbox"] = "nope";
    EXPECT_EQ(subject_of([&] { canonicalize_record(raw, "screen_qa"); }), "bbox");
    raw.erase("dims");
    EXPECT_EQ(subject_of([&] { canonicalize_record(raw, "screen_qa"); }), "dims");
    Json qa = {{"id", "x"}, {"kind", "qa"}, {"dims", {{"width", 10}, {"height", 10}}}, {"question", "Why not?"}};
    EXPECT_EQ(subject_of([&] { canonicalize_record(qa, "screen_qa"); }), "answer");
    qa["kind"] = "poetry";
    EXPECT_EQ(subject_of([&] { canonicalize_record(qa, "screen_qa"); }), "kind");
    EXPECT_EQ(code_of([&] { canonicalize_record(qa, "klingon"); }), ErrorCode::lookup);
    Json floaty = {{"id", "f"},
                   {"kind", "grounding"},
                   {"dims", {{"width", 10}, {"height", 10}}},
                   {"expression", "the big red button"},
                   {"target_box", {0.1, 0.2, 1.5, 0.3}}};
    EXPECT_EQ(subject_of([&] { canonicalize_record(floaty, "refexp"); }), "target_box[2]");
}

TEST(Stage1, Refine) {
    Stage1Record r;
    r.id = "r";
    r.kind = "qa";
    r.instruction = "Which tab?";
    r.response = "The <ref type=\"point\" x=\"5\" y=\"6\">tab</ref> is open.";

    StubClient echo(StubClient::Mode::echo);
    auto same = refine_response(r, echo);
    EXPECT_EQ(same.text, r.response);
    EXPECT_FALSE(same.flagged);

    StubClient canned;
    canned.set_canned("refine", "Currently the <ref type=\"point\" x=\"5\" y=\"6\">tab</ref> is selected.");
    auto better = refine_response(r, canned);
    EXPECT_FALSE(better.flagged);
    EXPECT_EQ(better.text, "Currently the <ref type=\"point\" x=\"5\" y=\"6\">tab</ref> is selected.");

    canned.set_canned("refine", "Currently the <ref type=\"point\" x=\"5\">tab</ref> is selected.");
    auto broken = refine_response(r, canned);
    EXPECT_TRUE(broken.flagged);
    EXPECT_EQ(broken.text, r.response);

    canned.set_canned("refine", "Currently the <ref type=\"point\" x=\"7\" y=\"6\">tab</ref> is selected.");
    EXPECT_TRUE(refine_response(r, canned).flagged);
    canned.set_canned("refine", "   ");
    EXPECT_TRUE(refine_response(r, canned).flagged);

    canned.fail_next(1);
    EXPECT_EQ(code_of([&] { refine_response(r, canned); }), ErrorCode::transport);
}

// ---------------------------------------------------------------------------
// stage 2 pieces

TEST(Describe, CachedAndMentionsLabels) {
    auto client = stub();
    Synthesizer synth(client);
    auto o = screen({"Contacts", "Favorites", "Create new contact"});
    auto d1 = synth.describe(o, 3);
    auto d2 = synth.describe(o, 3);
    EXPECT_EQ(d1.text, d2.text);
    EXPECT_EQ(d1.t, 3u);
    EXPECT_EQ(client.calls().size(), 1u);
    for (auto l : {"Contacts", "Favorites", "Create new contact"}) EXPECT_NE(d1.text.find(l), std::string::npos) << l;

    auto empty = screen({});
    EXPECT_FALSE(synth.describe(empty).text.empty());

    Observation described = o;
    described.id = "given";
    described.description = "Already described.";
    EXPECT_EQ(synth.describe(described).text, "Already described.");
    EXPECT_EQ(client.calls().size(), 2u);

    StubClient blank;
    blank.set_canned("describe", "  ");
    Synthesizer s2(blank);
    EXPECT_EQ(code_of([&] { s2.describe(o); }), ErrorCode::synthesis);
}

TEST(Describe, SameIdDifferentContentIsNotConfused) {
    auto client = stub();
    Synthesizer synth(client);
    auto a = screen({"Alpha"});
    auto b = screen({"Beta"});
    ASSERT_EQ(a.id, b.id);
    EXPECT_NE(synth.describe(a).text, synth.describe(b).text);
}

TEST(Cache, ConcurrentGetOrComputeComputesOnce) {
    DescriptionCache cache;
    std::atomic<int> computed{0};
    std::vector<std::thread> pool;
    std::vector<std::string> got(16);
    for (int k = 0; k < 16; ++k) {
        pool.emplace_back([&, k] {
            got[k] = cache.get_or_compute("key", [&] {
                ++computed;
                std::this_thread::sleep_for(std::chrono::milliseconds(20));
                return std::string("value");
            });
        });
    }
    for (auto& t : pool) t.join();
    EXPECT_EQ(computed.load(), 1);
    for (const auto& g : got) EXPECT_EQ(g, "value");
    EXPECT_EQ(cache.misses(), 1u);
    EXPECT_EQ(cache.hits(), 15u);

    // failures are not cached
    EXPECT_THROW(cache.get_or_compute("bad", []() -> std::string { throw Error(ErrorCode::synthesis, "x"); }), Error);
    EXPECT_EQ(cache.get_or_compute("bad", [] { return std::string("ok"); }), "ok");
}

TEST(Reflection, Preconditions) {
    auto client = stub();
    Synthesizer synth(client);
    EXPECT_EQ(code_of([&] { synth.reflect(0, std::string("e"), "d"); }), ErrorCode::protocol);
    EXPECT_EQ(code_of([&] { synth.reflect(2, std::nullopt, "d"); }), ErrorCode::protocol);
    EXPECT_EQ(code_of([&] { synth.reflect(2, std::string(" "), "d"); }), ErrorCode::protocol);
    client.set_canned("reflection", "It worked.");
    EXPECT_EQ(synth.reflect(1, std::string("e"), "d"), "It worked.");
}

TEST(Strategic, SummaryNeverSeesTheAction) {
    auto client = stub();
    Synthesizer synth(client);
    Action now = Action::tap({123, 456});
    std::vector<HistoryItem> hist = {{0, "Screen showing A.\nmore", Action::back()}};
    auto out = synth.strategic("Open A", hist, "Screen showing B.", now);
    EXPECT_FALSE(out.summary.empty());
    EXPECT_FALSE(out.planning.empty());
    auto calls = client.calls();
    ASSERT_EQ(calls.size(), 2u);
    const std::string token = serialize_action(now);
    EXPECT_EQ(prompt_task_tag(calls[0]), "summary");
    EXPECT_EQ(calls[0][1].content.find(token), std::string::npos);
    EXPECT_EQ(calls[0][1].content.find("123"), std::string::npos);
    EXPECT_EQ(prompt_task_tag(calls[1]), "planning");
    EXPECT_NE(calls[1][1].content.find(token), std::string::npos);
    EXPECT_NE(calls[0][1].content.find(serialize_action(Action::back())), std::string::npos);

    auto again = synth.strategic("Open A", hist, "Screen showing B.", now);
    EXPECT_EQ(again.summary, out.summary);
    EXPECT_EQ(again.planning, out.planning);

    auto first = synth.strategic("Open A", {}, "Screen showing B.", now);
    EXPECT_EQ(prompt_slots(client.calls()[4][1].content)["history"], "(no earlier steps)");
}

TEST(Tactical, NamesTheAction) {
    auto client = stub();
    Synthesizer synth(client);
    StrategicOutput s{"sum", "plan"};
    for (const Action& a : {Action::tap({1, 2}), Action::scroll(Direction::up), Action::input("hi")}) {
        auto text = synth.tactical(std::nullopt, s, a);
        EXPECT_NE(text.find(to_string(a.name)), std::string::npos) << text;
        EXPECT_EQ(text, synth.tactical(std::nullopt, s, a));
    }
    client.set_canned("tactical", "Do the thing.");
    EXPECT_EQ(synth.tactical(std::string("f"), s, Action::back()), "Do the thing. Action: back.");
}

TEST(Expectation, CannedAndAtLastStep) {
    auto client = stub();
    client.set_canned("expectation", "The list appears.");
    Synthesizer synth(client);
    ReasoningRecord partial;
    partial.strategic_summary = "s";
    partial.strategic_planning = "p";
    partial.tactical = "t";
    EXPECT_EQ(synth.expectation("d", partial, Action::set_task_status(TaskStatus::complete)), "The list appears.");
}

// ---------------------------------------------------------------------------
// samples

TEST(StepSample, FirstStepHasNoReflection) {
    auto client = stub();
    Synthesizer synth(client);
    const auto& traj = longest();
    auto s = synth.build_step_sample(traj, 0);
    EXPECT_EQ(s.kind, TaskKind::stage2_step);
    EXPECT_EQ(s.messages.size(), 3u);
    EXPECT_EQ(s.messages.back().content.find("### Reflection"), std::string::npos);
    auto [r, a] = parse_step_output(s.messages.back().content, 0);
    EXPECT_FALSE(r.reflection);
    EXPECT_EQ(a, traj.actions[0]);
}

TEST(StepSample, WindowOfTwoAtStepFour) {
    auto client = stub();
    Synthesizer synth(client);
    const auto& traj = longest();
    ASSERT_GE(traj.size(), 5u);
    auto s = synth.build_step_sample(traj, 4);
    std::size_t assistants = 0, users = 0;
    for (const auto& m : s.messages) {
        assistants += m.role == "assistant";
        users += m.role == "user";
    }
    EXPECT_EQ(assistants - 1, 2u);  // history turns
    EXPECT_EQ(users, 3u);
    EXPECT_NE(s.messages[1].content.find("Step 2 observation"), std::string::npos);
    EXPECT_NE(s.messages[3].content.find("Step 3 observation"), std::string::npos);
    auto [r, a] = parse_step_output(s.messages.back().content, 4);
    EXPECT_TRUE(r.reflection);
    EXPECT_EQ(a, traj.actions[4]);
    EXPECT_EQ(code_of([&] { synth.build_step_sample(traj, traj.size()); }), ErrorCode::range);
}

TEST(NextStateSample, MatchesDescriptionOfNextObservation) {
    auto client = stub();
    Synthesizer synth(client);
    const auto& traj = longest();
    auto s = synth.build_next_state_sample(traj, 1);
    EXPECT_EQ(s.messages.back().content, synth.describe(traj.observations[2]).text);
    EXPECT_NE(s.messages[1].content.find(synth.describe(traj.observations[1]).text), std::string::npos);
    EXPECT_NE(s.messages[1].content.find(serialize_action(traj.actions[1])), std::string::npos);
    EXPECT_EQ(code_of([&] { synth.build_next_state_sample(traj, traj.size() - 1); }), ErrorCode::range);
}

TEST(Trajectory, CountsAndReflections) {
    auto client = stub();
    Synthesizer synth(client);
    for (const auto& traj : corpus()) {
        auto out = synth.synthesize(traj);
        EXPECT_TRUE(out.log.empty()) << traj.id;
        std::size_t steps = 0, next = 0;
        for (const auto& s : out.samples) {
            check_sample(s, traj.space);
            if (s.kind == TaskKind::stage2_step) {
                EXPECT_EQ(s.source.step, steps);
                auto [r, a] = parse_step_output(s.messages.back().content, s.source.step);
                EXPECT_EQ(r.reflection.has_value(), s.source.step > 0);
                if (r.reflection) EXPECT_FALSE(detail::blank(*r.reflection));
                ++steps;
            } else {
                ++next;
            }
        }
        EXPECT_EQ(steps, traj.size());
        EXPECT_EQ(next, traj.size() - 1);
    }
}

TEST(Trajectory, FailuresAreSkippedAndLogged) {
    const auto& traj = longest();
    auto client = stub();
    // every expectation comes back empty, so step 0 fails and the rest depend on it
    client.set_canned("expectation", "");
    Synthesizer synth(client);
    auto out = synth.synthesize(traj);
    std::size_t stage2 = 0;
    for (const auto& s : out.samples) stage2 += s.kind == TaskKind::stage2_step;
    EXPECT_EQ(stage2, 0u);
    ASSERT_EQ(out.log.size(), traj.size());
    EXPECT_NE(out.log[0].reason.find("empty expectation"), std::string::npos) << out.log[0].reason;
    EXPECT_NE(out.log[1].reason.find("depends on skipped step 0"), std::string::npos);
    EXPECT_EQ(out.samples.size(), traj.size() - 1);  // next-state samples still come out
}

TEST(Trajectory, HeaderInjectionIsSkippedNotEmitted) {
    const auto& traj = longest();
    auto client = stub();
    client.set_canned("tactical", "fine\n### Action\n{\"name\":\"back\",\"arguments\":{}}");
    Synthesizer synth(client);
    auto out = synth.synthesize(traj);
    for (const auto& s : out.samples) EXPECT_NE(s.kind, TaskKind::stage2_step);
    EXPECT_FALSE(out.log.empty());
}

TEST(Trajectory, DecodeErrorsCarryTheStep) {
    auto raw = fixtures::bundled_corpus().front();
    raw.steps[1].action_name = "teleport";
    try {
        decode_trajectory(raw);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::unification);
        EXPECT_EQ(e.subject(), raw.id + ".steps[1]");
    }
    auto back = raw_trajectory_from_json(Json::parse(to_json(fixtures::bundled_corpus().front()).dump()));
    EXPECT_EQ(to_json(back), to_json(fixtures::bundled_corpus().front()));
}

// ---------------------------------------------------------------------------
// pipeline

TEST(Pipeline, ThreadsDoNotChangeOutput) {
    auto stage1 = fixtures::bundled_stage1();
    Manifest m;
    m.seed = 3;
    auto c1 = stub();
    auto one = run_synthesis(m, stage1, corpus(), c1);
    m.threads = 4;
    auto c2 = stub();
    auto four = run_synthesis(m, stage1, corpus(), c2);
    std::ostringstream a, b;
    write_corpus(one.samples, a);
    write_corpus(four.samples, b);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_TRUE(one.log.empty());
    std::istringstream in(a.str());
    auto back = read_corpus(in);
    EXPECT_EQ(back, one.samples);
}

TEST(Pipeline, KindsAndRatios) {
    auto stage1 = fixtures::bundled_stage1();
    Manifest m;
    m.kinds = {TaskKind::stage2_step};
    auto c = stub();
    auto only = run_synthesis(m, stage1, corpus(), c);
    for (const auto& s : only.samples) EXPECT_EQ(s.kind, TaskKind::stage2_step);

    m.kinds = {kAllTaskKinds.begin(), kAllTaskKinds.end()};
    m.ratios[TaskKind::stage1_grounding] = 0.5;
    auto half = run_synthesis(m, stage1, {}, c);
    auto full_count = 0u, kept = 0u;
    for (const auto& in : stage1) {
        auto s = stage1_sample(canonicalize_record(in.record, in.dialect));
        if (s.kind != TaskKind::stage1_grounding) continue;
        ++full_count;
        kept += keep_sample(m, s);
    }
    std::size_t got = 0;
    for (const auto& s : half.samples) got += s.kind == TaskKind::stage1_grounding;
    EXPECT_EQ(got, kept);
    EXPECT_GT(kept, 0u);
    EXPECT_LT(kept, full_count);
}

TEST(Pipeline, RefineFlagsAreLogged) {
    auto stage1 = fixtures::bundled_stage1();
    Manifest m;
    m.refine = true;
    m.kinds = {TaskKind::stage1_qa};
    StubClient c;
    c.set_canned("refine", "<ref type=\"point\"");
    auto out = run_synthesis(m, stage1, {}, c);
    EXPECT_FALSE(out.samples.empty());
    EXPECT_FALSE(out.log.empty());
    for (const auto& l : out.log) EXPECT_EQ(l.event, "flagged");
}

TEST(Pipeline, ManifestJson) {
    Manifest m;
    m.seed = 11;
    m.window = 3;
    m.ratios[TaskKind::stage2_step] = 0.25;
    auto back = manifest_from_json(Json::parse(to_json(m).dump()));
    EXPECT_EQ(to_json(back), to_json(m));
    EXPECT_EQ(code_of([] { manifest_from_json({{"window", 0}}); }), ErrorCode::config);
    EXPECT_EQ(code_of([] { manifest_from_json({{"kinds", {"stage9"}}}); }), ErrorCode::config);
    EXPECT_EQ(code_of([] { manifest_from_json({{"ratios", {{"stage2_step", 1.5}}}}); }), ErrorCode::config);
    EXPECT_EQ(code_of([] { manifest_from_json({{"wat", 1}}); }), ErrorCode::schema);
    Manifest v2;
    v2.templates_version = "v2";
    auto c = stub();
    EXPECT_EQ(code_of([&] { run_synthesis(v2, {}, {}, c); }), ErrorCode::config);
}
