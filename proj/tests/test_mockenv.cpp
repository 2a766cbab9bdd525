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

#include <random>

#include "guiagent/apps.hpp"
#include "guiagent/mockenv.hpp"
#include "oracles.hpp"

using namespace guiagent;
using namespace guiagent::mockenv;

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

StepResult run(Environment& env, const std::vector<Action>& actions) {
    StepResult last;
    for (const auto& a : actions) last = env.step(a);
    return last;
}

}  // namespace

TEST(MockEnv, EveryBundledTaskIsSolvedByItsScript) {
    std::size_t n = 0;
    for (const auto& app : apps::all()) {
        for (const auto& task : app.tasks) {
            Environment env(app);
            env.reset(task.id);
            auto plan = oracle_agent(app, task.id);
            auto r = run(env, plan);
            EXPECT_TRUE(r.done) << app.name << "/" << task.id;
            EXPECT_TRUE(r.success) << app.name << "/" << task.id;
            ++n;
        }
    }
    EXPECT_GE(n, 10u);
}

TEST(MockEnv, GivingUpEarlyFails) {
    for (const auto& app : apps::all()) {
        for (const auto& task : app.tasks) {
            Environment env(app);
            env.reset(task.id);
            auto r = env.step(Action::set_task_status(TaskStatus::complete));
            EXPECT_TRUE(r.done);
            EXPECT_FALSE(r.success) << task.id << " is satisfied in its initial state";
        }
    }
}

TEST(MockEnv, TapOnTabTransitions) {
    Environment env(apps::contacts());
    auto o = env.reset("open_contacts");
    EXPECT_EQ(o.id, "home@0");
    // anywhere inside the tab, edges included
    for (NormPoint p : {NormPoint{334, 920}, NormPoint{666, 999}, NormPoint{500, 960}}) {
        env.reset("open_contacts");
        env.step(Action::tap(p));
        EXPECT_EQ(env.state().screen, "contacts_list") << p.x << "," << p.y;
    }
    env.reset("open_contacts");
    env.step(Action::tap({500, 600}));  // empty space
    EXPECT_EQ(env.state().screen, "home");
    env.step(Action::click({500, 960}));
    EXPECT_EQ(env.state().screen, "contacts_list");
}

TEST(MockEnv, InputThenCompleteSucceeds) {
    auto app = apps::contacts();
    Environment env(app);
    env.reset("create_contact");
    env.step(Action::tap(apps::detail::at(app, "home", "tab_contacts")));
    env.step(Action::tap(apps::detail::at(app, "contacts_list", "create_contact_btn")));
    env.step(Action::tap(apps::detail::at(app, "new_contact", "first_name")));
    env.step(Action::input("Alice"));
    auto r = env.step(Action::set_task_status(TaskStatus::complete));
    EXPECT_TRUE(r.done);
    EXPECT_TRUE(r.success);
}

TEST(MockEnv, InputWithoutFocusGoesNowhere) {
    auto app = apps::contacts();
    Environment env(app);
    env.reset("create_contact");
    env.step(Action::tap(apps::detail::at(app, "home", "tab_contacts")));
    env.step(Action::tap(apps::detail::at(app, "contacts_list", "create_contact_btn")));
    env.step(Action::input("Alice"));
    EXPECT_EQ(env.state().fields.count("first_name"), 0u);
    EXPECT_FALSE(env.step(Action::set_task_status(TaskStatus::complete)).success);
}

TEST(MockEnv, FocusDoesNotSurviveScreenChange) {
    auto app = apps::contacts();
    Environment env(app);
    env.reset("search_contact");
    env.step(Action::tap(apps::detail::at(app, "home", "search_field")));
    ASSERT_EQ(env.state().focus, "search_field");
    env.step(Action::tap(apps::detail::at(app, "home", "tab_contacts")));
    EXPECT_FALSE(env.state().focus.has_value());
}

TEST(MockEnv, TerminalStates) {
    Environment env(apps::settings());
    env.reset("turn_on_wifi");
    auto r = env.step(Action::set_task_status(TaskStatus::infeasible));
    EXPECT_TRUE(r.done);
    EXPECT_FALSE(r.success);
    EXPECT_EQ(code_of([&] { env.step(Action::back()); }), ErrorCode::state);

    env.reset("turn_on_wifi");
    r = env.step(Action::set_task_status(TaskStatus::continue_));
    EXPECT_FALSE(r.done);
}

TEST(MockEnv, Errors) {
    Environment env(apps::settings());
    EXPECT_EQ(code_of([&] { env.step(Action::back()); }), ErrorCode::state);
    EXPECT_EQ(code_of([&] { env.reset("no_such_task"); }), ErrorCode::lookup);
    env.reset("turn_on_wifi");
    EXPECT_EQ(code_of([&] { env.step(Action::tap({1001, 5})); }), ErrorCode::range);
    EXPECT_EQ(code_of([&] { oracle_agent(apps::settings(), "nope"); }), ErrorCode::lookup);
    EXPECT_EQ(code_of([&] { oracle_agent(apps::messages(), "scroll_inbox", ActionSpaceConfig{{ActionName::tap}, "tap-only"}); }),
              ErrorCode::not_in_space);
    EXPECT_EQ(code_of([&] { Environment(apps::settings(), {1.5, 0}); }), ErrorCode::config);
}

TEST(MockEnv, ObservationShowsLiveFieldValues) {
    auto app = apps::settings();
    Environment env(app);
    env.reset("turn_on_wifi");
    env.step(Action::tap(apps::detail::at(app, "main", "wifi_item")));
    auto before = render_observation(env.observe());
    EXPECT_NE(before.find("\"Use Wi-Fi\" {\"x1\":40,\"y1\":160,\"x2\":960,\"y2\":240} value=\"off\""), std::string::npos)
        << before;
    auto r = env.step(Action::tap(apps::detail::at(app, "wifi", "wifi_toggle")));
    EXPECT_NE(render_observation(r.observation).find("value=\"on\""), std::string::npos);
    EXPECT_EQ(r.observation.id, "wifi@2");
    EXPECT_EQ(r.observation.timestamp, 2);
    // toggling twice turns it off again
    env.step(Action::tap(apps::detail::at(app, "wifi", "wifi_toggle")));
    EXPECT_EQ(env.state().fields.at("wifi_toggle"), "off");
}

TEST(MockEnv, HitTestPicksTopMostAgainstBruteForce) {
    Screen sc{"s", {100, 100}, {}};
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> c(0, 1000);
    for (int i = 0; i < 12; ++i) {
        int x1 = c(rng), x2 = c(rng), y1 = c(rng), y2 = c(rng);
        sc.elements.push_back({"e" + std::to_string(i), "button", "", {std::min(x1, x2), std::min(y1, y2),
                                                                        std::max(x1, x2), std::max(y1, y2)}});
    }
    for (int k = 0; k < 2000; ++k) {
        NormPoint p{c(rng), c(rng)};
        const SceneElement* expect = nullptr;
        for (auto it = sc.elements.rbegin(); it != sc.elements.rend(); ++it) {
            if (oracle::contains(p.x, p.y, {it->box.x1, it->box.y1, it->box.x2, it->box.y2})) {
                expect = &*it;
                break;
            }
        }
        EXPECT_EQ(Environment::hit_test(sc, p), expect);
    }
}

TEST(MockEnv, RunsAreDeterministic) {
    auto app = apps::messages();
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> c(0, 1000);
    std::vector<Action> actions;
    for (int i = 0; i < 200; ++i) {
        switch (i % 4) {
        case 0: actions.push_back(Action::tap({c(rng), c(rng)})); break;
        case 1: actions.push_back(Action::scroll(i % 8 == 1 ? Direction::down : Direction::up)); break;
        case 2: actions.push_back(Action::input("x" + std::to_string(i))); break;
        default: actions.push_back(Action::back()); break;
        }
    }
    Environment a(app), b(app);
    a.reset("start_chat");
    b.reset("start_chat");
    for (const auto& act : actions) {
        auto ra = a.step(act);
        auto rb = b.step(act);
        ASSERT_EQ(ra.observation, rb.observation);
        ASSERT_EQ(a.state(), b.state());
    }
}

TEST(MockEnv, SnapshotRestoreResumesIdentically) {
    auto app = apps::contacts();
    auto plan = oracle_agent(app, "create_contact_full");
    for (double p : {0.0, 0.4}) {
        Environment a(app, {p, 99});
        a.reset("create_contact_full");
        run(a, {plan.begin(), plan.begin() + 3});
        Json snap = a.snapshot();

        Environment b(app, {p, 99});
        b.restore(Json::parse(snap.dump()));
        EXPECT_EQ(a.state(), b.state());
        // a fixed tail of taps exercises the rng as well
        for (int i = 0; i < 20; ++i) {
            auto act = Action::tap({500, 960});
            EXPECT_EQ(a.step(act).observation, b.step(act).observation);
        }
        EXPECT_EQ(a.snapshot(), b.snapshot());
    }
    Environment c(apps::settings());
    Environment d(app);
    d.reset("open_contacts");
    EXPECT_EQ(code_of([&] { c.restore(d.snapshot()); }), ErrorCode::state);
}

TEST(MockEnv, RuleFailuresAreSeeded) {
    auto app = apps::contacts();
    Environment always(app, {1.0, 1});
    always.reset("open_contacts");
    auto r = run(always, oracle_agent(app, "open_contacts"));
    EXPECT_FALSE(r.success);
    EXPECT_EQ(always.state().screen, "home");

    auto trace = [&](std::uint64_t seed) {
        Environment env(app, {0.5, seed});
        env.reset("open_contacts");
        std::string screens;
        for (int i = 0; i < 64; ++i) {
            env.step(Action::tap(i % 2 ? NormPoint{500, 960} : NormPoint{150, 960}));
            screens += env.state().screen + ";";
        }
        return screens;
    };
    EXPECT_EQ(trace(3), trace(3));
    EXPECT_NE(trace(3), trace(4));
}

TEST(MockEnv, ScriptJsonRoundTrip) {
    for (const auto& app : apps::all()) {
        Json j = to_json(app);
        AppScript back = script_from_json(Json::parse(j.dump()));
        EXPECT_EQ(to_json(back), j);
        Environment a(app), b(back);
        for (const auto& t : app.tasks) {
            a.reset(t.id);
            b.reset(t.id);
            for (const auto& act : t.solution) EXPECT_EQ(a.step(act).observation, b.step(act).observation);
            EXPECT_TRUE(b.state().success);
        }
    }
}

TEST(MockEnv, MalformedScriptsAreRejected) {
    auto base = apps::contacts();
    auto bad = base;
    bad.initial_screen = "nowhere";
    EXPECT_EQ(code_of([&] { check_script(bad); }), ErrorCode::validation);
    bad = base;
    bad.rules.push_back(apps::detail::press("home", "no_such_element", "home"));
    EXPECT_EQ(code_of([&] { check_script(bad); }), ErrorCode::validation);
    bad = base;
    bad.rules[0].next_screen = "void";
    EXPECT_EQ(code_of([&] { check_script(bad); }), ErrorCode::validation);
    bad = base;
    bad.screens[0].elements.push_back(bad.screens[0].elements[0]);
    EXPECT_EQ(code_of([&] { check_script(bad); }), ErrorCode::validation);
    bad = base;
    bad.tasks[0].checkers.clear();
    EXPECT_EQ(code_of([&] { check_script(bad); }), ErrorCode::validation);

    Json j = to_json(base);
    j["rules"][0]["mutations"] = Json::array({{{"op", "explode"}, {"field", "x"}}});
    EXPECT_EQ(code_of([&] { script_from_json(j); }), ErrorCode::schema);
    j = to_json(base);
    j["rules"][0]["trigger"]["actions"] = Json::array({"teleport"});
    EXPECT_EQ(code_of([&] { script_from_json(j); }), ErrorCode::unknown_action);
}
