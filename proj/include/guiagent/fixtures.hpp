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

#include <random>
#include <string>
#include <vector>

#include "guiagent/apps.hpp"
#include "guiagent/harness.hpp"
#include "guiagent/mockenv.hpp"
#include "guiagent/synthesis.hpp"
#include "guiagent/unification.hpp"

// Bundled data built from the mock apps: a trajectory corpus in two source
// dialects, raw stage-1 records, and a grounding suite.
namespace guiagent::fixtures {

/// Runs `actions` in the app and records what was seen before each one.
/// Observation ids are prefixed with the trajectory id so they stay unique
/// across a corpus.
inline RawTrajectory record_trajectory(const mockenv::AppScript& app, const std::string& task_id,
                                       const std::vector<Action>& actions, const std::string& dialect,
                                       const std::string& id, bool require_success = true) {
    mockenv::Environment env(app);
    Observation o = env.reset(task_id);
    RawTrajectory t;
    t.id = id;
    t.dataset = "mock-" + app.name;
    t.dialect = dialect;
    t.platform = dialect == "web" ? "web" : app.platform;
    t.goal = env.task().goal;
    for (const auto& a : actions) {
        if (env.done()) throw Error(ErrorCode::state, id + ": actions continue after the task ended");
        Observation seen = o;
        seen.id = id + "/" + o.id;
        auto [name, args] = to_dialect(a, dialect, seen.dims);
        t.steps.push_back({seen, name, args, std::nullopt});
        o = env.step(a).observation;
    }
    if (require_success && !env.state().success) {
        throw Error(ErrorCode::state, id + ": recorded run does not solve task " + task_id);
    }
    return t;
}

/// A point on the app's initial screen that hits nothing.
inline NormPoint empty_spot(const mockenv::AppScript& app) {
    const mockenv::Screen& s = *app.screen(app.initial_screen);
    for (int y = 500; y <= 1000; y += 10) {
        for (int x = 500; x <= 1000; x += 10) {
            if (!mockenv::Environment::hit_test(s, {x, y})) return {x, y};
        }
    }
    throw Error(ErrorCode::lookup, "no empty spot on " + app.name);
}

/// Four runs per bundled task: the scripted solution in the mobile and web
/// dialects, and each with a harmless detour first (a back press on the
/// start screen, a tap on empty space).
inline std::vector<RawTrajectory> bundled_corpus() {
    std::vector<RawTrajectory> out;
    for (const auto& app : mockenv::apps::all()) {
        for (const auto& task : app.tasks) {
            auto plan = mockenv::oracle_agent(app, task.id);
            auto with_back = plan;
            with_back.insert(with_back.begin(), Action::back());
            auto with_tap = plan;
            with_tap.insert(with_tap.begin(), Action::tap(empty_spot(app)));
            std::string base = app.name + "." + task.id;
            out.push_back(record_trajectory(app, task.id, plan, "mobile_traj", base + ".m"));
            out.push_back(record_trajectory(app, task.id, plan, "web", base + ".w"));
            out.push_back(record_trajectory(app, task.id, with_back, "mobile_traj", base + ".mb"));
            out.push_back(record_trajectory(app, task.id, with_tap, "web", base + ".wt"));
        }
    }
    return out;
}

/// Raw stage-1 records in three source formats, built from the app screens.
inline std::vector<Stage1Input> bundled_stage1() {
    std::vector<Stage1Input> out;
    std::size_t n = 0;
    for (const auto& app : mockenv::apps::all()) {
        for (const auto& screen : app.screens) {
            std::string labels;
            for (const auto& e : screen.elements) {
                if (e.label.empty()) continue;
                ++n;
                std::string id = app.name + "." + screen.id + "." + e.id;
                PixelPoint tl = denormalize_point({e.box.x1, e.box.y1}, screen.dims);
                PixelPoint br = denormalize_point({e.box.x2, e.box.y2}, screen.dims);
                Json dims = to_json(screen.dims);
                if (n % 3 == 0) {
                    // referring expression, [0,1] floats
                    out.push_back({"refexp",
                                   {{"id", id + ".ref"},
                                    {"dataset", "mock-refexp"},
                                    {"kind", "grounding"},
                                    {"dims", dims},
                                    {"expression", n % 2 ? std::string("the ") + e.label + " " + e.role : e.label},
                                    {"target_box", {e.box.x1 / 1000.0, e.box.y1 / 1000.0, e.box.x2 / 1000.0, e.box.y2 / 1000.0}},
                                    {"target_text", e.label}}});
                } else {
                    out.push_back({"screen_qa",
                                   {{"id", id + ".ground"},
                                    {"dataset", "mock-screenqa"},
                                    {"kind", "grounding"},
                                    {"dims", dims},
                                    {"question", n % 4 == 1 ? e.label : "Where is the " + e.label + " " + e.role + "?"},
                                    {"bbox", {tl.x, tl.y, br.x, br.y}},
                                    {"element_text", e.label}}});
                }
                if (!e.text.empty()) {
                    out.push_back({"screen_qa",
                                   {{"id", id + ".qa"},
                                    {"dataset", "mock-screenqa"},
                                    {"kind", "qa"},
                                    {"dims", dims},
                                    {"question", "What is the value shown for " + e.label + "?"},
                                    {"answer", "It shows " + e.text + " in " + e.label + "."},
                                    {"bbox", {tl.x, tl.y, br.x, br.y}},
                                    {"element_text", e.label}}});
                }
                if (!labels.empty()) labels += ", ";
                labels += e.label;
            }
            out.push_back({"canonical",
                           {{"id", app.name + "." + screen.id + ".overview"},
                            {"dataset", "mock-overview"},
                            {"kind", "understanding"},
                            {"dims", to_json(screen.dims)},
                            {"instruction", ""},
                            {"response", "A " + app.name + " screen with: " + labels + "."}}});
        }
    }
    return out;
}

namespace detail {

struct Widget {
    std::string role;
    std::string label;
    std::string type;  // text | icon
};

inline const std::vector<Widget>& widget_pool() {
    static const std::vector<Widget> pool = {
        {"button", "Submit", "text"},        {"button", "Cancel", "text"},
        {"button", "Sign in", "text"},       {"link", "Privacy policy", "text"},
        {"tab", "Overview", "text"},         {"tab", "Details", "text"},
        {"menu_item", "Export as PDF", "text"}, {"list_item", "Quarterly report", "text"},
        {"text_field", "Email address", "text"}, {"label", "Total: $42.00", "text"},
        {"checkbox", "Remember me", "text"}, {"button", "Add to cart", "text"},
        {"icon", "search", "icon"},          {"icon", "settings gear", "icon"},
        {"icon", "close", "icon"},           {"icon", "hamburger menu", "icon"},
        {"icon", "shopping cart", "icon"},   {"icon", "bell", "icon"},
        {"icon", "download arrow", "icon"},  {"icon", "trash can", "icon"},
        {"icon", "back arrow", "icon"},      {"icon", "star", "icon"},
    };
    return pool;
}

inline ScreenDims platform_dims(std::string_view platform) {
    if (platform == "mobile") return {1080, 2400};
    if (platform == "desktop") return {1920, 1080};
    return {1440, 900};
}

inline std::string instruction_for(const Widget& w, std::string_view platform, std::size_t variant) {
    std::string verb = platform == "mobile" ? "Tap" : "Click";
    if (w.type == "icon") {
        switch (variant % 3) {
        case 0: return verb + " the " + w.label + " icon";
        case 1: return "Find the " + w.label + " icon";
        default: return verb + " on the " + w.label + " symbol";
        }
    }
    switch (variant % 3) {
    case 0: return verb + " \"" + w.label + "\"";
    case 1: return "Select the " + w.label + " " + w.role;
    default: return verb + " the element labeled \"" + w.label + "\"";
    }
}

}  // namespace detail

/// Seeded synthetic screens, `per_cell` cases for every (platform, type)
/// cell. Roughly one target in eight sits in the top-left corner so its
/// box contains (0,0).
inline std::vector<GroundingCase> grounding_suite(std::uint64_t seed = 7, std::size_t per_cell = 40) {
    std::vector<GroundingCase> out;
    std::mt19937_64 rng(seed);
    const auto& pool = detail::widget_pool();
    for (auto platform : kPlatforms) {
        for (auto type : kElementTypes) {
            std::vector<std::size_t> candidates;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (pool[i].type == type) candidates.push_back(i);
            }
            for (std::size_t k = 0; k < per_cell; ++k) {
                // a 4x6 grid of slots; each screen fills some of them
                const int cols = 4, rows = 6;
                std::vector<int> slots(cols * rows);
                for (int i = 0; i < cols * rows; ++i) slots[i] = i;
                std::shuffle(slots.begin(), slots.end(), rng);
                std::size_t count = 4 + rng() % 5;
                Scene scene;
                std::vector<std::size_t> used;
                for (std::size_t e = 0; e < count; ++e) {
                    std::size_t w = rng() % pool.size();
                    if (std::find(used.begin(), used.end(), w) != used.end()) continue;
                    used.push_back(w);
                    int slot = slots[e];
                    int cx = slot % cols, cy = slot / cols;
                    int x1 = cx * 250 + 10 + static_cast<int>(rng() % 30);
                    int y1 = cy * 166 + 10 + static_cast<int>(rng() % 30);
                    int bw = pool[w].type == "icon" ? 40 + static_cast<int>(rng() % 40) : 120 + static_cast<int>(rng() % 100);
                    int bh = 40 + static_cast<int>(rng() % 60);
                    scene.elements.push_back({"w" + std::to_string(e), pool[w].role, pool[w].label,
                                              {x1, y1, std::min(x1 + bw, 999), std::min(y1 + bh, 999)},
                                              pool[w].role == "text_field", ""});
                }
                // the target: a widget of the right type not already on screen
                std::size_t target;
                do {
                    target = candidates[rng() % candidates.size()];
                } while (std::find(used.begin(), used.end(), target) != used.end());
                const auto& w = pool[target];
                NormBox box;
                if (rng() % 8 == 0) {
                    int bw = w.type == "icon" ? 50 : 160;
                    box = {0, 0, bw, 60};
                } else {
                    int x1 = 20 + static_cast<int>(rng() % 760);
                    int y1 = 20 + static_cast<int>(rng() % 900);
                    int bw = w.type == "icon" ? 30 + static_cast<int>(rng() % 50) : 100 + static_cast<int>(rng() % 120);
                    box = {x1, y1, std::min(x1 + bw, 999), std::min(y1 + 30 + static_cast<int>(rng() % 50), 999)};
                }
                scene.elements.push_back({"target", w.role, w.label, box, w.role == "text_field", ""});
                // shuffle so the target is not always last
                std::shuffle(scene.elements.begin(), scene.elements.end(), rng);

                GroundingCase c;
                c.id = std::string(platform) + "-" + std::string(type) + "-" + std::to_string(k);
                c.platform = std::string(platform);
                c.element_type = std::string(type);
                c.observation.id = c.id;
                c.observation.dims = detail::platform_dims(platform);
                c.observation.scene = std::move(scene);
                c.instruction = detail::instruction_for(w, platform, rng());
                c.gold = box;
                check_case(c);
                out.push_back(std::move(c));
            }
        }
    }
    return out;
}

/// Answers every case with the center of its gold box.
class GroundingOracle final : public AgentBackend {
public:
    explicit GroundingOracle(std::span<const GroundingCase> cases) {
        for (const auto& c : cases) gold_[c.observation.id] = c.gold;
    }
    std::string name() const override { return "oracle"; }
    std::string act(const StepInput& in) override {
        auto it = gold_.find(in.observation.id);
        if (it == gold_.end()) throw Error(ErrorCode::lookup, "no gold box for " + in.observation.id);
        NormPoint p = it->second.center();
        Action a = in.action_space.allows(ActionName::click) ? Action::click(p) : Action::tap(p);
        return serialize_action(a);
    }

private:
    std::map<std::string, NormBox> gold_;
};

}  // namespace guiagent::fixtures
