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
#include <atomic>
#include <functional>
#include <future>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "guiagent/actions.hpp"
#include "guiagent/chat.hpp"
#include "guiagent/observation.hpp"
#include "guiagent/protocol.hpp"
#include "guiagent/raa.hpp"
#include "guiagent/templates.hpp"
#include "guiagent/unification.hpp"

namespace guiagent {

// ---------------------------------------------------------------------------
// SFT samples

enum class TaskKind { stage1_grounding, stage1_qa, stage1_understanding, stage2_step, next_state_prediction };

inline constexpr std::array<TaskKind, 5> kAllTaskKinds = {TaskKind::stage1_grounding, TaskKind::stage1_qa,
                                                          TaskKind::stage1_understanding, TaskKind::stage2_step,
                                                          TaskKind::next_state_prediction};

constexpr std::string_view to_string(TaskKind k) noexcept {
    switch (k) {
    case TaskKind::stage1_grounding: return "stage1_grounding";
    case TaskKind::stage1_qa: return "stage1_qa";
    case TaskKind::stage1_understanding: return "stage1_understanding";
    case TaskKind::stage2_step: return "stage2_step";
    case TaskKind::next_state_prediction: return "next_state_prediction";
    }
    return "?";
}

inline TaskKind task_kind_from_string(std::string_view s) {
    for (auto k : kAllTaskKinds) {
        if (to_string(k) == s) return k;
    }
    throw Error(ErrorCode::schema, "unknown task kind '" + std::string(s) + "'", "task_kind");
}

struct SampleSource {
    std::string dataset;
    std::string trajectory;  // trajectory or record id
    std::size_t step = 0;
    friend bool operator==(const SampleSource&, const SampleSource&) = default;
};

struct SFTSample {
    TaskKind kind = TaskKind::stage2_step;
    SampleSource source;
    std::vector<ChatMessage> messages;
    friend bool operator==(const SFTSample&, const SFTSample&) = default;
};

/// Structural checks every emitted sample must pass. stage2 assistant turns
/// are re-parsed through the protocol and action modules.
inline void check_sample(const SFTSample& s, const ActionSpaceConfig& space = ActionSpaceConfig::full()) {
    auto fail = [&](const std::string& msg) {
        throw Error(ErrorCode::synthesis,
                    std::string(to_string(s.kind)) + " sample " + s.source.trajectory + "#" +
                        std::to_string(s.source.step) + ": " + msg);
    };
    if (s.source.trajectory.empty()) fail("missing source id");
    if (s.messages.empty()) fail("no messages");
    if (s.messages.back().role != "assistant") fail("last turn is not the assistant");
    for (const auto& m : s.messages) {
        if (m.role != "system" && m.role != "user" && m.role != "assistant") fail("bad role '" + m.role + "'");
        for (const auto& ref : raa::references(m.content, ParseMode::lenient)) {
            if (auto* p = std::get_if<NormPoint>(&ref.target); p && !p->valid()) fail("reference outside the grid");
            if (auto* b = std::get_if<NormBox>(&ref.target); b && !b->valid()) fail("reference outside the grid");
        }
    }
    const std::string& answer = s.messages.back().content;
    if (detail::blank(answer)) fail("empty assistant turn");
    switch (s.kind) {
    case TaskKind::stage2_step: {
        auto [r, a] = parse_step_output(answer, s.source.step, ParseMode::strict);
        require_valid(a, space);
        break;
    }
    case TaskKind::stage1_grounding:
    case TaskKind::stage1_qa:
    case TaskKind::stage1_understanding:
        raa::parse(answer, ParseMode::strict);
        break;
    case TaskKind::next_state_prediction: break;
    }
}

inline Json to_json(const SFTSample& s) {
    Json src = Json::object();
    src["dataset"] = s.source.dataset;
    src["trajectory"] = s.source.trajectory;
    src["step"] = s.source.step;
    Json msgs = Json::array();
    for (const auto& m : s.messages) msgs.push_back(to_json(m));
    Json j = Json::object();
    j["task_kind"] = std::string(to_string(s.kind));
    j["source"] = src;
    j["messages"] = msgs;
    return j;
}

inline SFTSample sft_sample_from_json(const Json& j) {
    detail::require_object(j, "sample");
    SFTSample s;
    s.kind = task_kind_from_string(detail::require_string(j, "task_kind", "sample"));
    const Json& src = detail::require_object(detail::require_key(j, "source", "sample"), "sample.source");
    s.source.dataset = detail::require_string(src, "dataset", "source");
    s.source.trajectory = detail::require_string(src, "trajectory", "source");
    s.source.step = static_cast<std::size_t>(detail::require_integer(src, "step", "source"));
    const Json& msgs = detail::require_key(j, "messages", "sample");
    if (!msgs.is_array()) throw Error(ErrorCode::schema, "sample.messages must be an array", "messages");
    for (const auto& m : msgs) s.messages.push_back(chat_message_from_json(m));
    return s;
}

inline void write_corpus(std::span<const SFTSample> samples, std::ostream& out) {
    for (const auto& s : samples) out << to_json(s).dump() << '\n';
}

inline std::vector<SFTSample> read_corpus(std::istream& in) {
    std::vector<SFTSample> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (detail::blank(line)) continue;
        try {
            out.push_back(sft_sample_from_json(detail::parse_json_text(line, "sample")));
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(n) + ": " + e.what(), e.subject());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stage 1: format standardization

/// Field layout and coordinate convention of one source annotation format.
struct Stage1Dialect {
    std::string name;
    CoordinateConvention coords = CoordinateConvention::norm1000;
    std::string instruction_key = "instruction";
    std::string response_key = "response";
    std::string box_key = "box";
    std::string point_key = "point";
    std::string label_key = "label";
};

inline const std::vector<Stage1Dialect>& stage1_dialects() {
    static const std::vector<Stage1Dialect> d = {
        {"canonical", CoordinateConvention::norm1000},
        {"screen_qa", CoordinateConvention::pixel, "question", "answer", "bbox", "tap", "element_text"},
        {"refexp", CoordinateConvention::unit_float, "expression", "answer", "target_box", "target_point", "target_text"},
    };
    return d;
}

inline const Stage1Dialect& stage1_dialect(std::string_view name) {
    for (const auto& d : stage1_dialects()) {
        if (d.name == name) return d;
    }
    throw Error(ErrorCode::lookup, "stage-1 dialect '" + std::string(name) + "' is not registered", std::string(name));
}

struct Stage1Record {
    std::string id;
    std::string dataset;
    std::string kind;  // grounding | qa | understanding
    ScreenDims dims;
    std::string instruction;
    std::string response;
    std::optional<NormBox> box;
    std::optional<NormPoint> point;
    std::string label;

    friend bool operator==(const Stage1Record&, const Stage1Record&) = default;
};

/// Empty or a single token: too vague to train on as-is.
inline bool ambiguous_instruction(std::string_view s) {
    std::string t = detail::trim(s);
    return t.empty() || t.find_first_of(" \t\n") == std::string::npos;
}

/// Deterministic pick from the instruction registry, keyed on the record id.
inline std::string templated_instruction(const TemplateSet& templates, const Stage1Record& r) {
    auto it = templates.instructions.find(r.kind);
    if (it == templates.instructions.end() || it->second.empty()) {
        throw Error(ErrorCode::lookup, "no instruction templates for kind '" + r.kind + "'", r.kind);
    }
    const std::string& tmpl = it->second[fnv1a(r.id) % it->second.size()];
    std::string label = r.label.empty() ? detail::trim(r.instruction) : r.label;
    if (label.empty()) label = "target";
    std::string out;
    for (std::size_t i = 0; i < tmpl.size();) {
        if (tmpl.compare(i, 7, "{label}") == 0) {
            out += label;
            i += 7;
        } else if (tmpl.compare(i, 13, "{instruction}") == 0) {
            out += detail::trim(r.instruction).empty() ? label : detail::trim(r.instruction);
            i += 13;
        } else {
            out += tmpl[i++];
        }
    }
    return out;
}

namespace detail {

inline std::string inserted_reference(const Stage1Record& r) {
    raa::Reference ref = r.box ? raa::Reference::box(*r.box, "") : raa::Reference::point(*r.point, "");
    std::string content = r.label.empty() ? std::string("target") : r.label;
    if (r.response.empty()) {
        ref.content = content;
        return raa::emit_reference(ref);
    }
    // wrap the first mention of the label, else append a marker
    if (!r.label.empty()) {
        if (auto pos = r.response.find(r.label); pos != std::string::npos) {
            ref.content = r.label;
            return r.response.substr(0, pos) + raa::emit_reference(ref) + r.response.substr(pos + r.label.size());
        }
    }
    ref.content = content;
    return r.response + " (" + raa::emit_reference(ref) + ")";
}

}  // namespace detail

/// Maps a raw stage-1 record onto the canonical layout: grid coordinates,
/// templated instruction when the original is vague, RAA marker on the
/// spatial target. Idempotent on its own output.
inline Stage1Record canonicalize_record(const Json& raw, std::string_view dialect_name,
                                        const TemplateSet& templates = TemplateSet::builtin()) {
    const Stage1Dialect& d = stage1_dialect(dialect_name);
    auto fail = [](const std::string& path, const std::string& msg) -> Error {
        return Error(ErrorCode::standardization, path + ": " + msg, path);
    };
    if (!raw.is_object()) throw fail("$", "record must be an object");
    auto str = [&](const std::string& key, bool required) -> std::string {
        auto it = raw.find(key);
        if (it == raw.end() || it->is_null()) {
            if (required) throw fail(key, "missing");
            return {};
        }
        if (!it->is_string()) throw fail(key, "must be a string");
        return it->get<std::string>();
    };

    Stage1Record r;
    r.id = str("id", true);
    r.dataset = str("dataset", false);
    if (r.dataset.empty()) r.dataset = d.name;
    r.kind = str("kind", true);
    if (r.kind != "grounding" && r.kind != "qa" && r.kind != "understanding") {
        throw fail("kind", "unknown record kind '" + r.kind + "'");
    }
    if (!raw.contains("dims")) throw fail("dims", "missing");
    try {
        r.dims = dims_from_json(raw["dims"], "dims");
    } catch (const Error& e) {
        throw fail("dims", e.what());
    }
    r.instruction = detail::trim(str(d.instruction_key, false));
    r.response = detail::trim(str(d.response_key, false));
    r.label = detail::trim(str(d.label_key, false));

    auto coords = [&](const std::string& key, std::size_t n) -> std::optional<std::vector<int>> {
        auto it = raw.find(key);
        if (it == raw.end() || it->is_null()) return std::nullopt;
        if (!it->is_array() || it->size() != n) throw fail(key, "expected an array of " + std::to_string(n) + " numbers");
        std::vector<int> out;
        for (std::size_t i = 0; i < n; ++i) {
            std::string path = key + "[" + std::to_string(i) + "]";
            int dim = i % 2 == 0 ? r.dims.width : r.dims.height;
            try {
                out.push_back(detail::convert_axis((*it)[i], d.coords, dim, i % 2 == 0 ? "x" : "y"));
            } catch (const Error& e) {
                throw fail(path, e.what());
            }
        }
        return out;
    };
    if (auto b = coords(d.box_key, 4)) {
        NormBox box{(*b)[0], (*b)[1], (*b)[2], (*b)[3]};
        if (box.x1 > box.x2 || box.y1 > box.y2) throw fail(d.box_key, "corners are out of order");
        r.box = box;
    }
    if (auto p = coords(d.point_key, 2)) r.point = NormPoint{(*p)[0], (*p)[1]};

    if (r.kind == "grounding" && !r.box && !r.point) throw fail(d.box_key, "grounding record without a target");
    if (r.kind != "grounding" && r.response.empty()) throw fail(d.response_key, "missing");
    if (ambiguous_instruction(r.instruction)) r.instruction = templated_instruction(templates, r);

    raa::Document doc;
    try {
        doc = raa::parse(r.response, ParseMode::strict);
    } catch (const Error& e) {
        throw fail(d.response_key, e.what());
    }
    if ((r.box || r.point) && doc.reference_count() == 0) r.response = detail::inserted_reference(r);
    return r;
}

/// Canonical-dialect JSON form of a record (the input `canonicalize_record`
/// maps to itself).
inline Json to_json(const Stage1Record& r) {
    Json j = Json::object();
    j["id"] = r.id;
    j["dataset"] = r.dataset;
    j["kind"] = r.kind;
    j["dims"] = to_json(r.dims);
    j["instruction"] = r.instruction;
    j["response"] = r.response;
    if (r.box) j["box"] = {r.box->x1, r.box->y1, r.box->x2, r.box->y2};
    if (r.point) j["point"] = {r.point->x, r.point->y};
    if (!r.label.empty()) j["label"] = r.label;
    return j;
}

inline constexpr std::string_view kStage1System =
    "You are a GUI assistant. Screen positions use a 0-1000 grid; mark screen regions in answers with "
    "<ref type=\"box\" x1=.. y1=.. x2=.. y2=..>...</ref> or <ref type=\"point\" x=.. y=..>...</ref>.";

inline SFTSample stage1_sample(const Stage1Record& r) {
    TaskKind kind = r.kind == "grounding" ? TaskKind::stage1_grounding
                    : r.kind == "qa"      ? TaskKind::stage1_qa
                                          : TaskKind::stage1_understanding;
    SFTSample s;
    s.kind = kind;
    s.source = {r.dataset, r.id, 0};
    s.messages = {{"system", std::string(kStage1System)},
                  {"user", "Screen " + std::to_string(r.dims.width) + "x" + std::to_string(r.dims.height) + "\n" +
                               r.instruction},
                  {"assistant", r.response}};
    return s;
}

inline SFTSample standardize_record(const Json& raw, std::string_view dialect,
                                    const TemplateSet& templates = TemplateSet::builtin()) {
    SFTSample s = stage1_sample(canonicalize_record(raw, dialect, templates));
    check_sample(s);
    return s;
}

struct RefineResult {
    std::string text;
    bool flagged = false;
    std::string reason;
};

/// Asks the client to reformulate the answer. The rewrite must parse as RAA,
/// keep every reference target and stay within length bounds; otherwise
/// the original is kept and the result flagged.
inline RefineResult refine_response(const Stage1Record& r, ChatClient& client,
                                    const TemplateSet& templates = TemplateSet::builtin(), DecodeParams decode = {}) {
    const PromptTemplate& p = templates.prompt("refine");
    std::vector<ChatMessage> msgs = {
        {"system", p.system + "\nInstruction: " + r.instruction + "\ntask: refine\ntemplates: " + templates.version},
        {"user", r.response}};
    std::string out = client.complete(msgs, decode);
    auto flagged = [&](std::string why) { return RefineResult{r.response, true, std::move(why)}; };
    std::string trimmed = detail::trim(out);
    if (trimmed.empty()) return flagged("empty rewrite");
    if (trimmed.size() > 4 * r.response.size() + 256) return flagged("rewrite too long");
    std::vector<raa::Reference> refs;
    try {
        auto doc = raa::parse(trimmed, ParseMode::strict);
        for (auto& seg : doc.segments) {
            if (auto* ref = std::get_if<raa::Reference>(&seg)) refs.push_back(*ref);
        }
    } catch (const Error& e) {
        return flagged(std::string("rewrite is not valid RAA: ") + e.what());
    }
    auto targets = [](const std::vector<raa::Reference>& v) {
        std::vector<std::variant<NormPoint, NormBox>> t;
        for (const auto& ref : v) t.push_back(ref.target);
        return t;
    };
    if (targets(refs) != targets(raa::references(r.response, ParseMode::strict))) {
        return flagged("rewrite changed the referenced regions");
    }
    return {trimmed, false, {}};
}

// ---------------------------------------------------------------------------
// Trajectories

struct RawStep {
    Observation observation;
    std::string action_name;
    Json action_args = Json::object();
    std::optional<std::string> annotation;
};

/// A recorded episode in some source dialect.
struct RawTrajectory {
    std::string id;
    std::string dataset;
    std::string dialect;
    std::string platform = "mobile";
    std::string goal;
    std::vector<RawStep> steps;
};

inline Json to_json(const RawTrajectory& t) {
    Json steps = Json::array();
    for (const auto& s : t.steps) {
        Json action = Json::object();
        action["name"] = s.action_name;
        action["arguments"] = s.action_args;
        Json j = Json::object();
        j["observation"] = to_json(s.observation);
        j["action"] = action;
        if (s.annotation) j["annotation"] = *s.annotation;
        steps.push_back(j);
    }
    Json j = Json::object();
    j["id"] = t.id;
    j["dataset"] = t.dataset;
    j["dialect"] = t.dialect;
    j["platform"] = t.platform;
    j["goal"] = t.goal;
    j["steps"] = steps;
    return j;
}

inline RawTrajectory raw_trajectory_from_json(const Json& j) {
    detail::require_object(j, "trajectory");
    RawTrajectory t;
    t.id = detail::require_string(j, "id", "trajectory");
    t.dataset = detail::optional_string(j, "dataset", "trajectory", "unknown");
    t.dialect = detail::require_string(j, "dialect", "trajectory");
    t.platform = detail::optional_string(j, "platform", "trajectory", "mobile");
    t.goal = detail::require_string(j, "goal", "trajectory");
    const Json& steps = detail::require_key(j, "steps", "trajectory");
    if (!steps.is_array() || steps.empty()) {
        throw Error(ErrorCode::validation, "trajectory '" + t.id + "' needs at least one step", "steps");
    }
    for (const auto& sj : steps) {
        RawStep s;
        s.observation = observation_from_json(detail::require_key(sj, "observation", "step"));
        const Json& a = detail::require_object(detail::require_key(sj, "action", "step"), "step.action");
        s.action_name = detail::require_string(a, "name", "step.action");
        if (a.contains("arguments")) s.action_args = a["arguments"];
        if (sj.contains("annotation")) s.annotation = detail::require_string(sj, "annotation", "step");
        t.steps.push_back(std::move(s));
    }
    return t;
}

/// A trajectory in canonical form.
struct Trajectory {
    std::string id;
    std::string dataset;
    std::string goal;
    ActionSpaceConfig space = ActionSpaceConfig::full();
    std::vector<Observation> observations;
    std::vector<Action> actions;

    std::size_t size() const noexcept { return actions.size(); }
};

inline Trajectory decode_trajectory(const RawTrajectory& raw,
                                    const UnificationTable& table = UnificationTable::builtin()) {
    if (raw.steps.empty()) throw Error(ErrorCode::validation, "trajectory '" + raw.id + "' has no steps", raw.id);
    Trajectory t;
    t.id = raw.id;
    t.dataset = raw.dataset;
    t.goal = raw.goal;
    t.space = ActionSpaceConfig::for_platform(raw.platform);
    for (std::size_t i = 0; i < raw.steps.size(); ++i) {
        const RawStep& s = raw.steps[i];
        std::string path = raw.id + ".steps[" + std::to_string(i) + "]";
        try {
            check_observation(s.observation);
            Action a = table.unify(s.action_name, s.action_args, raw.dialect, s.observation.dims);
            require_valid(a, t.space);
            t.observations.push_back(s.observation);
            t.actions.push_back(std::move(a));
        } catch (const Error& e) {
            throw Error(e.code(), path + ": " + e.what(), path);
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Stage 2: reasoning construction

/// Shared get-or-compute map. The first caller for a key computes; concurrent
/// callers for the same key wait on its result. A failed computation is not
/// cached.
class DescriptionCache {
public:
    std::string get_or_compute(const std::string& key, const std::function<std::string()>& compute) {
        std::unique_lock lock(mu_);
        if (auto it = entries_.find(key); it != entries_.end()) {
            auto f = it->second;
            ++hits_;
            lock.unlock();
            return f.get();
        }
        std::promise<std::string> promise;
        entries_.emplace(key, promise.get_future().share());
        ++misses_;
        lock.unlock();
        try {
            std::string value = compute();
            promise.set_value(value);
            return value;
        } catch (...) {
            promise.set_exception(std::current_exception());
            std::lock_guard relock(mu_);
            entries_.erase(key);
            throw;
        }
    }

    std::size_t size() const {
        std::lock_guard lock(mu_);
        return entries_.size();
    }
    std::size_t hits() const {
        std::lock_guard lock(mu_);
        return hits_;
    }
    std::size_t misses() const {
        std::lock_guard lock(mu_);
        return misses_;
    }

private:
    mutable std::mutex mu_;
    std::map<std::string, std::shared_future<std::string>> entries_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

struct ScreenDescription {
    std::size_t t = 0;
    std::string text;
};

struct StrategicOutput {
    std::string summary;
    std::string planning;
};

/// One earlier step as the summary prompt sees it.
struct HistoryItem {
    std::size_t t = 0;
    std::string description;
    Action action;
};

struct SynthesisOptions {
    int window = 2;
    bool stage2 = true;
    bool next_state = true;
    DecodeParams decode;
};

struct LogEntry {
    SampleSource source;
    std::string event;  // skipped | flagged
    std::string reason;
};

struct SynthesisOutput {
    std::vector<SFTSample> samples;
    std::vector<LogEntry> log;
};

class Synthesizer {
public:
    Synthesizer(ChatClient& client, TemplateSet templates = TemplateSet::builtin(), SynthesisOptions options = {},
                std::shared_ptr<DescriptionCache> cache = std::make_shared<DescriptionCache>())
        : client_(client), templates_(std::move(templates)), options_(options), cache_(std::move(cache)) {
        if (options_.window < 1) throw Error(ErrorCode::config, "history window must be >= 1", "window");
    }

    const TemplateSet& templates() const noexcept { return templates_; }
    const SynthesisOptions& options() const noexcept { return options_; }
    DescriptionCache& cache() noexcept { return *cache_; }

    /// d_t. Reuses an existing description; otherwise asks the client, once
    /// per distinct observation.
    ScreenDescription describe(const Observation& o, std::size_t t = 0) {
        if (o.description && !detail::blank(*o.description)) return {t, *o.description};
        std::string key = o.id + "#" + hex64(fnv1a(to_json(o).dump()));
        std::string text = cache_->get_or_compute(key, [&] {
            std::string labels;
            if (const Scene* s = o.structured()) {
                for (const auto& e : s->elements) {
                    if (e.label.empty()) continue;
                    if (!labels.empty()) labels += ", ";
                    labels += e.label;
                }
            }
            if (labels.empty()) labels = "no labeled elements";
            return call("describe", {{"labels", labels}, {"scene", render_observation(o)}});
        });
        return {t, text};
    }

    /// f_t from e_{t-1} and d_t.
    std::string reflect(std::size_t t, const std::optional<std::string>& previous_expectation,
                        const std::string& description) {
        if (t == 0) throw Error(ErrorCode::protocol, "no reflection at the first step", "reflection");
        if (!previous_expectation || detail::blank(*previous_expectation)) {
            throw Error(ErrorCode::protocol, "reflection at step " + std::to_string(t) + " needs e_{t-1}",
                        "previous_expectation");
        }
        return call("reflection", {{"previous_expectation", *previous_expectation}, {"observation", description}});
    }

    /// Summary sees the history and d_t only; planning also sees a_t.
    StrategicOutput strategic(const std::string& goal, std::span<const HistoryItem> history,
                              const std::string& description, const Action& action) {
        std::string hist;
        for (const auto& h : history) {
            if (!hist.empty()) hist += "\n";
            std::string d = h.description.substr(0, h.description.find('\n'));
            hist += "Step " + std::to_string(h.t) + ": " + d + " -> " + serialize_action(h.action);
        }
        if (hist.empty()) hist = "(no earlier steps)";
        StrategicOutput out;
        out.summary = call("summary", {{"goal", goal}, {"history", hist}, {"observation", description}});
        out.planning = call("planning", {{"goal", goal},
                                         {"summary", out.summary},
                                         {"observation", description},
                                         {"action", serialize_action(action)}});
        return out;
    }

    std::string tactical(const std::optional<std::string>& reflection, const StrategicOutput& strategic,
                         const Action& action) {
        std::string text = call("tactical", {{"reflection", reflection.value_or("")},
                                             {"summary", strategic.summary},
                                             {"planning", strategic.planning},
                                             {"action", serialize_action(action)}});
        std::string name(to_string(action.name));
        if (text.find(name) == std::string::npos) text += " Action: " + name + ".";
        return text;
    }

    /// e_t. Deliberately has no parameter through which step t+1 could leak.
    std::string expectation(const std::string& description, const ReasoningRecord& partial, const Action& action) {
        return call("expectation", {{"observation", description},
                                    {"summary", partial.strategic_summary},
                                    {"planning", partial.strategic_planning},
                                    {"tactical", partial.tactical},
                                    {"action", serialize_action(action)}});
    }

    /// Full reasoning record for step t given d_t and e_{t-1}.
    ReasoningRecord reason(const Trajectory& traj, std::size_t t, std::span<const std::string> descriptions,
                           std::span<const ReasoningRecord> earlier) {
        std::optional<std::string> f;
        if (t > 0) f = reflect(t, earlier[t - 1].expectation, descriptions[t]);
        std::vector<HistoryItem> hist;
        std::size_t first = t > static_cast<std::size_t>(options_.window) ? t - options_.window : 0;
        for (std::size_t i = first; i < t; ++i) hist.push_back({i, descriptions[i], traj.actions[i]});
        ReasoningRecord r;
        r.reflection = f;
        auto s = strategic(traj.goal, hist, descriptions[t], traj.actions[t]);
        r.strategic_summary = s.summary;
        r.strategic_planning = s.planning;
        r.tactical = tactical(f, s, traj.actions[t]);
        r.expectation = expectation(descriptions[t], r, traj.actions[t]);
        check_reasoning(r, t);
        return r;
    }

    /// Assembles and self-checks the stage-2 sample for step t from already
    /// synthesized records of steps 0..t.
    SFTSample assemble_step_sample(const Trajectory& traj, std::size_t t, std::span<const std::string> descriptions,
                                   std::span<const ReasoningRecord> records) const {
        EpisodeOptions eo;
        eo.window_size = options_.window;
        eo.max_steps = static_cast<int>(traj.size()) + 1;
        eo.describe_history = true;
        EpisodeState state(traj.goal, traj.space, eo);
        for (std::size_t i = 0; i < t; ++i) {
            Observation o = traj.observations[i];
            o.description = descriptions[i];
            state.record(std::move(o), records[i], traj.actions[i]);
        }
        StepInput in = build_step_input(state, traj.observations[t]);
        SFTSample s;
        s.kind = TaskKind::stage2_step;
        s.source = {traj.dataset, traj.id, t};
        s.messages = render_step_prompt(in);
        s.messages.push_back({"assistant", render_model_output(records[t], traj.actions[t])});

        // self-validation before emit
        auto [r, a] = parse_step_output(s.messages.back().content, t, ParseMode::strict);
        if (r != records[t] || a != traj.actions[t]) {
            throw Error(ErrorCode::synthesis, "step sample does not re-parse to its record", traj.id);
        }
        std::size_t expect_turns = 3 + 2 * std::min<std::size_t>(t, options_.window);
        if (s.messages.size() != expect_turns) {
            throw Error(ErrorCode::synthesis, "step sample has the wrong number of history turns", traj.id);
        }
        check_sample(s, traj.space);
        return s;
    }

    SFTSample assemble_next_state_sample(const Trajectory& traj, std::size_t t, const std::string& current,
                                         const std::string& next) const {
        if (t + 1 >= traj.size()) {
            throw Error(ErrorCode::range, "step " + std::to_string(t) + " has no successor in " + traj.id, traj.id);
        }
        const PromptTemplate* p = templates_.prompts.count("next_state") ? &templates_.prompt("next_state") : nullptr;
        SFTSample s;
        s.kind = TaskKind::next_state_prediction;
        s.source = {traj.dataset, traj.id, t};
        s.messages = {
            {"system", p ? p->system : std::string("Predict the next screen.")},
            {"user", "Current screen:\n" + current + "\n\nAction:\n" + serialize_action(traj.actions[t]) +
                         "\n\nDescribe the screen after this action."},
            {"assistant", next}};
        check_sample(s, traj.space);
        return s;
    }

    /// Stage-2 sample for step t; synthesizes steps 0..t. Throws on failure.
    SFTSample build_step_sample(const Trajectory& traj, std::size_t t) {
        if (t >= traj.size()) throw Error(ErrorCode::range, "step " + std::to_string(t) + " outside trajectory", traj.id);
        std::vector<std::string> d;
        std::vector<ReasoningRecord> r;
        for (std::size_t i = 0; i <= t; ++i) d.push_back(describe(traj.observations[i], i).text);
        for (std::size_t i = 0; i <= t; ++i) r.push_back(reason(traj, i, d, r));
        return assemble_step_sample(traj, t, d, r);
    }

    SFTSample build_next_state_sample(const Trajectory& traj, std::size_t t) {
        if (t + 1 >= traj.size()) {
            throw Error(ErrorCode::range, "step " + std::to_string(t) + " has no successor in " + traj.id, traj.id);
        }
        return assemble_next_state_sample(traj, t, describe(traj.observations[t], t).text,
                                          describe(traj.observations[t + 1], t + 1).text);
    }

    /// Every sample of one trajectory, in step order. A failing step is
    /// skipped and logged, and so is every later step that depends on it.
    SynthesisOutput synthesize(const Trajectory& traj) {
        SynthesisOutput out;
        const std::size_t n = traj.size();
        std::vector<std::optional<std::string>> d(n);
        for (std::size_t t = 0; t < n; ++t) {
            try {
                d[t] = describe(traj.observations[t], t).text;
            } catch (const Error& e) {
                out.log.push_back({{traj.dataset, traj.id, t}, "skipped", std::string("description: ") + e.what()});
            }
        }
        std::vector<std::string> descriptions;
        std::vector<ReasoningRecord> records;
        std::optional<std::size_t> broken;
        for (std::size_t t = 0; t < n; ++t) {
            SampleSource src{traj.dataset, traj.id, t};
            if (options_.stage2) {
                if (broken) {
                    out.log.push_back({src, "skipped", "depends on skipped step " + std::to_string(*broken)});
                } else if (!d[t]) {
                    broken = t;
                } else {
                    try {
                        descriptions.push_back(*d[t]);
                        records.push_back(reason(traj, t, descriptions, records));
                        out.samples.push_back(assemble_step_sample(traj, t, descriptions, records));
                    } catch (const Error& e) {
                        out.log.push_back({src, "skipped", e.what()});
                        broken = t;
                    }
                }
            }
            if (options_.next_state && t + 1 < n && d[t] && d[t + 1]) {
                try {
                    out.samples.push_back(assemble_next_state_sample(traj, t, *d[t], *d[t + 1]));
                } catch (const Error& e) {
                    out.log.push_back({src, "skipped", std::string("next state: ") + e.what()});
                }
            }
        }
        return out;
    }

private:
    std::string call(std::string_view tag, const std::map<std::string, std::string>& values) {
        auto msgs = templates_.render(tag, values);
        std::string out = detail::trim(client_.complete(msgs, options_.decode));
        if (out.empty()) {
            throw Error(ErrorCode::synthesis, "client returned an empty " + std::string(tag), std::string(tag));
        }
        return out;
    }

    ChatClient& client_;
    TemplateSet templates_;
    SynthesisOptions options_;
    std::shared_ptr<DescriptionCache> cache_;
};

// ---------------------------------------------------------------------------
// Pipeline

struct Manifest {
    std::string endpoint = "stub";
    std::string model;
    std::string templates_version = "v1";
    int window = 2;
    std::set<TaskKind> kinds{kAllTaskKinds.begin(), kAllTaskKinds.end()};
    // Per-kind keep ratio in (0,1]; absent means 1.
    std::map<TaskKind, double> ratios;
    bool refine = false;
    std::uint64_t seed = 0;
    int threads = 1;
};

inline Json to_json(const Manifest& m) {
    Json kinds = Json::array();
    for (auto k : m.kinds) kinds.push_back(std::string(to_string(k)));
    Json ratios = Json::object();
    for (const auto& [k, v] : m.ratios) ratios[std::string(to_string(k))] = v;
    Json j = Json::object();
    j["endpoint"] = m.endpoint;
    j["model"] = m.model;
    j["templates_version"] = m.templates_version;
    j["window"] = m.window;
    j["kinds"] = kinds;
    j["ratios"] = ratios;
    j["refine"] = m.refine;
    j["seed"] = m.seed;
    j["threads"] = m.threads;
    return j;
}

inline Manifest manifest_from_json(const Json& j) {
    detail::require_object(j, "manifest");
    detail::reject_unknown_keys(
        j, {"endpoint", "model", "templates_version", "window", "kinds", "ratios", "refine", "seed", "threads"},
        "manifest");
    Manifest m;
    try {
        m.endpoint = detail::optional_string(j, "endpoint", "manifest", "stub");
        m.model = detail::optional_string(j, "model", "manifest");
        m.templates_version = detail::optional_string(j, "templates_version", "manifest", "v1");
        if (j.contains("window")) m.window = j["window"].get<int>();
        if (j.contains("kinds")) {
            m.kinds.clear();
            for (const auto& k : j["kinds"]) m.kinds.insert(task_kind_from_string(k.get<std::string>()));
        }
        if (j.contains("ratios")) {
            for (const auto& [k, v] : j["ratios"].items()) m.ratios[task_kind_from_string(k)] = v.get<double>();
        }
        if (j.contains("refine")) m.refine = j["refine"].get<bool>();
        if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("threads")) m.threads = j["threads"].get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::config, std::string("malformed manifest: ") + e.what(), "manifest");
    } catch (const Error& e) {
        throw Error(ErrorCode::config, e.what(), e.subject());
    }
    if (m.window < 1) throw Error(ErrorCode::config, "manifest window must be >= 1", "window");
    if (m.threads < 1) throw Error(ErrorCode::config, "manifest threads must be >= 1", "threads");
    for (const auto& [k, v] : m.ratios) {
        if (!(v > 0.0 && v <= 1.0)) throw Error(ErrorCode::config, "ratio outside (0,1]", std::string(to_string(k)));
    }
    return m;
}

/// Seeded keep/drop decision for a sample; independent of scheduling.
inline bool keep_sample(const Manifest& m, const SFTSample& s) {
    auto it = m.ratios.find(s.kind);
    if (it == m.ratios.end() || it->second >= 1.0) return true;
    std::string key = std::to_string(m.seed) + "/" + std::string(to_string(s.kind)) + "/" + s.source.dataset + "/" +
                      s.source.trajectory + "/" + std::to_string(s.source.step);
    double u = static_cast<double>(fnv1a(key) >> 11) / static_cast<double>(1ULL << 53);
    return u < it->second;
}

struct Stage1Input {
    std::string dialect;
    Json record;
};

/// Runs both stages. Trajectories are processed in parallel (manifest
/// threads) but output order is input order, so results do not depend on
/// scheduling.
inline SynthesisOutput run_synthesis(const Manifest& manifest, std::span<const Stage1Input> stage1,
                                     std::span<const Trajectory> trajectories, ChatClient& client,
                                     const TemplateSet& templates = TemplateSet::builtin()) {
    if (templates.version != manifest.templates_version) {
        throw Error(ErrorCode::config,
                    "manifest wants templates " + manifest.templates_version + ", got " + templates.version,
                    "templates_version");
    }
    SynthesisOutput out;
    DecodeParams decode;
    decode.seed = manifest.seed;

    for (const auto& in : stage1) {
        SampleSource src{"", in.record.is_object() ? in.record.value("id", std::string("?")) : "?", 0};
        try {
            Stage1Record r = canonicalize_record(in.record, in.dialect, templates);
            src = {r.dataset, r.id, 0};
            if (manifest.refine) {
                auto refined = refine_response(r, client, templates, decode);
                if (refined.flagged) out.log.push_back({src, "flagged", refined.reason});
                r.response = refined.text;
            }
            SFTSample s = stage1_sample(r);
            if (!manifest.kinds.count(s.kind) || !keep_sample(manifest, s)) continue;
            check_sample(s);
            out.samples.push_back(std::move(s));
        } catch (const Error& e) {
            if (e.retryable()) throw;
            out.log.push_back({src, "skipped", e.what()});
        }
    }

    SynthesisOptions opts;
    opts.window = manifest.window;
    opts.stage2 = manifest.kinds.count(TaskKind::stage2_step) > 0;
    opts.next_state = manifest.kinds.count(TaskKind::next_state_prediction) > 0;
    opts.decode = decode;
    auto cache = std::make_shared<DescriptionCache>();

    std::vector<SynthesisOutput> per(trajectories.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        Synthesizer synth(client, templates, opts, cache);
        for (std::size_t i = next++; i < trajectories.size(); i = next++) per[i] = synth.synthesize(trajectories[i]);
    };
    std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(manifest.threads), trajectories.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::future<void>> pool;
        for (std::size_t k = 0; k < threads; ++k) pool.push_back(std::async(std::launch::async, worker));
        for (auto& f : pool) f.get();
    }
    for (auto& p : per) {
        for (auto& s : p.samples) {
            if (keep_sample(manifest, s)) out.samples.push_back(std::move(s));
        }
        for (auto& l : p.log) out.log.push_back(std::move(l));
    }
    return out;
}

}  // namespace guiagent
