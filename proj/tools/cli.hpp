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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "guiagent/fixtures.hpp"
#include "guiagent/harness.hpp"
#include "guiagent/http_chat_client.hpp"
#include "guiagent/synthesis.hpp"

// The `guiagent` command line. Kept in a header so tests can drive it
// in-process; tools/main.cpp is a two-line wrapper.
namespace guiagent::cli {

enum Exit { ok = 0, evaluation_error = 1, config_error = 2 };

namespace fs = std::filesystem;

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string endpoint;
    bool stub = false;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path, path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path, path);
    out << text;
}

inline Json read_json_file(const std::string& path) {
    try {
        return Json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::config, path + ": " + e.what(), path);
    }
}

// NDJSON; blank lines are skipped. Returns (line number, value).
inline std::vector<std::pair<std::size_t, Json>> read_ndjson(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<std::pair<std::size_t, Json>> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (detail::blank(line)) continue;
        try {
            out.emplace_back(n, Json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::parse, path + ":" + std::to_string(n) + ": " + e.what(), path);
        }
    }
    return out;
}

template <class T, class F>
std::string ndjson(const std::vector<T>& items, F&& to) {
    std::string out;
    for (const auto& x : items) out += to(x).dump() + "\n";
    return out;
}

class Cli {
public:
    Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int run(int argc, const char* const* argv) {
        CLI::App app{"GUI agent data synthesis and evaluation tools", "guiagent"};
        app.require_subcommand(1);
        app.add_option("--config", g_.config, "JSON config (synthesis manifest)");
        app.add_option("--seed", g_.seed, "override the seed");
        app.add_option("--endpoint", g_.endpoint, "OpenAI-compatible chat endpoint, http://host:port");
        app.add_flag("--stub", g_.stub, "use the deterministic stub chat client");

        auto* std_cmd = app.add_subcommand("standardize", "raw stage-1 records -> SFT samples");
        std_cmd->add_option("--dialect", dialect_, "source dialect; omit when lines are {dialect, record}");
        std_cmd->add_option("--in", in_, "raw records (NDJSON)")->required();
        std_cmd->add_option("--out", out_path_, "SFT samples (NDJSON)")->required();

        auto* synth = app.add_subcommand("synth", "run the synthesis pipeline");
        synth->add_option("--trajectories", trajectories_, "raw trajectories (NDJSON)");
        synth->add_option("--stage1", stage1_, "stage-1 inputs, {dialect, record} per line (NDJSON)");
        synth->add_option("--templates", templates_, "prompt template set (JSON)");
        synth->add_option("--unification", unification_, "action unification table (JSON)");
        synth->add_option("--out", out_path_, "SFT corpus (NDJSON)")->required();
        synth->add_option("--log", log_path_, "skip/flag log (NDJSON)");

        auto* eval = app.add_subcommand("eval-grounding", "score an agent on a grounding suite");
        eval->add_option("--suite", suite_, "grounding cases (NDJSON)")->required();
        eval->add_option("--agent", agent_, "oracle | corner | random | malformed | chat")
            ->check(CLI::IsMember({"oracle", "corner", "random", "malformed", "chat"}));
        eval->add_option("--report", report_, "report JSON path");
        eval->add_option("--table", table_, "text table path (stdout when omitted)");

        auto* episodes = app.add_subcommand("run-episodes", "run an agent on the mock app tasks");
        episodes->add_option("--agent", agent_, "oracle | random | malformed | chat")
            ->check(CLI::IsMember({"oracle", "random", "malformed", "chat"}));
        episodes->add_option("--apps", apps_dir_, "directory of app script JSON files (default: bundled apps)");
        episodes->add_option("--budget", budget_, "step budget per episode");
        episodes->add_option("--window", window_, "history window");
        episodes->add_option("--on-parse-failure", on_parse_failure_, "abort | skip")
            ->check(CLI::IsMember({"abort", "skip"}));
        episodes->add_option("--report", report_, "report JSON path");
        episodes->add_option("--table", table_, "text table path (stdout when omitted)");

        auto* validate = app.add_subcommand("validate-corpus", "re-check every sample of an SFT corpus");
        validate->add_option("--in", in_, "SFT corpus (NDJSON)")->required();
        validate->add_option("--space", space_, "action space preset")
            ->check(CLI::IsMember({"mobile", "desktop", "web", "full"}));

        auto* fixtures_cmd = app.add_subcommand("make-fixtures", "write the bundled corpus, suite and apps");
        fixtures_cmd->add_option("--out", out_path_, "output directory")->required();

        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) {
                out_ << app.help();
                return ok;
            }
            err_ << e.what() << "\n";
            return config_error;
        }

        try {
            if (*std_cmd) return standardize();
            if (*synth) return run_synth();
            if (*eval) return eval_grounding_cmd();
            if (*episodes) return run_episodes_cmd();
            if (*validate) return validate_corpus();
            if (*fixtures_cmd) return make_fixtures();
        } catch (const Error& e) {
            err_ << "guiagent: " << e.what() << "\n";
            return e.code() == ErrorCode::config || e.code() == ErrorCode::io ? config_error : evaluation_error;
        } catch (const std::exception& e) {
            err_ << "guiagent: " << e.what() << "\n";
            return evaluation_error;
        }
        return config_error;
    }

private:
    Manifest manifest() const {
        Manifest m = g_.config.empty() ? Manifest{} : manifest_from_json(read_json_file(g_.config));
        if (g_.seed) m.seed = *g_.seed;
        if (!g_.endpoint.empty()) m.endpoint = g_.endpoint;
        if (g_.stub) m.endpoint = "stub";
        return m;
    }

    // the stub fills template slots; anything else goes over HTTP with retries
    std::unique_ptr<ChatClient> client(const std::string& endpoint, const std::string& model,
                                       const TemplateSet& templates) {
        if (endpoint.empty() || endpoint == "stub") {
            return std::make_unique<StubClient>(StubClient::Mode::templated, templates.stub_templates());
        }
        HttpChatClient::Options opt;
        if (!model.empty()) opt.model = model;
        if (const char* key = std::getenv("GUIAGENT_API_KEY")) opt.api_key = key;
        http_ = std::make_unique<HttpChatClient>(endpoint, opt);
        return std::make_unique<RetryingClient>(*http_);
    }

    TemplateSet templates() const {
        if (templates_.empty()) return TemplateSet::builtin();
        return template_set_from_json(read_json_file(templates_));
    }

    void emit_table(const std::string& text) {
        if (table_.empty()) {
            out_ << text;
        } else {
            write_file(table_, text);
        }
    }

    int standardize() {
        auto templates = this->templates();
        std::vector<SFTSample> samples;
        std::size_t failed = 0;
        for (const auto& [n, j] : read_ndjson(in_)) {
            try {
                if (dialect_.empty()) {
                    detail::require_object(j, "line");
                    samples.push_back(standardize_record(j.at("record"), j.at("dialect").get<std::string>(), templates));
                } else {
                    samples.push_back(standardize_record(j, dialect_, templates));
                }
            } catch (const Error& e) {
                if (e.code() == ErrorCode::lookup) throw Error(ErrorCode::config, e.what(), e.subject());
                ++failed;
                err_ << in_ << ":" << n << ": " << e.what() << (e.subject().empty() ? "" : " [" + e.subject() + "]")
                     << "\n";
            } catch (const nlohmann::json::exception& e) {
                ++failed;
                err_ << in_ << ":" << n << ": " << e.what() << "\n";
            }
        }
        std::ostringstream ss;
        write_corpus(samples, ss);
        write_file(out_path_, ss.str());
        out_ << "standardized " << samples.size() << " record(s), " << failed << " failed\n";
        return failed ? evaluation_error : ok;
    }

    int run_synth() {
        Manifest m = manifest();
        auto templates = this->templates();
        std::vector<Stage1Input> stage1;
        if (!stage1_.empty()) {
            for (const auto& [n, j] : read_ndjson(stage1_)) {
                if (!j.is_object() || !j.contains("dialect") || !j.contains("record") || !j["dialect"].is_string()) {
                    throw Error(ErrorCode::schema, stage1_ + ":" + std::to_string(n) + ": expected {dialect, record}");
                }
                stage1.push_back({j["dialect"].get<std::string>(), j["record"]});
            }
        }
        UnificationTable table = unification_.empty() ? UnificationTable::builtin()
                                                      : UnificationTable::from_json(read_json_file(unification_));
        std::vector<Trajectory> trajs;
        std::vector<LogEntry> decode_log;
        if (!trajectories_.empty()) {
            for (const auto& [n, j] : read_ndjson(trajectories_)) {
                try {
                    trajs.push_back(decode_trajectory(raw_trajectory_from_json(j), table));
                } catch (const Error& e) {
                    decode_log.push_back({{"", j.is_object() ? j.value("id", std::string("line " + std::to_string(n)))
                                                             : "line " + std::to_string(n),
                                           0},
                                          "skipped",
                                          e.what()});
                }
            }
        }
        auto chat = client(m.endpoint, m.model, templates);
        auto result = run_synthesis(m, stage1, trajs, *chat, templates);
        decode_log.insert(decode_log.end(), result.log.begin(), result.log.end());

        std::ostringstream ss;
        write_corpus(result.samples, ss);
        write_file(out_path_, ss.str());
        if (!log_path_.empty()) {
            std::string log;
            for (const auto& l : decode_log) {
                Json j = Json::object();
                j["dataset"] = l.source.dataset;
                j["trajectory"] = l.source.trajectory;
                j["step"] = l.source.step;
                j["event"] = l.event;
                j["reason"] = l.reason;
                log += j.dump() + "\n";
            }
            write_file(log_path_, log);
        }
        out_ << "wrote " << result.samples.size() << " sample(s), " << decode_log.size() << " log entr"
             << (decode_log.size() == 1 ? "y" : "ies") << "\n";
        return ok;
    }

    std::unique_ptr<AgentBackend> grounding_agent(std::span<const GroundingCase> cases) {
        std::string name = agent_.empty() ? "oracle" : agent_;
        if (name == "oracle") return std::make_unique<fixtures::GroundingOracle>(cases);
        if (name == "corner") return std::make_unique<ConstantAgent>(Action::tap({0, 0}), "corner");
        if (name == "random") return std::make_unique<RandomAgent>(g_.seed.value_or(0));
        if (name == "malformed") return std::make_unique<MalformedAgent>();
        return chat_agent();
    }

    std::unique_ptr<AgentBackend> chat_agent() {
        if (g_.endpoint.empty() && !g_.stub) {
            throw Error(ErrorCode::config, "the chat agent needs --endpoint or --stub", "endpoint");
        }
        Manifest m = manifest();
        chat_ = client(m.endpoint, m.model, TemplateSet::builtin());
        DecodeParams dp;
        dp.seed = m.seed;
        return std::make_unique<ChatAgent>(*chat_, dp);
    }

    int eval_grounding_cmd() {
        std::vector<GroundingCase> cases;
        {
            std::istringstream in(read_file(suite_));
            cases = read_grounding_suite(in);
        }
        auto agent = grounding_agent(cases);
        auto report = eval_grounding(cases, *agent);
        if (!report_.empty()) write_file(report_, to_json(report).dump(2) + "\n");
        emit_table(render_table(report));
        return ok;
    }

    std::vector<mockenv::AppScript> apps() const {
        if (apps_dir_.empty()) return mockenv::apps::all();
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(apps_dir_)) {
            if (e.path().extension() == ".json") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw Error(ErrorCode::config, "no app scripts in " + apps_dir_, apps_dir_);
        std::vector<mockenv::AppScript> out;
        for (const auto& f : files) out.push_back(mockenv::script_from_json(read_json_file(f.string())));
        return out;
    }

    int run_episodes_cmd() {
        EpisodeConfig cfg;
        cfg.budget = budget_;
        cfg.window = window_;
        cfg.on_parse_failure =
            on_parse_failure_ == "skip" ? ParseFailurePolicy::skip_step : ParseFailurePolicy::abort_episode;
        if (cfg.budget < 0) throw Error(ErrorCode::config, "budget must be >= 0", "budget");
        if (cfg.window < 1) throw Error(ErrorCode::config, "window must be >= 1", "window");

        std::string name = agent_.empty() ? "oracle" : agent_;
        std::unique_ptr<AgentBackend> shared;
        if (name == "random") shared = std::make_unique<RandomAgent>(g_.seed.value_or(0));
        if (name == "malformed") shared = std::make_unique<MalformedAgent>();
        if (name == "chat") shared = chat_agent();

        mockenv::EnvOptions eo;
        eo.seed = g_.seed.value_or(0);
        std::vector<EpisodeResult> results;
        for (const auto& app : apps()) {
            for (const auto& task : app.tasks) {
                mockenv::Environment env(app, eo);
                if (name == "oracle") {
                    ScriptedAgent scripted(mockenv::oracle_agent(app, task.id));
                    results.push_back(run_episode(env, task.id, scripted, cfg));
                } else {
                    results.push_back(run_episode(env, task.id, *shared, cfg));
                }
            }
        }
        auto table = success_rate(results, name);
        if (!report_.empty()) {
            Json eps = Json::array();
            for (const auto& r : results) eps.push_back(to_json(r));
            Json j = Json::object();
            j["summary"] = to_json(table);
            j["episodes"] = eps;
            write_file(report_, j.dump(2) + "\n");
        }
        emit_table(render_table(table));
        return ok;
    }

    int validate_corpus() {
        auto space = ActionSpaceConfig::for_platform(space_);
        std::size_t good = 0, bad = 0;
        for (const auto& [n, j] : read_ndjson(in_)) {
            try {
                check_sample(sft_sample_from_json(j), space);
                ++good;
            } catch (const Error& e) {
                ++bad;
                err_ << in_ << ":" << n << ": " << e.what() << "\n";
            }
        }
        out_ << good << " valid, " << bad << " invalid\n";
        return bad ? evaluation_error : ok;
    }

    int make_fixtures() {
        fs::path dir(out_path_);
        auto corpus = fixtures::bundled_corpus();
        write_file((dir / "trajectories.ndjson").string(),
                   ndjson(corpus, [](const RawTrajectory& t) { return to_json(t); }));
        write_file((dir / "stage1.ndjson").string(), ndjson(fixtures::bundled_stage1(), [](const Stage1Input& in) {
                       Json j = Json::object();
                       j["dialect"] = in.dialect;
                       j["record"] = in.record;
                       return j;
                   }));
        auto suite = fixtures::grounding_suite(g_.seed.value_or(7));
        write_file((dir / "grounding_suite.ndjson").string(),
                   ndjson(suite, [](const GroundingCase& c) { return to_json(c); }));
        Manifest m;
        m.seed = g_.seed.value_or(0);
        write_file((dir / "manifest.json").string(), to_json(m).dump(2) + "\n");
        write_file((dir / "templates.json").string(), to_json(TemplateSet::builtin()).dump(2) + "\n");
        write_file((dir / "unification_table.json").string(), UnificationTable::builtin().to_json().dump(2) + "\n");
        for (const auto& app : mockenv::apps::all()) {
            write_file((dir / "apps" / (app.name + ".json")).string(), mockenv::to_json(app).dump(2) + "\n");
        }
        out_ << "wrote " << corpus.size() << " trajectories and " << suite.size() << " grounding cases to "
             << dir.string() << "\n";
        return ok;
    }

    std::ostream& out_;
    std::ostream& err_;
    Globals g_;
    std::string dialect_, in_, out_path_, trajectories_, stage1_, templates_, unification_, log_path_, suite_, agent_, table_,
        report_, apps_dir_;
    std::string on_parse_failure_ = "abort";
    std::string space_ = "full";
    int budget_ = 30;
    int window_ = 2;
    std::unique_ptr<HttpChatClient> http_;
    std::unique_ptr<ChatClient> chat_;
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return Cli(out, err).run(argc, argv);
}

}  // namespace guiagent::cli
