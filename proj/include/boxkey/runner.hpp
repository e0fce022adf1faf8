#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "boxkey/client.hpp"
#include "boxkey/probe.hpp"
#include "boxkey/report.hpp"
#include "boxkey/serialize.hpp"

namespace boxkey {

struct RunMatrix {
    std::vector<LexiconMode> lexicon_modes = {kNaturalNatural, kSyntheticSynthetic};
    std::vector<InstructionVariant> variants = {InstructionVariant::Normal,
                                                InstructionVariant::CounterLanguageInstruction,
                                                InstructionVariant::CounterOutputFormat};
    std::vector<int> shot_counts = {2, 3, 5};
    std::vector<bool> distractor_flags = {false};
};

struct RunConfig {
    uint64_t base_seed = 1;
    int samples_per_cell = 50;
    EnvConfig env;
    RunMatrix matrix;
    Protocol protocol = Protocol::FinalQuery;
    int compressed_k = 1;
    bool compressed_per_step = false;
    RenderStyle style = RenderStyle::Traditional;
    ScriptedAgentSpec agent;
    bool use_http = false;
    ClientConfig client;
    int concurrency = 1;
    std::string distractor_file;  // empty: bundled pool
    std::string out_dir = "out";
};

inline std::string cell_tag(const GenSettings& s) {
    return variant_tag(s.variant) + "." + mode_tag(s.mode) + "." + std::to_string(s.n_shots) +
           "shot" + (s.distractors_on ? ".dist" : "");
}

// Cells expand in a fixed order (variant, distractor, mode, shots) so instance
// files regenerate byte-identically for a given config.
inline std::vector<GenSettings> expand_cells(const RunConfig& cfg) {
    std::vector<GenSettings> cells;
    for (const InstructionVariant variant : cfg.matrix.variants) {
        for (const bool dist : cfg.matrix.distractor_flags) {
            for (const LexiconMode mode : cfg.matrix.lexicon_modes) {
                for (const int shots : cfg.matrix.shot_counts) {
                    cells.push_back(GenSettings{cfg.env, mode, variant, shots, dist});
                }
            }
        }
    }
    return cells;
}

// --- config (de)serialization ------------------------------------------------

inline json to_json(const ClientConfig& c) {
    json j{{"endpoint", c.endpoint},
           {"model", c.model},
           {"auth_env", c.auth_env},
           {"timeout_seconds", c.timeout_seconds},
           {"max_retries", c.max_retries},
           {"backoff_base_seconds", c.backoff_base_seconds},
           {"backoff_multiplier", c.backoff_multiplier},
           {"max_concurrent", c.max_concurrent},
           {"requests_per_second", c.requests_per_second}};
    if (c.decoding_overrides) j["decoding_overrides"] = *c.decoding_overrides;
    return j;
}

inline ClientConfig client_config_from_json(const json& j) {
    ClientConfig c;
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.auth_env = j.value("auth_env", c.auth_env);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_base_seconds = j.value("backoff_base_seconds", c.backoff_base_seconds);
    c.backoff_multiplier = j.value("backoff_multiplier", c.backoff_multiplier);
    c.max_concurrent = j.value("max_concurrent", c.max_concurrent);
    c.requests_per_second = j.value("requests_per_second", c.requests_per_second);
    if (j.contains("decoding_overrides")) c.decoding_overrides = j.at("decoding_overrides");
    return c;
}

inline std::string agent_tag(const ScriptedAgentSpec& spec, bool use_http) {
    if (use_http) return "http";
    switch (spec.kind) {
        case AgentKind::Oracle: return "oracle";
        case AgentKind::CopyLastAnswer: return "copylast";
        case AgentKind::RandomTruth: return "random";
        case AgentKind::Forgetful: return "forgetful";
    }
    return "oracle";
}

inline json to_json(const RunConfig& cfg) {
    json modes = json::array();
    for (const LexiconMode m : cfg.matrix.lexicon_modes) modes.push_back(mode_tag(m));
    json variants = json::array();
    for (const InstructionVariant v : cfg.matrix.variants) variants.push_back(variant_tag(v));
    return json{{"schema_version", kSchemaVersion},
                {"base_seed", cfg.base_seed},
                {"samples_per_cell", cfg.samples_per_cell},
                {"env", to_json(cfg.env)},
                {"matrix",
                 {{"lexicon_modes", modes},
                  {"variants", variants},
                  {"shot_counts", cfg.matrix.shot_counts},
                  {"distractor_flags", cfg.matrix.distractor_flags}}},
                {"protocol", protocol_tag(cfg.protocol, cfg.compressed_k)},
                {"compressed_k", cfg.compressed_k},
                {"compressed_per_step", cfg.compressed_per_step},
                {"style", style_tag(cfg.style)},
                {"agent",
                 {{"kind", agent_tag(cfg.agent, cfg.use_http)},
                  {"p", cfg.agent.p},
                  {"seed", cfg.agent.seed}}},
                {"client", to_json(cfg.client)},
                {"concurrency", cfg.concurrency},
                {"distractor_file", cfg.distractor_file},
                {"out_dir", cfg.out_dir}};
}

inline void parse_agent_tag(const std::string& tag, RunConfig& cfg) {
    cfg.use_http = false;
    if (tag == "oracle") cfg.agent.kind = AgentKind::Oracle;
    else if (tag == "copylast") cfg.agent.kind = AgentKind::CopyLastAnswer;
    else if (tag == "random") cfg.agent.kind = AgentKind::RandomTruth;
    else if (tag == "forgetful") cfg.agent.kind = AgentKind::Forgetful;
    else if (tag == "http") cfg.use_http = true;
    else throw Error("unknown agent: " + tag);
}

inline RunConfig run_config_from_json(const json& j) {
    check_schema_version(j, "run config");
    RunConfig cfg;
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    cfg.samples_per_cell = j.value("samples_per_cell", cfg.samples_per_cell);
    if (j.contains("env")) cfg.env = env_from_json(j.at("env"));
    if (j.contains("matrix")) {
        const json& m = j.at("matrix");
        if (m.contains("lexicon_modes")) {
            cfg.matrix.lexicon_modes.clear();
            for (const json& t : m.at("lexicon_modes")) {
                cfg.matrix.lexicon_modes.push_back(parse_mode_tag(t.get<std::string>()));
            }
        }
        if (m.contains("variants")) {
            cfg.matrix.variants.clear();
            for (const json& t : m.at("variants")) {
                cfg.matrix.variants.push_back(parse_variant_tag(t.get<std::string>()));
            }
        }
        if (m.contains("shot_counts")) {
            cfg.matrix.shot_counts = m.at("shot_counts").get<std::vector<int>>();
        }
        if (m.contains("distractor_flags")) {
            cfg.matrix.distractor_flags = m.at("distractor_flags").get<std::vector<bool>>();
        }
    }
    if (j.contains("protocol")) {
        cfg.protocol = parse_protocol_tag(j.at("protocol").get<std::string>());
    }
    cfg.compressed_k = j.value("compressed_k", cfg.compressed_k);
    cfg.compressed_per_step = j.value("compressed_per_step", cfg.compressed_per_step);
    if (j.contains("style")) cfg.style = parse_style_tag(j.at("style").get<std::string>());
    if (j.contains("agent")) {
        const json& a = j.at("agent");
        if (a.contains("kind")) parse_agent_tag(a.at("kind").get<std::string>(), cfg);
        cfg.agent.p = a.value("p", cfg.agent.p);
        cfg.agent.seed = a.value("seed", cfg.agent.seed);
    }
    if (j.contains("client")) cfg.client = client_config_from_json(j.at("client"));
    cfg.concurrency = j.value("concurrency", cfg.concurrency);
    cfg.distractor_file = j.value("distractor_file", cfg.distractor_file);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error("invalid config file: " + path);
    return run_config_from_json(j);
}

// --- commands ----------------------------------------------------------------

// Writes one instance record per line; a fixed config always regenerates the
// same bytes.
inline std::vector<Instance> cmd_generate(const RunConfig& cfg, const std::string& out_path) {
    const std::vector<std::string> pool = cfg.distractor_file.empty()
                                              ? bundled_distractor_pool()
                                              : load_distractor_pool(cfg.distractor_file);
    std::vector<Instance> instances;
    for (const GenSettings& cell : expand_cells(cfg)) {
        const std::string tag = cell_tag(cell);
        for (int i = 0; i < cfg.samples_per_cell; ++i) {
            instances.push_back(
                gen_instance(derive_seed(cfg.base_seed, tag, static_cast<uint64_t>(i)), cell, pool));
        }
    }
    const auto parent = std::filesystem::path(out_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    write_instance_file(out_path, instances);
    return instances;
}

struct RunSummary {
    int total_trials = 0;
    int completed = 0;   // trials executed this invocation
    int skipped = 0;     // trials already present in the transcript file
    int responsive = 0;  // trials whose every query succeeded
    int failed_queries = 0;
    double response_rate = 0.0;
};

inline Trial run_protocol(const RunConfig& cfg, const Instance& inst, ChatClient& client) {
    switch (cfg.protocol) {
        case Protocol::FinalQuery:
            return run_final_query(inst, client, cfg.style);
        case Protocol::IntermediateProbing:
            return run_intermediate_probing(inst, client, cfg.style);
        case Protocol::CompressedInit:
            return run_compressed_init(inst, cfg.compressed_k, client, cfg.style,
                                       cfg.compressed_per_step);
    }
    return run_final_query(inst, client, cfg.style);
}

inline std::string trial_id_for(const RunConfig& cfg, const Instance& inst) {
    std::string id = inst.id + ":" + protocol_tag(cfg.protocol, cfg.compressed_k);
    if (cfg.protocol == Protocol::CompressedInit && cfg.compressed_per_step) id += ":per-step";
    return id;
}

// Runs every instance not already present in the transcript file. Trials are
// appended (with a header record on first write) as they complete, so an
// interrupted run resumes by rerunning the same command. Per-trial errors are
// recorded and the run continues.
inline RunSummary cmd_run(const RunConfig& cfg, const std::vector<Instance>& instances,
                          const std::string& transcript_path) {
    std::set<std::string> done;
    if (std::filesystem::exists(transcript_path)) {
        for_each_jsonl(transcript_path, [&](const json& j) {
            check_schema_version(j, "transcript");
            if (j.value("kind", "") == "trial") done.insert(j.at("trial_id").get<std::string>());
        });
    }

    const auto parent = std::filesystem::path(transcript_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    const bool fresh = !std::filesystem::exists(transcript_path) ||
                       std::filesystem::file_size(transcript_path) == 0;
    std::ofstream out(transcript_path, std::ios::app);
    if (!out) throw Error("cannot write transcript file: " + transcript_path);
    if (fresh) {
        out << json{{"schema_version", kSchemaVersion}, {"kind", "run-header"},
                    {"config", to_json(cfg)}}
                   .dump()
            << "\n";
    }

    std::unique_ptr<ChatClient> client =
        cfg.use_http ? make_http_client(cfg.client) : make_scripted_client(cfg.agent);

    std::vector<const Instance*> todo;
    for (const Instance& inst : instances) {
        if (!done.contains(trial_id_for(cfg, inst))) todo.push_back(&inst);
    }

    RunSummary summary;
    summary.total_trials = static_cast<int>(instances.size());
    summary.skipped = static_cast<int>(instances.size() - todo.size());

    std::mutex io_mu;
    std::atomic<size_t> next{0};
    std::atomic<int> responsive{0}, failed_queries{0}, completed{0};
    std::exception_ptr fatal;

    const auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= todo.size()) return;
            try {
                Trial trial = run_protocol(cfg, *todo[i], *client);
                int failures = 0;
                for (const QueryRecord& q : trial.queries) {
                    if (!q.ok) ++failures;
                }
                failed_queries += failures;
                if (trial.responsive()) ++responsive;
                ++completed;
                std::lock_guard<std::mutex> lock(io_mu);
                out << to_json(trial).dump() << "\n";
                out.flush();
            } catch (const AuthError&) {
                std::lock_guard<std::mutex> lock(io_mu);
                if (!fatal) fatal = std::current_exception();
                next = todo.size();
            } catch (const std::exception& e) {
                // Per-trial failure: record a stub so the id is not retried
                // silently, and keep going.
                Trial trial;
                trial.trial_id = trial_id_for(cfg, *todo[i]);
                trial.instance = *todo[i];
                trial.protocol = cfg.protocol;
                trial.compressed_k = cfg.compressed_k;
                trial.style = cfg.style;
                QueryRecord q;
                q.ok = false;
                q.error = e.what();
                trial.queries.push_back(std::move(q));
                ++completed;
                ++failed_queries;
                std::lock_guard<std::mutex> lock(io_mu);
                out << to_json(trial).dump() << "\n";
                out.flush();
            }
        }
    };

    const int threads = std::max(1, cfg.concurrency);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (fatal) std::rethrow_exception(fatal);

    summary.completed = completed;
    summary.responsive = responsive;
    summary.failed_queries = failed_queries;
    summary.response_rate =
        summary.completed > 0 ? static_cast<double>(summary.responsive) / summary.completed : 0.0;
    return summary;
}

inline void write_run_summary(const std::string& path, const RunConfig& cfg,
                              const RunSummary& summary) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write run summary: " + path);
    out << json{{"schema_version", kSchemaVersion},
                {"kind", "run-summary"},
                {"total_trials", summary.total_trials},
                {"completed", summary.completed},
                {"skipped", summary.skipped},
                {"responsive", summary.responsive},
                {"failed_queries", summary.failed_queries},
                {"response_rate", summary.response_rate},
                {"config", to_json(cfg)}}
               .dump(2)
        << "\n";
}

struct TranscriptFile {
    json config;  // run-header config, if present
    std::vector<Trial> trials;
};

inline TranscriptFile read_transcript_file(const std::string& path) {
    TranscriptFile file;
    for_each_jsonl(path, [&](const json& j) {
        check_schema_version(j, "transcript");
        const std::string kind = j.value("kind", "");
        if (kind == "run-header") {
            file.config = j.value("config", json::object());
        } else if (kind == "trial") {
            file.trials.push_back(trial_from_json(j));
        } else {
            throw Error(path + ": unknown record kind '" + kind + "'");
        }
    });
    return file;
}

struct ReportPaths {
    std::string summary_grid;
    std::string report_rows;
    std::string curves_csv;
    std::string transitions_csv;
    std::vector<std::string> svgs;
};

// Emits the summary grid plus, when per-step data exists, curve and
// transition tables with SVG renderings. Everything is recomputed from the
// transcripts alone.
inline ReportPaths cmd_report(const std::string& transcript_path, const std::string& out_dir) {
    const TranscriptFile file = read_transcript_file(transcript_path);
    if (file.trials.empty()) throw Error("EmptyInput: no trials in " + transcript_path);
    std::filesystem::create_directories(out_dir);
    const std::string config_comment = file.config.is_null() ? "" : file.config.dump();

    ReportPaths paths;
    const std::vector<ReportRow> rows = build_report_rows(file.trials);
    paths.summary_grid = out_dir + "/summary_grid.csv";
    paths.report_rows = out_dir + "/report_rows.csv";
    write_summary_grid(paths.summary_grid, rows, config_comment);
    write_report_rows(paths.report_rows, rows, config_comment);

    const std::vector<CellCurves> curves = build_cell_curves(file.trials);
    if (!curves.empty()) {
        paths.curves_csv = out_dir + "/curves.csv";
        paths.transitions_csv = out_dir + "/transitions.csv";
        write_curves_csv(paths.curves_csv, curves, config_comment);
        write_transitions_csv(paths.transitions_csv, curves, config_comment);
        for (const CellCurves& c : curves) {
            const std::string curve_svg = out_dir + "/curves_" + cell_tag(c.cell) + ".svg";
            const std::string trans_svg = out_dir + "/transitions_" + cell_tag(c.cell) + ".svg";
            write_curves_svg(curve_svg, c);
            write_transitions_svg(trans_svg, c);
            paths.svgs.push_back(curve_svg);
            paths.svgs.push_back(trans_svg);
        }
    }
    return paths;
}

}  // namespace boxkey
