// boxkey command-line driver.
//
// Subcommands:
//   generate  write a seeded instance batch as JSONL
//   run       drive an agent through the instances and append transcripts
//   probe     shorthand for `run` with the intermediate-probing protocol
//   report    turn transcripts into summary/curve tables and SVG plots
//
// A JSON config file (--config) provides defaults; every flag overrides the
// matching field. The resolved config is embedded in all outputs.

#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "boxkey/runner.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::string protocol;
    std::string agent;
    std::string style;
    std::string distractor_file;
    int k = -1;
    int concurrency = -1;
    int samples = -1;
    uint64_t seed = 0;
    bool seed_set = false;
};

void add_common_flags(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "base seed")->each([&](const std::string&) {
        opts.seed_set = true;
    });
    cmd->add_option("--samples", opts.samples, "samples per matrix cell");
    cmd->add_option("--protocol", opts.protocol, "final | intermediate | compressed");
    cmd->add_option("--k", opts.k, "compressed-initialization skip count");
    cmd->add_option("--agent", opts.agent, "oracle | copylast | random | forgetful | http");
    cmd->add_option("--style", opts.style, "traditional | faked-multi-round");
    cmd->add_option("--concurrency", opts.concurrency, "parallel trials");
    cmd->add_option("--distractor-file", opts.distractor_file,
                    "newline-delimited sentence pool override");
}

boxkey::RunConfig resolve_config(const CommonOpts& opts) {
    boxkey::RunConfig cfg;
    if (!opts.config_path.empty()) cfg = boxkey::load_run_config(opts.config_path);
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    if (opts.seed_set) cfg.base_seed = opts.seed;
    if (opts.samples >= 0) cfg.samples_per_cell = opts.samples;
    if (!opts.protocol.empty()) cfg.protocol = boxkey::parse_protocol_tag(opts.protocol);
    if (opts.k >= 0) cfg.compressed_k = opts.k;
    if (!opts.agent.empty()) boxkey::parse_agent_tag(opts.agent, cfg);
    if (!opts.style.empty()) cfg.style = boxkey::parse_style_tag(opts.style);
    if (opts.concurrency > 0) cfg.concurrency = opts.concurrency;
    if (!opts.distractor_file.empty()) cfg.distractor_file = opts.distractor_file;
    return cfg;
}

std::string default_instances_path(const boxkey::RunConfig& cfg) {
    return cfg.out_dir + "/instances.jsonl";
}

std::string default_transcripts_path(const boxkey::RunConfig& cfg) {
    return cfg.out_dir + "/transcripts.jsonl";
}

int do_generate(const CommonOpts& opts, const std::string& instances_path) {
    const boxkey::RunConfig cfg = resolve_config(opts);
    const std::string path = instances_path.empty() ? default_instances_path(cfg) : instances_path;
    const auto instances = boxkey::cmd_generate(cfg, path);
    std::printf("wrote %zu instances to %s\n", instances.size(), path.c_str());
    return 0;
}

int do_run(const CommonOpts& opts, const std::string& instances_path,
           const std::string& transcripts_path) {
    const boxkey::RunConfig cfg = resolve_config(opts);
    const std::string in_path = instances_path.empty() ? default_instances_path(cfg) : instances_path;
    const std::string out_path =
        transcripts_path.empty() ? default_transcripts_path(cfg) : transcripts_path;
    const auto instances = boxkey::read_instance_file(in_path);
    const boxkey::RunSummary summary = boxkey::cmd_run(cfg, instances, out_path);
    boxkey::write_run_summary(cfg.out_dir + "/run_summary.json", cfg, summary);
    std::printf("trials: %d total, %d run, %d skipped, response rate %.3f\n",
                summary.total_trials, summary.completed, summary.skipped, summary.response_rate);
    std::printf("transcripts: %s\n", out_path.c_str());
    return 0;
}

int do_report(const CommonOpts& opts, const std::string& transcripts_path) {
    const boxkey::RunConfig cfg = resolve_config(opts);
    const std::string in_path =
        transcripts_path.empty() ? default_transcripts_path(cfg) : transcripts_path;
    const boxkey::ReportPaths paths = boxkey::cmd_report(in_path, cfg.out_dir);
    std::printf("summary grid:  %s\n", paths.summary_grid.c_str());
    std::printf("report rows:   %s\n", paths.report_rows.c_str());
    if (!paths.curves_csv.empty()) {
        std::printf("curves:        %s\n", paths.curves_csv.c_str());
        std::printf("transitions:   %s\n", paths.transitions_csv.c_str());
        std::printf("plots:         %zu svg files\n", paths.svgs.size());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"box-and-key situational state-tracking harness"};
    app.require_subcommand(1);

    CommonOpts gen_opts, run_opts, probe_opts, report_opts;
    std::string gen_instances, run_instances, run_transcripts, probe_instances, probe_transcripts,
        report_transcripts;

    CLI::App* generate = app.add_subcommand("generate", "generate a seeded instance batch");
    add_common_flags(generate, gen_opts);
    generate->add_option("--instances", gen_instances, "instance file to write");

    CLI::App* run = app.add_subcommand("run", "run a protocol over an instance file");
    add_common_flags(run, run_opts);
    run->add_option("--instances", run_instances, "instance file to read");
    run->add_option("--transcripts", run_transcripts, "transcript file to append");

    CLI::App* probe = app.add_subcommand("probe", "run intermediate state probing");
    add_common_flags(probe, probe_opts);
    probe->add_option("--instances", probe_instances, "instance file to read");
    probe->add_option("--transcripts", probe_transcripts, "transcript file to append");

    CLI::App* report = app.add_subcommand("report", "build tables and plots from transcripts");
    add_common_flags(report, report_opts);
    report->add_option("--transcripts", report_transcripts, "transcript file to read");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return do_generate(gen_opts, gen_instances);
        if (run->parsed()) return do_run(run_opts, run_instances, run_transcripts);
        if (probe->parsed()) {
            probe_opts.protocol = "intermediate";
            return do_run(probe_opts, probe_instances, probe_transcripts);
        }
        if (report->parsed()) return do_report(report_opts, report_transcripts);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
