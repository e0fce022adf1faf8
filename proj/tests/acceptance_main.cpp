// Acceptance suite. Each criterion runs offline against scripted agents (the
// last one against an in-process loopback server) and prints one PASS/FAIL
// line; the process exits non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "boxkey/runner.hpp"
#include "mock_server.hpp"

namespace {

using namespace boxkey;
namespace fs = std::filesystem;

struct Check {
    std::ostringstream detail;
    int failures = 0;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            ++failures;
            if (failures <= 5) detail << "\n    failed: " << what;
        }
    }
};

struct Criterion {
    std::string name;
    double time_budget_seconds;  // 0 = unbudgeted
    std::function<void(Check&)> fn;
};

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("boxkey_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

Lexicon sample_synthetic_lexicon() {
    Lexicon lex;
    lex.opened_functor = "NvSWxzvJb";
    lex.obtained_functor = "B";
    lex.box_prefix = "jqC";
    lex.key_prefix = "bsS";
    lex.mode = kSyntheticSynthetic;
    return lex;
}

// Worked two-box example: three of four states correct.
void check_metrics_fixture(Check& check) {
    const EnvConfig env{2, 2};
    const Lexicon lex = sample_synthetic_lexicon();
    GroundState state = initial_state(env);
    state.opened[0] = true;
    const auto expected = render_expected_atoms(state, env, lex, InstructionVariant::Normal);

    const std::string correct_answer = answer_atoms_text(expected);
    check.require(correct_answer ==
                      "NvSWxzvJb(jqC-0)=True, B(bsS-0)=False, NvSWxzvJb(jqC-1)=False, "
                      "B(bsS-1)=False",
                  "expected-answer text");

    const std::string model_answer =
        "NvSWxzvJb(jqC-0)=True, B(bsS-0)=True, NvSWxzvJb(jqC-1)=False, B(bsS-1)=False";
    const StepScore score =
        score_step(normalize(extract_states(model_answer), to_queried_states(expected)), expected);
    check.require(score.state_em == 0.75, "State-EM = 75%");
    check.require(score.step_em == 0, "Step-EM = 0");
}

std::vector<GenSettings> grid_cells() {
    std::vector<GenSettings> cells;
    // 18 instruction/lexicon/shot cells.
    for (const InstructionVariant variant :
         {InstructionVariant::Normal, InstructionVariant::CounterLanguageInstruction,
          InstructionVariant::CounterOutputFormat}) {
        for (const LexiconMode mode : {kNaturalNatural, kSyntheticSynthetic}) {
            for (const int shots : {2, 3, 5}) {
                cells.push_back(GenSettings{EnvConfig{}, mode, variant, shots, false});
            }
        }
    }
    // Distractor cells.
    for (const LexiconMode mode : {kNaturalNatural, kSyntheticSynthetic}) {
        for (const int shots : {2, 5}) {
            cells.push_back(GenSettings{EnvConfig{}, mode, InstructionVariant::Normal, shots, true});
        }
    }
    return cells;
}

// Oracle agent sweeps every grid cell at 100% with clean parses.
void check_oracle_identity(Check& check) {
    ScriptedAgent oracle(ScriptedAgentSpec{AgentKind::Oracle});
    for (const GenSettings& cell : grid_cells()) {
        double step_em = 0.0, state_em = 0.0;
        int anomalies = 0;
        const int samples = 50;
        for (int i = 0; i < samples; ++i) {
            const Instance inst =
                gen_instance(derive_seed(11, cell_tag(cell), static_cast<uint64_t>(i)), cell);
            const Trial trial = run_final_query(inst, oracle);
            step_em += trial.queries[0].score.step_em;
            state_em += trial.queries[0].score.state_em;
            if (!trial.queries[0].prediction.anomalies.clean()) ++anomalies;
        }
        check.require(step_em == samples && state_em == samples,
                      "cell " + cell_tag(cell) + " at 100% / 100%");
        check.require(anomalies == 0, "cell " + cell_tag(cell) + " parse anomalies");
    }
}

// Copy-last at the final query scores exactly (20-2e)/20 with Step-EM 0.
void check_copy_baseline(Check& check) {
    ScriptedAgent copylast(ScriptedAgentSpec{AgentKind::CopyLastAnswer});
    int checked = 0;
    for (const int shots : {2, 3, 5}) {
        const GenSettings cell{EnvConfig{}, kSyntheticSynthetic, InstructionVariant::Normal, shots,
                               false};
        for (int i = 0; i < 60; ++i) {
            const Instance inst =
                gen_instance(derive_seed(12, cell_tag(cell), static_cast<uint64_t>(i)), cell);
            const int e = static_cast<int>(inst.steps.size()) - shots;
            check.require(e >= 1, "post-demonstration step count >= 1");
            const Trial trial = run_final_query(inst, copylast);
            const StepScore& score = trial.queries[0].score;
            check.require(score.state_em == (20.0 - 2.0 * e) / 20.0,
                          inst.id + " State-EM = (20-2e)/20");
            check.require(score.step_em == 0, inst.id + " Step-EM = 0");
            ++checked;
        }
    }
    check.require(checked == 180, "180 instances checked");
}

// Random truth tokens sit at 50% +/- 3% State-EM and never match a full step.
void check_random_baseline(Check& check) {
    ScriptedAgent random_agent(ScriptedAgentSpec{AgentKind::RandomTruth, 0.0, 31});
    const GenSettings cell{EnvConfig{}, kSyntheticSynthetic, InstructionVariant::Normal, 2, false};
    double state_em_sum = 0.0;
    int steps = 0, step_em_hits = 0;
    for (int i = 0; i < 250; ++i) {
        const Instance inst =
            gen_instance(derive_seed(13, cell_tag(cell), static_cast<uint64_t>(i)), cell);
        const Trial trial = run_final_query(inst, random_agent);
        state_em_sum += trial.queries[0].score.state_em;
        step_em_hits += trial.queries[0].score.step_em;
        ++steps;
    }
    const double mean = state_em_sum / steps;
    check.require(steps >= 200, ">= 200 queried steps");
    check.require(mean > 0.47 && mean < 0.53,
                  "mean State-EM " + std::to_string(mean) + " within 50% +/- 3%");
    check.require(step_em_hits == 0, "Step-EM = 0 throughout");
}

// Same seed, Normal vs CounterOutputFormat: identical ground truth, rendered
// answers differ only in negated truth tokens.
void check_flip_consistency(Check& check) {
    for (uint64_t seed = 0; seed < 100; ++seed) {
        GenSettings normal{EnvConfig{}, kSyntheticSynthetic, InstructionVariant::Normal, 2, false};
        GenSettings counter = normal;
        counter.variant = InstructionVariant::CounterOutputFormat;
        const Instance a = gen_instance(seed, normal);
        const Instance b = gen_instance(seed, counter);
        check.require(a.steps == b.steps && a.lexicon == b.lexicon,
                      "seed " + std::to_string(seed) + " shares ground truth");

        GroundState state = initial_state(a.env);
        for (size_t t = 0; t <= a.steps.size(); ++t) {
            if (t > 0) state = apply_step(state, a.steps[t - 1]);
            const std::string normal_text =
                render_answer(state, a.env, a.lexicon, InstructionVariant::Normal);
            const std::string counter_text =
                render_answer(state, b.env, b.lexicon, InstructionVariant::CounterOutputFormat);
            std::string negated;
            for (size_t i = 0; i < normal_text.size();) {
                if (normal_text.compare(i, 5, "=True") == 0) {
                    negated += "=False";
                    i += 5;
                } else if (normal_text.compare(i, 6, "=False") == 0) {
                    negated += "=True";
                    i += 6;
                } else {
                    negated += normal_text[i];
                    ++i;
                }
            }
            check.require(counter_text == negated,
                          "seed " + std::to_string(seed) + " flip law at step " + std::to_string(t));
        }
    }
}

// 1000 rendered answers across every lexicon mode and variant re-parse with
// zero anomalies and matching booleans.
void check_parser_round_trip(Check& check) {
    Rng rng(14);
    const std::vector<LexiconMode> modes = {kNaturalNatural, kSyntheticNatural, kNaturalSynthetic,
                                            kSyntheticSynthetic};
    const std::vector<InstructionVariant> variants = {
        InstructionVariant::Normal, InstructionVariant::CounterOutputFormat,
        InstructionVariant::CounterLanguageInstruction};
    int done = 0;
    for (int i = 0; i < 1000; ++i) {
        const EnvConfig env{static_cast<int>(rng.between(1, 10)),
                            static_cast<int>(rng.between(1, 10))};
        const Lexicon lex = gen_lexicon(rng, modes[static_cast<size_t>(i) % modes.size()]);
        const InstructionVariant variant = variants[static_cast<size_t>(i) % variants.size()];
        GroundState state = initial_state(env);
        const int steps = static_cast<int>(rng.between(0, std::min(env.num_boxes, env.num_keys)));
        const auto boxes = rng.sample_without_replacement(env.num_boxes, steps);
        const auto keys = rng.sample_without_replacement(env.num_keys, steps);
        for (int s = 0; s < steps; ++s) state = apply_step(state, StepAction{boxes[s], keys[s]});

        const auto expected = render_expected_atoms(state, env, lex, variant);
        const PredictionMap pred = normalize(
            extract_states(render_answer(state, env, lex, variant)), to_queried_states(expected));
        bool clean = pred.anomalies.clean();
        bool values_match = true;
        for (const ExpectedAtom& atom : expected) {
            const auto it = pred.entries.find({atom.functor, atom.argument});
            if (it == pred.entries.end() || it->second != atom.value) values_match = false;
        }
        check.require(clean, "render " + std::to_string(i) + " parses cleanly");
        check.require(values_match, "render " + std::to_string(i) + " booleans match");
        ++done;
    }
    check.require(done == 1000, "1000 renders checked");
}

// Forgetful(0.1) under intermediate probing: HU-IO hits 10% +/- 2% of the
// untouched-correct states; the oracle never strays from CU/MC; the named
// categories partition every resolved state.
void check_transition_calibration(Check& check) {
    ScriptedAgent forgetful(ScriptedAgentSpec{AgentKind::Forgetful, 0.1, 15});
    const GenSettings cell{EnvConfig{}, kSyntheticSynthetic, InstructionVariant::Normal, 2, false};
    long untouched_correct = 0, hu_io = 0;
    for (int i = 0; i < 40; ++i) {
        const Instance inst =
            gen_instance(derive_seed(16, cell_tag(cell), static_cast<uint64_t>(i)), cell);
        const Trial trial = run_intermediate_probing(inst, forgetful);
        for (const StepTransitions& t : trial.transitions) {
            int named = 0;
            for (int c = 0; c < kTransitionCategoryCount - 1; ++c) {
                named += t.counts[static_cast<size_t>(c)];
            }
            check.require(named == t.resolved(), "named categories partition resolved states");
            check.require(named + t.count(TransitionCategory::UNRESOLVED) ==
                              static_cast<int>(t.per_state.size()),
                          "per-state records sum to the query size");
            untouched_correct += t.count(TransitionCategory::MC) + t.count(TransitionCategory::HU_IO);
            hu_io += t.count(TransitionCategory::HU_IO);
        }
    }
    check.require(untouched_correct >= 2000,
                  ">= 2000 untouched-correct states (got " + std::to_string(untouched_correct) + ")");
    const double rate = static_cast<double>(hu_io) / static_cast<double>(untouched_correct);
    check.require(rate > 0.08 && rate < 0.12,
                  "HU-IO rate " + std::to_string(rate) + " within 10% +/- 2%");

    ScriptedAgent oracle(ScriptedAgentSpec{AgentKind::Oracle});
    for (int i = 0; i < 10; ++i) {
        const Instance inst =
            gen_instance(derive_seed(17, cell_tag(cell), static_cast<uint64_t>(i)), cell);
        const Trial trial = run_intermediate_probing(inst, oracle);
        for (const StepTransitions& t : trial.transitions) {
            check.require(t.count(TransitionCategory::DR) == 0 &&
                              t.count(TransitionCategory::HU_IO) == 0 &&
                              t.count(TransitionCategory::HU_AC) == 0 &&
                              t.count(TransitionCategory::FU) == 0,
                          "oracle produces no error transitions");
        }
    }
}

// The compressed Step-0 answer equals an independent k-step replay.
void check_compressed_equivalence(Check& check) {
    Rng rng(18);
    int pairs = 0;
    while (pairs < 500) {
        const GenSettings cell{EnvConfig{}, kSyntheticSynthetic, InstructionVariant::Normal,
                               rng.below(2) == 0 ? 2 : 5, false};
        const Instance inst = gen_instance(rng.next_u64(), cell);
        const int total = static_cast<int>(inst.steps.size());
        if (total < 2) continue;
        const int k = static_cast<int>(rng.between(1, total - 1));

        const PromptBundle bundle = build_bundle(inst, k, total - k);
        GroundState replayed = initial_state(inst.env);
        for (int i = 0; i < k; ++i) replayed = apply_step(replayed, inst.steps[static_cast<size_t>(i)]);
        check.require(bundle.demo_blocks[0].answer_text ==
                          render_answer(replayed, inst.env, inst.lexicon, inst.variant),
                      inst.id + " k=" + std::to_string(k));
        ++pairs;
    }
}

// Intermediate probing's final-step prompt is byte-identical to FinalQuery's.
void check_prompt_protocol_identity(Check& check) {
    ScriptedAgent oracle(ScriptedAgentSpec{AgentKind::Oracle});
    for (uint64_t seed = 200; seed < 240; ++seed) {
        for (const int shots : {2, 3, 5}) {
            const GenSettings cell{EnvConfig{}, kSyntheticSynthetic, InstructionVariant::Normal,
                                   shots, false};
            const Instance inst = gen_instance(seed, cell);
            const Trial fin = run_final_query(inst, oracle);
            const Trial probing = run_intermediate_probing(inst, oracle);
            check.require(probing.queries.back().messages == fin.queries[0].messages,
                          inst.id + " prompts byte-identical");
        }
    }
}

// Ten instances against a loopback chat-completions server: completes,
// records the response rate, respects the client concurrency bound, and
// produces the summary grid.
void check_live_run_smoke(Check& check) {
    boxkey::testing::MockChatServer server;
    server.fail_first(2);  // exercise the retry path

    TempDir tmp;
    RunConfig cfg;
    cfg.base_seed = 19;
    cfg.samples_per_cell = 5;
    cfg.matrix.lexicon_modes = {kNaturalNatural, kSyntheticSynthetic};
    cfg.matrix.variants = {InstructionVariant::Normal};
    cfg.matrix.shot_counts = {2};
    cfg.out_dir = tmp.file("out");
    cfg.concurrency = 4;
    cfg.use_http = true;
    cfg.client.endpoint = server.endpoint();
    cfg.client.max_concurrent = 2;
    cfg.client.max_retries = 4;
    cfg.client.backoff_base_seconds = 0.02;
    cfg.client.timeout_seconds = 10.0;

    const auto instances = cmd_generate(cfg, tmp.file("instances.jsonl"));
    check.require(instances.size() == 10, "10 instances generated");
    const RunSummary summary = cmd_run(cfg, instances, tmp.file("transcripts.jsonl"));
    write_run_summary(tmp.file("out/run_summary.json"), cfg, summary);

    check.require(summary.completed == 10, "run completed");
    check.require(summary.response_rate == 1.0,
                  "response rate recorded as 1.0 after retries (got " +
                      std::to_string(summary.response_rate) + ")");
    check.require(server.max_in_flight() <= 2, "client concurrency bound respected");
    check.require(fs::exists(tmp.file("out/run_summary.json")), "run summary written");

    const ReportPaths paths = cmd_report(tmp.file("transcripts.jsonl"), cfg.out_dir);
    std::ifstream grid(paths.summary_grid);
    const std::string grid_text((std::istreambuf_iterator<char>(grid)), {});
    check.require(grid_text.find("instruction,lexicon,2-shot") != std::string::npos,
                  "grid header present");
    check.require(grid_text.find("Normal Instruction") != std::string::npos,
                  "grid rows present");
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"metrics worked example scores 75% / 0", 1.0, check_metrics_fixture},
        {"oracle identity across the full grid", 60.0, check_oracle_identity},
        {"copy-last closed form (20-2e)/20", 0.0, check_copy_baseline},
        {"random-truth baseline near 50%", 0.0, check_random_baseline},
        {"flip consistency across variants", 0.0, check_flip_consistency},
        {"parser round-trip over 1000 renders", 0.0, check_parser_round_trip},
        {"transition classifier calibration", 0.0, check_transition_calibration},
        {"compressed initialization equivalence", 0.0, check_compressed_equivalence},
        {"prompt protocol identity", 0.0, check_prompt_protocol_identity},
        {"loopback live-run smoke", 30.0, check_live_run_smoke},
    };

    int failed = 0;
    for (const Criterion& criterion : criteria) {
        Check check;
        std::string error;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.fn(check);
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        bool ok = check.failures == 0 && error.empty();
        std::string note;
        if (criterion.time_budget_seconds > 0 && elapsed > criterion.time_budget_seconds) {
            ok = false;
            note = " (over " + std::to_string(criterion.time_budget_seconds) + "s budget)";
        }
        if (!error.empty()) note += " (exception: " + error + ")";

        std::printf("[%s] %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", criterion.name.c_str(), elapsed,
                    note.c_str(), ok ? "" : check.detail.str().c_str());
        if (!ok) ++failed;
    }
    if (failed > 0) {
        std::printf("%d of %zu acceptance criteria failed\n", failed, criteria.size());
        return 1;
    }
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
    return 0;
}
