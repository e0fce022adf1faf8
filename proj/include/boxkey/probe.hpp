#pragma once

#include <string>
#include <vector>

#include "boxkey/client.hpp"
#include "boxkey/env.hpp"
#include "boxkey/genesis.hpp"
#include "boxkey/metrics.hpp"
#include "boxkey/parse.hpp"
#include "boxkey/prompt.hpp"

namespace boxkey {

enum class Protocol { FinalQuery, IntermediateProbing, CompressedInit };

inline std::string protocol_tag(Protocol p, int k = 0) {
    switch (p) {
        case Protocol::FinalQuery: return "final";
        case Protocol::IntermediateProbing: return "intermediate";
        case Protocol::CompressedInit: return "compressed-k" + std::to_string(k);
    }
    return "final";
}

struct QueryRecord {
    int step_index = 0;  // renumbered step the query targets
    MessageList messages;
    std::string raw_response;
    bool ok = false;
    std::string error;
    int retries = 0;
    PredictionMap prediction;
    StepScore score;

    friend bool operator==(const QueryRecord&, const QueryRecord&) = default;
};

struct Trial {
    std::string trial_id;
    Instance instance;
    Protocol protocol = Protocol::FinalQuery;
    int compressed_k = 0;
    RenderStyle style = RenderStyle::Traditional;
    std::vector<QueryRecord> queries;
    std::vector<StepTransitions> transitions;

    bool responsive() const {
        for (const QueryRecord& q : queries) {
            if (!q.ok) return false;
        }
        return !queries.empty();
    }

    friend bool operator==(const Trial&, const Trial&) = default;
};

namespace detail {

// Oracle expectation at renumbered step `step` (0 = the possibly compressed
// Step-0), i.e. after skip_k + step actions.
inline std::vector<ExpectedAtom> expected_at(const Instance& inst, int skip_k, int step) {
    GroundState state = initial_state(inst.env);
    for (int i = 0; i < skip_k + step; ++i) {
        state = apply_step(state, inst.steps[static_cast<size_t>(i)]);
    }
    return render_expected_atoms(state, inst.env, inst.lexicon, inst.variant);
}

inline QueryRecord run_query(const Instance& inst, ChatClient& client, RenderStyle style,
                             int skip_k, int query_step) {
    QueryRecord record;
    record.step_index = query_step;
    record.messages = assemble(build_bundle(inst, skip_k, query_step), style);

    const std::vector<ExpectedAtom> expected = expected_at(inst, skip_k, query_step);
    const std::vector<ExpectedAtom> previous = expected_at(inst, skip_k, query_step - 1);
    const OracleView view{answer_atoms_text(expected), answer_atoms_text(previous)};

    const CompletionResult result = client.complete(record.messages, view);
    record.ok = result.ok;
    record.error = result.error;
    record.retries = result.retries;
    record.raw_response = result.text;
    if (record.ok) {
        record.prediction = normalize(extract_states(record.raw_response), to_queried_states(expected));
        record.score = score_step(record.prediction, expected);
    }
    return record;
}

// Predictions equal to the rendered expectation; stands in for demo answers
// shown to the model inside the demonstration window.
inline PredictionMap prediction_from_expected(const std::vector<ExpectedAtom>& expected) {
    PredictionMap pred;
    for (const ExpectedAtom& a : expected) {
        pred.entries.emplace(std::make_pair(a.functor, a.argument), a.value);
        pred.addressed_atoms += 1;
    }
    return pred;
}

inline std::vector<StateId> changed_by(const StepAction& action) {
    return {box_state(action.box), key_state(action.key)};
}

// Transition records across consecutive queried steps. Inside the demo
// window the demo answer serves as the previous prediction; a failed query
// leaves its states UNRESOLVED on both sides.
inline std::vector<StepTransitions> classify_probing_run(const Instance& inst, int skip_k,
                                                         const std::vector<QueryRecord>& queries) {
    std::vector<StepTransitions> out;
    const PredictionMap empty;
    for (size_t qi = 0; qi < queries.size(); ++qi) {
        const int s = queries[qi].step_index;
        const std::vector<ExpectedAtom> cur_expected = expected_at(inst, skip_k, s);
        const std::vector<ExpectedAtom> prev_expected = expected_at(inst, skip_k, s - 1);

        const PredictionMap* prev_pred = &empty;
        PredictionMap demo_pred;
        if (s - 1 <= inst.n_shots) {
            demo_pred = prediction_from_expected(prev_expected);
            prev_pred = &demo_pred;
        } else if (qi > 0 && queries[qi - 1].step_index == s - 1 && queries[qi - 1].ok) {
            prev_pred = &queries[qi - 1].prediction;
        }
        const PredictionMap* cur_pred = queries[qi].ok ? &queries[qi].prediction : &empty;

        StepTransitions t =
            classify_transitions(*prev_pred, *cur_pred, prev_expected, cur_expected,
                                 changed_by(inst.steps[static_cast<size_t>(skip_k + s - 1)]));
        t.step_index = s;
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace detail

// Demonstrations for Step-0..n_shots, bare steps after the window, one query
// at the final step.
inline Trial run_final_query(const Instance& inst, ChatClient& client,
                             RenderStyle style = RenderStyle::Traditional) {
    Trial trial;
    trial.trial_id = inst.id + ":" + protocol_tag(Protocol::FinalQuery);
    trial.instance = inst;
    trial.protocol = Protocol::FinalQuery;
    trial.style = style;
    trial.queries.push_back(
        detail::run_query(inst, client, style, 0, static_cast<int>(inst.steps.size())));
    return trial;
}

// One independent stateless request per step s >= 1, with demonstration
// answers only through step s-1 (capped at the shot window).
inline Trial run_intermediate_probing(const Instance& inst, ChatClient& client,
                                      RenderStyle style = RenderStyle::Traditional) {
    Trial trial;
    trial.trial_id = inst.id + ":" + protocol_tag(Protocol::IntermediateProbing);
    trial.instance = inst;
    trial.protocol = Protocol::IntermediateProbing;
    trial.style = style;
    const int total = static_cast<int>(inst.steps.size());
    for (int s = 1; s <= total; ++s) {
        trial.queries.push_back(detail::run_query(inst, client, style, 0, s));
    }
    trial.transitions = detail::classify_probing_run(inst, 0, trial.queries);
    return trial;
}

// Folds the first k steps into the Step-0 initialization answer and runs the
// remaining renumbered steps, either as a single final query or probing every
// step.
inline Trial run_compressed_init(const Instance& inst, int k, ChatClient& client,
                                 RenderStyle style = RenderStyle::Traditional,
                                 bool per_step = false) {
    const int total = static_cast<int>(inst.steps.size());
    if (k < 1 || k >= total) {
        throw BadKError("run_compressed_init: k " + std::to_string(k) + " outside [1, " +
                        std::to_string(total) + ")");
    }
    Trial trial;
    trial.trial_id = inst.id + ":" + protocol_tag(Protocol::CompressedInit, k) +
                     (per_step ? ":per-step" : "");
    trial.instance = inst;
    trial.protocol = Protocol::CompressedInit;
    trial.compressed_k = k;
    trial.style = style;
    const int remaining = total - k;
    if (per_step) {
        for (int s = 1; s <= remaining; ++s) {
            trial.queries.push_back(detail::run_query(inst, client, style, k, s));
        }
        trial.transitions = detail::classify_probing_run(inst, k, trial.queries);
    } else {
        trial.queries.push_back(detail::run_query(inst, client, style, k, remaining));
    }
    return trial;
}

}  // namespace boxkey
