#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "boxkey/parse.hpp"
#include "boxkey/prompt.hpp"

namespace boxkey {

// Per-query scores. state_em is the matched fraction of queried states;
// step_em demands an exact match including counts, so unknown atoms, missing
// states, and duplicate atoms all zero it out.
struct StepScore {
    int matched = 0;
    int queried = 0;
    int predicted = 0;  // parsed atoms (repeats included) naming queried states
    double state_em = 0.0;
    int step_em = 0;

    friend bool operator==(const StepScore&, const StepScore&) = default;
};

inline StepScore score_step(const PredictionMap& pred, const std::vector<ExpectedAtom>& expected) {
    StepScore score;
    score.queried = static_cast<int>(expected.size());
    score.predicted = pred.addressed_atoms;
    for (const ExpectedAtom& e : expected) {
        const auto it = pred.entries.find(std::make_pair(e.functor, e.argument));
        if (it != pred.entries.end() && it->second == e.value) score.matched += 1;
    }
    score.state_em = score.queried > 0
                         ? static_cast<double>(score.matched) / static_cast<double>(score.queried)
                         : 0.0;
    score.step_em = (score.matched == score.queried && score.predicted == score.queried &&
                     pred.anomalies.unknown_atoms.empty() && pred.anomalies.missing_states.empty())
                        ? 1
                        : 0;
    return score;
}

// Fine-grained per-state transition categories between consecutive queried
// steps. CU/FU apply to the two states the step changed; the rest partition
// the untouched states. UNRESOLVED absorbs states without a usable
// prediction at either end.
enum class TransitionCategory : int {
    CU = 0,         // changed state predicted at its new expected value
    FU = 1,         // changed state predicted wrong
    MC = 2,         // untouched, correct before and after
    HU_IO = 3,      // untouched, correct before, wrong after
    DR = 4,         // untouched, wrong before, same wrong value kept
    HU_AC = 5,      // untouched, wrong before, flipped back to correct
    UNRESOLVED = 6,
};

inline constexpr int kTransitionCategoryCount = 7;

inline const char* transition_category_name(TransitionCategory c) {
    switch (c) {
        case TransitionCategory::CU: return "CU";
        case TransitionCategory::FU: return "FU";
        case TransitionCategory::MC: return "MC";
        case TransitionCategory::HU_IO: return "HU-IO";
        case TransitionCategory::DR: return "DR";
        case TransitionCategory::HU_AC: return "HU-AC";
        case TransitionCategory::UNRESOLVED: return "UNRESOLVED";
    }
    return "UNRESOLVED";
}

struct StateTransition {
    StateId state;
    TransitionCategory category = TransitionCategory::UNRESOLVED;

    friend bool operator==(const StateTransition&, const StateTransition&) = default;
};

struct StepTransitions {
    int step_index = 0;
    std::vector<StateTransition> per_state;
    std::array<int, kTransitionCategoryCount> counts{};

    int count(TransitionCategory c) const { return counts[static_cast<size_t>(c)]; }
    int resolved() const {
        return static_cast<int>(per_state.size()) - count(TransitionCategory::UNRESOLVED);
    }

    friend bool operator==(const StepTransitions&, const StepTransitions&) = default;
};

inline StepTransitions classify_transitions(const PredictionMap& prev_pred,
                                            const PredictionMap& cur_pred,
                                            const std::vector<ExpectedAtom>& prev_expected,
                                            const std::vector<ExpectedAtom>& cur_expected,
                                            const std::vector<StateId>& changed) {
    if (prev_expected.size() != cur_expected.size()) {
        throw MismatchedQueryError("classify_transitions: query sizes differ");
    }
    for (size_t i = 0; i < cur_expected.size(); ++i) {
        if (prev_expected[i].state != cur_expected[i].state) {
            throw MismatchedQueryError("classify_transitions: queries reference different states");
        }
    }

    StepTransitions out;
    for (size_t i = 0; i < cur_expected.size(); ++i) {
        const ExpectedAtom& cur = cur_expected[i];
        const ExpectedAtom& prev = prev_expected[i];
        const auto key = std::make_pair(cur.functor, cur.argument);
        const auto prev_it = prev_pred.entries.find(key);
        const auto cur_it = cur_pred.entries.find(key);

        TransitionCategory cat = TransitionCategory::UNRESOLVED;
        if (prev_it != prev_pred.entries.end() && cur_it != cur_pred.entries.end()) {
            const bool p_prev = prev_it->second;
            const bool p_cur = cur_it->second;
            const bool is_changed =
                std::find(changed.begin(), changed.end(), cur.state) != changed.end();
            if (is_changed) {
                cat = p_cur == cur.value ? TransitionCategory::CU : TransitionCategory::FU;
            } else if (p_prev == prev.value) {
                cat = p_cur == cur.value ? TransitionCategory::MC : TransitionCategory::HU_IO;
            } else {
                cat = p_cur == p_prev ? TransitionCategory::DR : TransitionCategory::HU_AC;
            }
        }
        out.per_state.push_back(StateTransition{cur.state, cat});
        out.counts[static_cast<size_t>(cat)] += 1;
    }
    return out;
}

// Per-step aggregates across trials, aligned by step index.
struct StepAggregate {
    int step = 0;
    int n_scores = 0;
    double mean_state_em = 0.0;
    double mean_step_em = 0.0;
    std::array<int, kTransitionCategoryCount> transition_counts{};
    int correct_total = 0;    // CU + MC + HU-AC
    int incorrect_total = 0;  // FU + HU-IO + DR
};

inline std::vector<StepAggregate> aggregate_curves(
    const std::vector<std::vector<std::pair<int, StepScore>>>& scores_per_trial,
    const std::vector<std::vector<StepTransitions>>& transitions_per_trial) {
    int max_step = 0;
    for (const auto& trial : scores_per_trial) {
        for (const auto& [step, score] : trial) max_step = std::max(max_step, step);
    }
    for (const auto& trial : transitions_per_trial) {
        for (const auto& t : trial) max_step = std::max(max_step, t.step_index);
    }

    std::vector<StepAggregate> rows(static_cast<size_t>(max_step));
    for (int s = 1; s <= max_step; ++s) rows[static_cast<size_t>(s - 1)].step = s;

    for (const auto& trial : scores_per_trial) {
        for (const auto& [step, score] : trial) {
            if (step < 1) continue;
            StepAggregate& row = rows[static_cast<size_t>(step - 1)];
            row.n_scores += 1;
            row.mean_state_em += score.state_em;
            row.mean_step_em += score.step_em;
        }
    }
    for (StepAggregate& row : rows) {
        if (row.n_scores > 0) {
            row.mean_state_em /= row.n_scores;
            row.mean_step_em /= row.n_scores;
        }
    }
    for (const auto& trial : transitions_per_trial) {
        for (const StepTransitions& t : trial) {
            if (t.step_index < 1) continue;
            StepAggregate& row = rows[static_cast<size_t>(t.step_index - 1)];
            for (size_t c = 0; c < t.counts.size(); ++c) row.transition_counts[c] += t.counts[c];
        }
    }
    for (StepAggregate& row : rows) {
        row.correct_total = row.transition_counts[static_cast<size_t>(TransitionCategory::CU)] +
                            row.transition_counts[static_cast<size_t>(TransitionCategory::MC)] +
                            row.transition_counts[static_cast<size_t>(TransitionCategory::HU_AC)];
        row.incorrect_total = row.transition_counts[static_cast<size_t>(TransitionCategory::FU)] +
                              row.transition_counts[static_cast<size_t>(TransitionCategory::HU_IO)] +
                              row.transition_counts[static_cast<size_t>(TransitionCategory::DR)];
    }
    return rows;
}

}  // namespace boxkey
