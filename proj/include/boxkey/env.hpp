#pragma once

#include <compare>
#include <string>
#include <utility>
#include <vector>

#include "boxkey/errors.hpp"

namespace boxkey {

enum class QueryOrdering { Interleaved, BoxesThenKeys };

// Sizes are capped at 10 because state arguments carry a single index digit.
struct EnvConfig {
    int num_boxes = 10;
    int num_keys = 10;
    QueryOrdering query_ordering = QueryOrdering::Interleaved;

    int total_states() const { return num_boxes + num_keys; }

    bool valid() const {
        return num_boxes >= 1 && num_boxes <= 10 && num_keys >= 1 && num_keys <= 10;
    }

    friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

enum class StateKind { Box, Key };

struct StateId {
    StateKind kind = StateKind::Box;
    int index = 0;

    friend auto operator<=>(const StateId&, const StateId&) = default;
};

inline StateId box_state(int index) { return StateId{StateKind::Box, index}; }
inline StateId key_state(int index) { return StateId{StateKind::Key, index}; }

// Ground truth: which boxes are opened and which keys are obtained.
// Flags are monotonic within an episode; apply_step never clears one.
struct GroundState {
    std::vector<bool> opened;
    std::vector<bool> obtained;

    friend bool operator==(const GroundState&, const GroundState&) = default;
};

struct StepAction {
    int box = 0;
    int key = 0;

    friend bool operator==(const StepAction&, const StepAction&) = default;
};

inline GroundState initial_state(const EnvConfig& config) {
    return GroundState{std::vector<bool>(static_cast<size_t>(config.num_boxes), false),
                       std::vector<bool>(static_cast<size_t>(config.num_keys), false)};
}

// Returns a copy with exactly opened[action.box] and obtained[action.key] set.
// A repeated target means the fixture or generator is corrupt, so it is an
// error rather than a silent no-op.
inline GroundState apply_step(const GroundState& state, const StepAction& action) {
    const int nb = static_cast<int>(state.opened.size());
    const int nk = static_cast<int>(state.obtained.size());
    if (action.box < 0 || action.box >= nb) {
        throw OutOfRangeError("apply_step: box index " + std::to_string(action.box) +
                              " out of range [0, " + std::to_string(nb) + ")");
    }
    if (action.key < 0 || action.key >= nk) {
        throw OutOfRangeError("apply_step: key index " + std::to_string(action.key) +
                              " out of range [0, " + std::to_string(nk) + ")");
    }
    if (state.opened[static_cast<size_t>(action.box)]) {
        throw RepeatedTargetError("apply_step: box " + std::to_string(action.box) +
                                  " already opened");
    }
    if (state.obtained[static_cast<size_t>(action.key)]) {
        throw RepeatedTargetError("apply_step: key " + std::to_string(action.key) +
                                  " already obtained");
    }
    GroundState next = state;
    next.opened[static_cast<size_t>(action.box)] = true;
    next.obtained[static_cast<size_t>(action.key)] = true;
    return next;
}

// Full enumeration of (state, value) in query order. Interleaved yields
// (Box i, Key i) pairs ascending, then whichever kind remains; BoxesThenKeys
// yields all boxes ascending then all keys ascending.
inline std::vector<std::pair<StateId, bool>> enumerate_states(const GroundState& state,
                                                              const EnvConfig& config) {
    std::vector<std::pair<StateId, bool>> out;
    out.reserve(static_cast<size_t>(config.total_states()));
    const auto box_at = [&](int i) {
        return std::pair<StateId, bool>{box_state(i), bool(state.opened[static_cast<size_t>(i)])};
    };
    const auto key_at = [&](int i) {
        return std::pair<StateId, bool>{key_state(i), bool(state.obtained[static_cast<size_t>(i)])};
    };
    if (config.query_ordering == QueryOrdering::Interleaved) {
        const int common = std::min(config.num_boxes, config.num_keys);
        for (int i = 0; i < common; ++i) {
            out.push_back(box_at(i));
            out.push_back(key_at(i));
        }
        for (int i = common; i < config.num_boxes; ++i) out.push_back(box_at(i));
        for (int i = common; i < config.num_keys; ++i) out.push_back(key_at(i));
    } else {
        for (int i = 0; i < config.num_boxes; ++i) out.push_back(box_at(i));
        for (int i = 0; i < config.num_keys; ++i) out.push_back(key_at(i));
    }
    return out;
}

}  // namespace boxkey
