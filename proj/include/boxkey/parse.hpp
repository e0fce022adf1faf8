#pragma once

#include <cctype>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "boxkey/env.hpp"
#include "boxkey/genesis.hpp"

namespace boxkey {

// Normative extraction grammar, applied to trimmed model output.
inline constexpr const char* kExtractionPattern =
    R"(([a-zA-Z0-9]+)\(([a-zA-Z0-9]+-\d)\)=(True|true|False|false))";

// One grammar match, fields verbatim. byte_offset indexes the original
// (untrimmed) text.
struct RawAtom {
    std::string functor;
    std::string argument;
    std::string truth_token;
    size_t byte_offset = 0;

    friend bool operator==(const RawAtom&, const RawAtom&) = default;
};

inline bool truth_token_value(std::string_view token) {
    return token == "True" || token == "true";
}

namespace detail {

inline bool is_atom_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 &&
           static_cast<unsigned char>(c) < 128;
}

inline size_t alnum_run_end(std::string_view text, size_t i) {
    while (i < text.size() && is_atom_char(text[i])) ++i;
    return i;
}

// Truth literal as a prefix at position i; returns its length or 0.
inline size_t truth_prefix_len(std::string_view text, size_t i) {
    static constexpr std::string_view kLiterals[] = {"True", "true", "False", "false"};
    for (std::string_view lit : kLiterals) {
        if (text.compare(i, lit.size(), lit) == 0) return lit.size();
    }
    return 0;
}

}  // namespace detail

// All non-overlapping matches of the extraction grammar, left to right.
// Hand-rolled scanner equivalent to the pattern above (checked against
// std::regex in the tests) so extraction stays linear and total on
// arbitrary byte input.
inline std::vector<RawAtom> extract_states(std::string_view text) {
    static constexpr std::string_view kTrim = " \t\r\n";
    size_t lo = text.find_first_not_of(kTrim);
    if (lo == std::string_view::npos) return {};
    const size_t hi = text.find_last_not_of(kTrim) + 1;

    std::vector<RawAtom> atoms;
    size_t i = lo;
    while (i < hi) {
        if (!detail::is_atom_char(text[i])) {
            ++i;
            continue;
        }
        const size_t functor_end = detail::alnum_run_end(text, i);
        // Starting inside the run cannot change anything past the functor,
        // so on failure the scan resumes at the run's end.
        size_t resume = functor_end;
        do {
            if (functor_end >= hi || text[functor_end] != '(') break;
            const size_t arg_start = functor_end + 1;
            const size_t arg_head_end = detail::alnum_run_end(text, arg_start);
            if (arg_head_end == arg_start) break;                     // empty argument head
            if (arg_head_end >= hi || text[arg_head_end] != '-') break;
            const size_t digit_pos = arg_head_end + 1;
            if (digit_pos >= hi || !std::isdigit(static_cast<unsigned char>(text[digit_pos]))) break;
            if (digit_pos + 1 >= hi || text[digit_pos + 1] != ')') break;
            if (digit_pos + 2 >= hi || text[digit_pos + 2] != '=') break;
            const size_t truth_pos = digit_pos + 3;
            const size_t truth_len = detail::truth_prefix_len(text.substr(0, hi), truth_pos);
            if (truth_len == 0) break;

            RawAtom atom;
            atom.functor = std::string(text.substr(i, functor_end - i));
            atom.argument = std::string(text.substr(arg_start, digit_pos + 1 - arg_start));
            atom.truth_token = std::string(text.substr(truth_pos, truth_len));
            atom.byte_offset = i;
            atoms.push_back(std::move(atom));
            resume = truth_pos + truth_len;
        } while (false);
        i = resume;
    }
    return atoms;
}

// One state the current query asks about, in surface form.
struct QueriedState {
    StateId state;
    std::string functor;
    std::string argument;

    friend bool operator==(const QueriedState&, const QueriedState&) = default;
};

inline std::vector<QueriedState> queried_states(const EnvConfig& env, const Lexicon& lexicon) {
    std::vector<QueriedState> out;
    out.reserve(static_cast<size_t>(env.total_states()));
    for (const auto& [id, value] : enumerate_states(initial_state(env), env)) {
        (void)value;
        out.push_back(QueriedState{id, lexicon.functor_for(id.kind),
                                   lexicon.prefix_for(id.kind) + "-" + std::to_string(id.index)});
    }
    return out;
}

struct ParseAnomalies {
    int duplicate_conflicts = 0;
    int duplicate_agreements = 0;
    std::vector<RawAtom> unknown_atoms;
    std::vector<StateId> missing_states;

    bool clean() const {
        return duplicate_conflicts == 0 && duplicate_agreements == 0 && unknown_atoms.empty() &&
               missing_states.empty();
    }

    friend bool operator==(const ParseAnomalies&, const ParseAnomalies&) = default;
};

// Keyed predictions plus anomaly bookkeeping. Values live in rendered-token
// space; no un-flipping happens here. addressed_atoms counts every atom
// (repeats included) that names a queried state.
struct PredictionMap {
    std::map<std::pair<std::string, std::string>, bool> entries;
    ParseAnomalies anomalies;
    int addressed_atoms = 0;

    friend bool operator==(const PredictionMap&, const PredictionMap&) = default;
};

// Buckets atoms by (functor, argument); on duplicates the last occurrence
// wins and the collision is counted as a conflict or an agreement.
inline PredictionMap normalize(const std::vector<RawAtom>& atoms,
                               const std::vector<QueriedState>& reference_query) {
    PredictionMap pred;
    std::map<std::pair<std::string, std::string>, size_t> queried;
    for (size_t i = 0; i < reference_query.size(); ++i) {
        queried.emplace(std::make_pair(reference_query[i].functor, reference_query[i].argument), i);
    }
    for (const RawAtom& atom : atoms) {
        const auto key = std::make_pair(atom.functor, atom.argument);
        if (!queried.contains(key)) {
            pred.anomalies.unknown_atoms.push_back(atom);
            continue;
        }
        pred.addressed_atoms += 1;
        const bool value = truth_token_value(atom.truth_token);
        const auto it = pred.entries.find(key);
        if (it == pred.entries.end()) {
            pred.entries.emplace(key, value);
        } else {
            if (it->second == value) {
                pred.anomalies.duplicate_agreements += 1;
            } else {
                pred.anomalies.duplicate_conflicts += 1;
            }
            it->second = value;
        }
    }
    for (const QueriedState& q : reference_query) {
        if (!pred.entries.contains(std::make_pair(q.functor, q.argument))) {
            pred.anomalies.missing_states.push_back(q.state);
        }
    }
    return pred;
}

}  // namespace boxkey
