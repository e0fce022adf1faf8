#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "boxkey/distractors.hpp"
#include "boxkey/env.hpp"
#include "boxkey/errors.hpp"
#include "boxkey/rng.hpp"

namespace boxkey {

enum class TokenMode { Natural, Synthetic };

struct LexiconMode {
    TokenMode functor_mode = TokenMode::Natural;
    TokenMode argument_mode = TokenMode::Natural;

    friend bool operator==(const LexiconMode&, const LexiconMode&) = default;
};

inline constexpr LexiconMode kNaturalNatural{TokenMode::Natural, TokenMode::Natural};
inline constexpr LexiconMode kSyntheticNatural{TokenMode::Synthetic, TokenMode::Natural};
inline constexpr LexiconMode kNaturalSynthetic{TokenMode::Natural, TokenMode::Synthetic};
inline constexpr LexiconMode kSyntheticSynthetic{TokenMode::Synthetic, TokenMode::Synthetic};

// The four surface lexemes of one instance. Tokens are 1-10 alphanumeric
// characters, pairwise distinct, and never collide with a truth literal.
struct Lexicon {
    std::string opened_functor = "OPENED";
    std::string obtained_functor = "OBTAINED";
    std::string box_prefix = "BOX";
    std::string key_prefix = "KEY";
    LexiconMode mode;

    const std::string& functor_for(StateKind kind) const {
        return kind == StateKind::Box ? opened_functor : obtained_functor;
    }
    const std::string& prefix_for(StateKind kind) const {
        return kind == StateKind::Box ? box_prefix : key_prefix;
    }

    friend bool operator==(const Lexicon&, const Lexicon&) = default;
};

enum class InstructionVariant { Normal, CounterOutputFormat, CounterLanguageInstruction };

// A fully resolved, replayable test case.
struct Instance {
    std::string id;
    uint64_t seed = 0;
    EnvConfig env;
    Lexicon lexicon;
    InstructionVariant variant = InstructionVariant::Normal;
    int n_shots = 0;
    std::vector<StepAction> steps;
    std::vector<std::string> distractors;  // empty, or one sentence per step

    friend bool operator==(const Instance&, const Instance&) = default;
};

inline bool is_truth_literal(const std::string& token) {
    std::string lower;
    lower.reserve(token.size());
    for (char c : token) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return lower == "true" || lower == "false";
}

// Valid surface token: 1-10 chars of [A-Za-z0-9], not a truth literal.
inline bool is_valid_token(const std::string& token) {
    if (token.empty() || token.size() > 10) return false;
    for (char c : token) {
        if (!std::isalnum(static_cast<unsigned char>(c))) return false;
        if (static_cast<unsigned char>(c) > 127) return false;
    }
    return !is_truth_literal(token);
}

namespace detail {

inline std::string random_token(Rng& rng) {
    static constexpr char kAlnum[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
    const int len = static_cast<int>(rng.between(1, 10));
    std::string tok;
    tok.reserve(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i) tok.push_back(kAlnum[rng.below(62)]);
    return tok;
}

}  // namespace detail

// Draw order is fixed: opened functor, obtained functor, box prefix, key
// prefix. Natural slots keep their default lexemes; synthetic slots resample
// until the token is valid and distinct from every other slot.
inline Lexicon gen_lexicon(Rng& rng, LexiconMode mode) {
    Lexicon lex;
    lex.mode = mode;
    std::array<std::string*, 4> slots = {&lex.opened_functor, &lex.obtained_functor,
                                         &lex.box_prefix, &lex.key_prefix};
    std::array<bool, 4> synthetic = {mode.functor_mode == TokenMode::Synthetic,
                                     mode.functor_mode == TokenMode::Synthetic,
                                     mode.argument_mode == TokenMode::Synthetic,
                                     mode.argument_mode == TokenMode::Synthetic};
    for (size_t i = 0; i < slots.size(); ++i) {
        if (!synthetic[i]) continue;
        int attempts = 0;
        for (;;) {
            if (++attempts > 1000) {
                throw GeneratorExhaustedError("gen_lexicon: 1000 resamples without a distinct token");
            }
            std::string tok = detail::random_token(rng);
            if (!is_valid_token(tok)) continue;
            bool clash = false;
            for (size_t j = 0; j < slots.size(); ++j) {
                if (j != i && *slots[j] == tok) clash = true;
            }
            if (clash) continue;
            *slots[i] = tok;
            break;
        }
    }
    return lex;
}

// Box indices are a uniform sample without replacement, key indices an
// independent one; the box and key of a step are unrelated.
inline std::vector<StepAction> gen_steps(Rng& rng, const EnvConfig& env, int count) {
    if (count > std::min(env.num_boxes, env.num_keys)) {
        throw CountTooLargeError("gen_steps: count " + std::to_string(count) +
                                 " exceeds min(num_boxes, num_keys)");
    }
    const std::vector<int> boxes = rng.sample_without_replacement(env.num_boxes, count);
    const std::vector<int> keys = rng.sample_without_replacement(env.num_keys, count);
    std::vector<StepAction> steps(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        steps[static_cast<size_t>(i)] = StepAction{boxes[static_cast<size_t>(i)],
                                                   keys[static_cast<size_t>(i)]};
    }
    return steps;
}

inline std::string gen_distractor(Rng& rng, const std::vector<std::string>& pool) {
    if (pool.empty()) throw EmptyPoolError("gen_distractor: empty sentence pool");
    return pool[rng.below(pool.size())];
}

struct GenSettings {
    EnvConfig env;
    LexiconMode mode;
    InstructionVariant variant = InstructionVariant::Normal;
    int n_shots = 2;
    bool distractors_on = false;
};

inline std::string mode_tag(LexiconMode mode) {
    std::string tag;
    tag += mode.functor_mode == TokenMode::Synthetic ? "sl" : "nl";
    tag += '-';
    tag += mode.argument_mode == TokenMode::Synthetic ? "sl" : "nl";
    return tag;
}

inline std::string variant_tag(InstructionVariant v) {
    switch (v) {
        case InstructionVariant::Normal: return "normal";
        case InstructionVariant::CounterOutputFormat: return "counter-output";
        case InstructionVariant::CounterLanguageInstruction: return "counter-language";
    }
    return "normal";
}

// Deterministic function of (seed, settings). The step count is
// n_shots + extra with extra uniform on {1, ..., cap - n_shots}, cap being
// the episode capacity min(num_boxes, num_keys) (10 in the default setup).
// The instruction variant is never consumed by the generator, so instances
// that differ only in variant share their ground truth.
inline Instance gen_instance(uint64_t seed, const GenSettings& settings,
                             const std::vector<std::string>& pool = bundled_distractor_pool()) {
    if (!settings.env.valid()) {
        throw InvalidSettingsError("gen_instance: invalid environment config");
    }
    if (settings.n_shots != 2 && settings.n_shots != 3 && settings.n_shots != 5) {
        throw InvalidSettingsError("gen_instance: n_shots must be one of {2, 3, 5}");
    }
    const int cap = std::min(settings.env.num_boxes, settings.env.num_keys);
    if (settings.n_shots + 1 > cap) {
        throw InvalidSettingsError("gen_instance: n_shots + 1 exceeds episode capacity");
    }

    Rng rng(seed);
    Instance inst;
    inst.seed = seed;
    inst.env = settings.env;
    inst.variant = settings.variant;
    inst.n_shots = settings.n_shots;
    inst.lexicon = gen_lexicon(rng, settings.mode);

    const int extra = static_cast<int>(rng.between(1, cap - settings.n_shots));
    inst.steps = gen_steps(rng, settings.env, settings.n_shots + extra);

    if (settings.distractors_on) {
        inst.distractors.reserve(inst.steps.size());
        for (size_t i = 0; i < inst.steps.size(); ++i) {
            inst.distractors.push_back(gen_distractor(rng, pool));
        }
    }

    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(seed));
    inst.id = variant_tag(settings.variant) + "." + mode_tag(settings.mode) + "." +
              std::to_string(settings.n_shots) + "shot" +
              (settings.distractors_on ? ".dist" : "") + "." + hex;
    return inst;
}

}  // namespace boxkey
