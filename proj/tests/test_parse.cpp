#include <gtest/gtest.h>

#include <regex>
#include <string>

#include "boxkey/parse.hpp"
#include "boxkey/prompt.hpp"
#include "boxkey/rng.hpp"

namespace boxkey {
namespace {

TEST(ExtractStates, ParsesAnswerLine) {
    const auto atoms = extract_states("NvSWxzvJb(jqC-0)=True, B(bsS-0)=True");
    ASSERT_EQ(atoms.size(), 2u);
    EXPECT_EQ(atoms[0].functor, "NvSWxzvJb");
    EXPECT_EQ(atoms[0].argument, "jqC-0");
    EXPECT_TRUE(truth_token_value(atoms[0].truth_token));
    EXPECT_EQ(atoms[1].functor, "B");
    EXPECT_EQ(atoms[1].argument, "bsS-0");
    EXPECT_TRUE(truth_token_value(atoms[1].truth_token));
}

TEST(ExtractStates, TrimsAndKeepsLowercaseTokenVerbatim) {
    const auto atoms = extract_states("  \nOPENED(BOX-1)=false");
    ASSERT_EQ(atoms.size(), 1u);
    EXPECT_EQ(atoms[0].truth_token, "false");
    EXPECT_FALSE(truth_token_value(atoms[0].truth_token));
    EXPECT_EQ(atoms[0].byte_offset, 3u);
}

TEST(ExtractStates, FreeTextYieldsNothing) {
    EXPECT_TRUE(extract_states("I opened the box.").empty());
    EXPECT_TRUE(extract_states("").empty());
    EXPECT_TRUE(extract_states("   \n\n  ").empty());
}

TEST(ExtractStates, RejectsNearMisses) {
    EXPECT_TRUE(extract_states("F(a-12)=True").empty());    // two index digits
    EXPECT_TRUE(extract_states("F(a)=True").empty());       // no dash-digit
    EXPECT_TRUE(extract_states("F(a-1)=TRUE").empty());     // bad truth literal
    EXPECT_TRUE(extract_states("F(a_b-1)=True").empty());   // non-alnum argument
    EXPECT_EQ(extract_states("F(a-1)=Truex").size(), 1u);   // literal is a bare prefix
}

TEST(ExtractStates, TotalOnArbitraryBytes) {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        std::string junk;
        const int len = static_cast<int>(rng.between(0, 2000));
        for (int i = 0; i < len; ++i) junk.push_back(static_cast<char>(rng.below(256)));
        EXPECT_NO_THROW((void)extract_states(junk));
    }
    // Long alnum runs stay linear.
    std::string run(200000, 'a');
    run += "(x-1)=True";
    const auto atoms = extract_states(run);
    ASSERT_EQ(atoms.size(), 1u);
    EXPECT_EQ(atoms[0].functor.size(), 200000u);
}

// The scanner must agree with the normative pattern; std::regex serves as the
// independent oracle on short random inputs.
TEST(ExtractStates, AgreesWithReferenceRegex) {
    const std::regex re(kExtractionPattern);
    Rng rng(22);
    const std::string alphabet = "ab1(-)=TturFfalse ,\n.";
    for (int trial = 0; trial < 3000; ++trial) {
        std::string text;
        const int len = static_cast<int>(rng.between(0, 60));
        for (int i = 0; i < len; ++i) text.push_back(alphabet[rng.below(alphabet.size())]);

        // Oracle: trim, then std::regex iteration.
        const size_t lo = text.find_first_not_of(" \t\r\n");
        std::vector<RawAtom> expected;
        if (lo != std::string::npos) {
            const size_t hi = text.find_last_not_of(" \t\r\n") + 1;
            const std::string trimmed = text.substr(lo, hi - lo);
            for (auto it = std::sregex_iterator(trimmed.begin(), trimmed.end(), re);
                 it != std::sregex_iterator(); ++it) {
                RawAtom a;
                a.functor = (*it)[1].str();
                a.argument = (*it)[2].str();
                a.truth_token = (*it)[3].str();
                a.byte_offset = static_cast<size_t>(it->position(0)) + lo;
                expected.push_back(a);
            }
        }
        EXPECT_EQ(extract_states(text), expected) << "input: " << text;
    }
}

std::vector<QueriedState> two_by_two_query() {
    Lexicon lex;
    lex.opened_functor = "F";
    lex.obtained_functor = "G";
    lex.box_prefix = "a";
    lex.key_prefix = "b";
    return queried_states(EnvConfig{2, 2}, lex);
}

TEST(Normalize, LastOccurrenceWinsAndConflictCounted) {
    const auto pred = normalize(extract_states("F(a-0)=True, F(a-0)=False"), two_by_two_query());
    EXPECT_EQ(pred.entries.at({"F", "a-0"}), false);
    EXPECT_EQ(pred.anomalies.duplicate_conflicts, 1);
    EXPECT_EQ(pred.anomalies.duplicate_agreements, 0);
    EXPECT_EQ(pred.addressed_atoms, 2);
    EXPECT_EQ(pred.anomalies.missing_states.size(), 3u);
}

TEST(Normalize, DuplicateAgreementCountedSeparately) {
    const auto pred = normalize(extract_states("F(a-0)=True, F(a-0)=True"), two_by_two_query());
    EXPECT_EQ(pred.entries.at({"F", "a-0"}), true);
    EXPECT_EQ(pred.anomalies.duplicate_conflicts, 0);
    EXPECT_EQ(pred.anomalies.duplicate_agreements, 1);
}

TEST(Normalize, ExactCoverHasNoAnomalies) {
    const auto pred = normalize(
        extract_states("F(a-0)=True, G(b-0)=False, F(a-1)=False, G(b-1)=False"),
        two_by_two_query());
    EXPECT_TRUE(pred.anomalies.clean());
    EXPECT_EQ(pred.entries.size(), 4u);
    EXPECT_EQ(pred.addressed_atoms, 4);
}

TEST(Normalize, UnknownAtomsRecorded) {
    const auto pred = normalize(extract_states("F(a-0)=True, Z(q-9)=True"), two_by_two_query());
    ASSERT_EQ(pred.anomalies.unknown_atoms.size(), 1u);
    EXPECT_EQ(pred.anomalies.unknown_atoms[0].functor, "Z");
    EXPECT_EQ(pred.addressed_atoms, 1);
}

TEST(Normalize, MissingStateComputedAgainstQuery) {
    // 20-state query answered with 19 atoms.
    Lexicon lex;
    const EnvConfig env{10, 10};
    GroundState state = initial_state(env);
    auto expected = render_expected_atoms(state, env, lex, InstructionVariant::Normal);
    std::string text;
    for (size_t i = 0; i + 1 < expected.size(); ++i) {
        if (i > 0) text += ", ";
        text += expected[i].functor + "(" + expected[i].argument + ")=False";
    }
    const auto pred = normalize(extract_states(text), queried_states(env, lex));
    ASSERT_EQ(pred.anomalies.missing_states.size(), 1u);
    EXPECT_EQ(pred.anomalies.missing_states[0], expected.back().state);
}

// Round-trip: rendered answers re-parse to the exact enumeration for every
// lexicon mode and variant.
TEST(Normalize, RenderedAnswersRoundTrip) {
    Rng rng(23);
    const std::vector<LexiconMode> modes = {kNaturalNatural, kSyntheticNatural, kNaturalSynthetic,
                                            kSyntheticSynthetic};
    const std::vector<InstructionVariant> variants = {InstructionVariant::Normal,
                                                      InstructionVariant::CounterOutputFormat,
                                                      InstructionVariant::CounterLanguageInstruction};
    for (int trial = 0; trial < 300; ++trial) {
        const EnvConfig env{static_cast<int>(rng.between(1, 10)),
                            static_cast<int>(rng.between(1, 10))};
        const Lexicon lex = gen_lexicon(rng, modes[rng.below(modes.size())]);
        const InstructionVariant variant = variants[rng.below(variants.size())];
        GroundState state = initial_state(env);
        const int steps = static_cast<int>(rng.between(0, std::min(env.num_boxes, env.num_keys)));
        const auto boxes = rng.sample_without_replacement(env.num_boxes, steps);
        const auto keys = rng.sample_without_replacement(env.num_keys, steps);
        for (int i = 0; i < steps; ++i) state = apply_step(state, StepAction{boxes[i], keys[i]});

        const auto expected = render_expected_atoms(state, env, lex, variant);
        const auto pred =
            normalize(extract_states(render_answer(state, env, lex, variant)), to_queried_states(expected));
        ASSERT_TRUE(pred.anomalies.clean());
        for (const ExpectedAtom& a : expected) {
            ASSERT_EQ(pred.entries.at({a.functor, a.argument}), a.value);
        }
    }
}

}  // namespace
}  // namespace boxkey
