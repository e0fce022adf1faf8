#pragma once

#include <optional>
#include <string>
#include <vector>

#include "boxkey/env.hpp"
#include "boxkey/genesis.hpp"
#include "boxkey/parse.hpp"

namespace boxkey {

enum class Role { System, User, Assistant };

struct Message {
    Role role = Role::User;
    std::string content;

    friend bool operator==(const Message&, const Message&) = default;
};

using MessageList = std::vector<Message>;

enum class RenderStyle { Traditional, FakedMultiRound };

inline constexpr const char* kSystemMessage = "You are a helpful assistant.";

// Truth literal for a boolean under an instruction variant. Both
// counterintuitive variants flip the rendering; they differ only in how the
// instruction explains it.
inline std::string render_truth(bool value, InstructionVariant variant) {
    const bool rendered = variant == InstructionVariant::Normal ? value : !value;
    return rendered ? "True" : "False";
}

// Expected value of one queried state in rendered-token space.
struct ExpectedAtom {
    StateId state;
    std::string functor;
    std::string argument;
    bool value = false;

    friend bool operator==(const ExpectedAtom&, const ExpectedAtom&) = default;
};

inline std::vector<ExpectedAtom> render_expected_atoms(const GroundState& state,
                                                       const EnvConfig& env,
                                                       const Lexicon& lexicon,
                                                       InstructionVariant variant) {
    std::vector<ExpectedAtom> out;
    out.reserve(static_cast<size_t>(env.total_states()));
    const bool flip = variant != InstructionVariant::Normal;
    for (const auto& [id, value] : enumerate_states(state, env)) {
        out.push_back(ExpectedAtom{id, lexicon.functor_for(id.kind),
                                   lexicon.prefix_for(id.kind) + "-" + std::to_string(id.index),
                                   flip ? !value : value});
    }
    return out;
}

inline std::vector<QueriedState> to_queried_states(const std::vector<ExpectedAtom>& expected) {
    std::vector<QueriedState> out;
    out.reserve(expected.size());
    for (const ExpectedAtom& a : expected) out.push_back(QueriedState{a.state, a.functor, a.argument});
    return out;
}

// Comma-space separated enumeration without the "Answer: " prefix; this is
// the text a perfectly behaved model would output.
inline std::string answer_atoms_text(const std::vector<ExpectedAtom>& expected) {
    std::string out;
    for (size_t i = 0; i < expected.size(); ++i) {
        if (i > 0) out += ", ";
        out += expected[i].functor + "(" + expected[i].argument + ")=" +
               (expected[i].value ? "True" : "False");
    }
    return out;
}

inline std::string render_answer(const GroundState& state, const EnvConfig& env,
                                 const Lexicon& lexicon, InstructionVariant variant) {
    return "Answer: " + answer_atoms_text(render_expected_atoms(state, env, lexicon, variant));
}

inline std::string render_query(const EnvConfig& env, const Lexicon& lexicon) {
    std::string out = "Question:";
    for (const QueriedState& q : queried_states(env, lexicon)) {
        out += " " + q.functor + "(" + q.argument + ")=?";
    }
    return out;
}

// Step line. Index 0 is the fixed initialization step and ignores the action;
// real steps get the distractor sentence appended after one space.
inline std::string render_step(int step_index, const StepAction& action, const Lexicon& lexicon,
                               const std::optional<std::string>& distractor = std::nullopt) {
    if (step_index == 0) return "Step-0: Initialization. Do nothing.";
    std::string out = "Step-" + std::to_string(step_index) + ": Open " + lexicon.box_prefix + "-" +
                      std::to_string(action.box) + " and retrieve " + lexicon.key_prefix + "-" +
                      std::to_string(action.key) + ".";
    if (distractor) out += " " + *distractor;
    return out;
}

// Task instruction. The quest framing is fixed; the meaning sentences spell
// out what each truth literal asserts, and the counterintuitive variants
// rewire exactly those sentences (swapped literals vs. edited negation).
inline std::string render_instruction(const Lexicon& lexicon, InstructionVariant variant,
                                      const EnvConfig& env) {
    const std::string bx = lexicon.box_prefix + "-" + std::to_string(std::min(3, env.num_boxes - 1));
    const std::string kx = lexicon.key_prefix + "-" + std::to_string(std::min(1, env.num_keys - 1));
    const auto box_atom = [&](const char* tv) {
        return lexicon.opened_functor + "(" + bx + ")=" + tv;
    };
    const auto key_atom = [&](const char* tv) {
        return lexicon.obtained_functor + "(" + kx + ")=" + tv;
    };

    std::string s =
        "Instructions: As an agent, you need to find the way to go out of this quest. "
        "Currently, there are several boxes in front of you and there is a key inside each box. "
        "You can use only one of these keys to open the door and finish this quest. "
        "There are " +
        std::to_string(env.num_boxes) + " boxes and " + std::to_string(env.num_keys) +
        " keys here.";
    if (lexicon.mode.argument_mode == TokenMode::Synthetic) {
        s += " Boxes are identified as " + lexicon.box_prefix + "-X and Keys are identified as " +
             lexicon.key_prefix + "-X.";
    }

    switch (variant) {
        case InstructionVariant::Normal:
            s += " " + box_atom("True") + " means that " + bx + " has been opened.";
            s += " " + key_atom("True") + " means that " + kx + " has been obtained.";
            s += " " + box_atom("False") + " means that " + bx + " has not been opened.";
            s += " " + key_atom("False") + " means that " + kx + " has not been obtained.";
            break;
        case InstructionVariant::CounterOutputFormat:
            s += " " + box_atom("False") + " means that " + bx + " has been opened.";
            s += " " + key_atom("False") + " means that " + kx + " has been obtained.";
            s += " " + box_atom("True") + " means that " + bx + " has not been opened.";
            s += " " + key_atom("True") + " means that " + kx + " has not been obtained.";
            break;
        case InstructionVariant::CounterLanguageInstruction:
            s += " " + box_atom("True") + " means that " + bx + " has Not been opened.";
            s += " " + key_atom("True") + " means that " + kx + " has Not been obtained.";
            s += " " + box_atom("False") + " means that " + bx + " has been opened.";
            s += " " + key_atom("False") + " means that " + kx + " has been obtained.";
            break;
    }
    return s;
}

struct DemoBlock {
    std::string step_text;
    std::string question_text;
    std::string answer_text;

    friend bool operator==(const DemoBlock&, const DemoBlock&) = default;
};

// Everything needed to assemble one request: demonstration blocks for
// Step-0 through the demo window end, bare step lines, and the test tail.
struct PromptBundle {
    std::string instruction;
    std::vector<DemoBlock> demo_blocks;
    std::vector<std::string> bare_steps;
    std::string test_step;
    std::string test_question;

    friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

// Builds the bundle for querying renumbered step `query_step` (1-based) of an
// instance. `skip_k` early steps are folded into the Step-0 answer, which
// then shows the state they would have produced; remaining steps are
// renumbered from 1. Demonstration answers cover renumbered steps
// 0..min(n_shots, query_step-1); later steps up to the test step render bare.
inline PromptBundle build_bundle(const Instance& inst, int skip_k, int query_step) {
    const int total = static_cast<int>(inst.steps.size());
    if (skip_k < 0 || skip_k >= total) {
        throw BadKError("build_bundle: skip_k " + std::to_string(skip_k) +
                        " outside [0, " + std::to_string(total) + ")");
    }
    const int remaining = total - skip_k;
    if (query_step < 1 || query_step > remaining) {
        throw InvalidSettingsError("build_bundle: query_step " + std::to_string(query_step) +
                                   " outside [1, " + std::to_string(remaining) + "]");
    }

    const auto distractor_at = [&](int original_index) -> std::optional<std::string> {
        if (inst.distractors.empty()) return std::nullopt;
        return inst.distractors[static_cast<size_t>(original_index)];
    };

    PromptBundle bundle;
    bundle.instruction = render_instruction(inst.lexicon, inst.variant, inst.env);
    const std::string question = render_query(inst.env, inst.lexicon);

    GroundState state = initial_state(inst.env);
    for (int i = 0; i < skip_k; ++i) state = apply_step(state, inst.steps[static_cast<size_t>(i)]);
    bundle.demo_blocks.push_back(DemoBlock{render_step(0, StepAction{}, inst.lexicon), question,
                                           render_answer(state, inst.env, inst.lexicon, inst.variant)});

    const int demo_end = std::min(inst.n_shots, query_step - 1);
    for (int s = 1; s <= demo_end; ++s) {
        const int idx = skip_k + s - 1;
        state = apply_step(state, inst.steps[static_cast<size_t>(idx)]);
        bundle.demo_blocks.push_back(
            DemoBlock{render_step(s, inst.steps[static_cast<size_t>(idx)], inst.lexicon, distractor_at(idx)),
                      question, render_answer(state, inst.env, inst.lexicon, inst.variant)});
    }
    for (int s = demo_end + 1; s < query_step; ++s) {
        const int idx = skip_k + s - 1;
        bundle.bare_steps.push_back(
            render_step(s, inst.steps[static_cast<size_t>(idx)], inst.lexicon, distractor_at(idx)));
    }
    const int test_idx = skip_k + query_step - 1;
    bundle.test_step =
        render_step(query_step, inst.steps[static_cast<size_t>(test_idx)], inst.lexicon, distractor_at(test_idx));
    bundle.test_question = question;
    return bundle;
}

namespace detail {

inline std::string join_lines(const std::vector<std::string>& parts) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += "\n";
        out += parts[i];
    }
    return out;
}

}  // namespace detail

// Traditional: one system message plus one user message carrying everything.
// FakedMultiRound: the demonstration answers are attributed to the assistant
// as if the model had produced them in earlier rounds.
inline MessageList assemble(const PromptBundle& bundle, RenderStyle style) {
    MessageList msgs;
    msgs.push_back(Message{Role::System, kSystemMessage});
    if (style == RenderStyle::Traditional) {
        std::vector<std::string> parts{bundle.instruction};
        for (const DemoBlock& d : bundle.demo_blocks) {
            parts.push_back(d.step_text);
            parts.push_back(d.question_text);
            parts.push_back(d.answer_text);
        }
        for (const std::string& s : bundle.bare_steps) parts.push_back(s);
        parts.push_back(bundle.test_step);
        parts.push_back(bundle.test_question);
        msgs.push_back(Message{Role::User, detail::join_lines(parts)});
    } else {
        msgs.push_back(Message{Role::User, bundle.instruction});
        for (const DemoBlock& d : bundle.demo_blocks) {
            msgs.push_back(Message{Role::User, d.step_text + "\n" + d.question_text});
            msgs.push_back(Message{Role::Assistant, d.answer_text});
        }
        std::vector<std::string> tail = bundle.bare_steps;
        tail.push_back(bundle.test_step);
        tail.push_back(bundle.test_question);
        msgs.push_back(Message{Role::User, detail::join_lines(tail)});
    }
    return msgs;
}

}  // namespace boxkey
