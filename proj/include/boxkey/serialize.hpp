#pragma once

#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "boxkey/client.hpp"
#include "boxkey/env.hpp"
#include "boxkey/genesis.hpp"
#include "boxkey/metrics.hpp"
#include "boxkey/parse.hpp"
#include "boxkey/probe.hpp"
#include "boxkey/prompt.hpp"

namespace boxkey {

inline constexpr int kSchemaVersion = 1;

using nlohmann::json;

// --- enum tags -------------------------------------------------------------

inline std::string ordering_tag(QueryOrdering o) {
    return o == QueryOrdering::Interleaved ? "interleaved" : "boxes-then-keys";
}

inline QueryOrdering parse_ordering_tag(const std::string& tag) {
    if (tag == "interleaved") return QueryOrdering::Interleaved;
    if (tag == "boxes-then-keys") return QueryOrdering::BoxesThenKeys;
    throw Error("unknown query ordering: " + tag);
}

inline LexiconMode parse_mode_tag(const std::string& tag) {
    const auto part = [&](const std::string& p) {
        if (p == "nl") return TokenMode::Natural;
        if (p == "sl") return TokenMode::Synthetic;
        throw Error("unknown lexicon mode: " + tag);
    };
    const size_t dash = tag.find('-');
    if (dash == std::string::npos) throw Error("unknown lexicon mode: " + tag);
    return LexiconMode{part(tag.substr(0, dash)), part(tag.substr(dash + 1))};
}

inline InstructionVariant parse_variant_tag(const std::string& tag) {
    if (tag == "normal") return InstructionVariant::Normal;
    if (tag == "counter-output") return InstructionVariant::CounterOutputFormat;
    if (tag == "counter-language") return InstructionVariant::CounterLanguageInstruction;
    throw Error("unknown instruction variant: " + tag);
}

inline std::string style_tag(RenderStyle s) {
    return s == RenderStyle::Traditional ? "traditional" : "faked-multi-round";
}

inline RenderStyle parse_style_tag(const std::string& tag) {
    if (tag == "traditional") return RenderStyle::Traditional;
    if (tag == "faked-multi-round") return RenderStyle::FakedMultiRound;
    throw Error("unknown render style: " + tag);
}

inline Protocol parse_protocol_tag(const std::string& tag) {
    if (tag == "final") return Protocol::FinalQuery;
    if (tag == "intermediate") return Protocol::IntermediateProbing;
    if (tag.rfind("compressed", 0) == 0) return Protocol::CompressedInit;
    throw Error("unknown protocol: " + tag);
}

inline std::string role_tag(Role r) { return role_name(r); }

inline Role parse_role_tag(const std::string& tag) {
    if (tag == "system") return Role::System;
    if (tag == "user") return Role::User;
    if (tag == "assistant") return Role::Assistant;
    throw Error("unknown role: " + tag);
}

inline TransitionCategory parse_category_tag(const std::string& tag) {
    for (int c = 0; c < kTransitionCategoryCount; ++c) {
        if (tag == transition_category_name(static_cast<TransitionCategory>(c))) {
            return static_cast<TransitionCategory>(c);
        }
    }
    throw Error("unknown transition category: " + tag);
}

// --- record conversions ----------------------------------------------------

inline json to_json(const EnvConfig& env) {
    return json{{"num_boxes", env.num_boxes},
                {"num_keys", env.num_keys},
                {"query_ordering", ordering_tag(env.query_ordering)}};
}

inline EnvConfig env_from_json(const json& j) {
    EnvConfig env;
    env.num_boxes = j.at("num_boxes").get<int>();
    env.num_keys = j.at("num_keys").get<int>();
    env.query_ordering = parse_ordering_tag(j.at("query_ordering").get<std::string>());
    return env;
}

inline json to_json(const Lexicon& lex) {
    return json{{"opened_functor", lex.opened_functor},
                {"obtained_functor", lex.obtained_functor},
                {"box_prefix", lex.box_prefix},
                {"key_prefix", lex.key_prefix},
                {"mode", mode_tag(lex.mode)}};
}

inline Lexicon lexicon_from_json(const json& j) {
    Lexicon lex;
    lex.opened_functor = j.at("opened_functor").get<std::string>();
    lex.obtained_functor = j.at("obtained_functor").get<std::string>();
    lex.box_prefix = j.at("box_prefix").get<std::string>();
    lex.key_prefix = j.at("key_prefix").get<std::string>();
    lex.mode = parse_mode_tag(j.at("mode").get<std::string>());
    return lex;
}

inline json to_json(const Instance& inst) {
    json steps = json::array();
    for (const StepAction& a : inst.steps) steps.push_back(json::array({a.box, a.key}));
    json j{{"schema_version", kSchemaVersion},
           {"id", inst.id},
           {"seed", inst.seed},
           {"env", to_json(inst.env)},
           {"lexicon", to_json(inst.lexicon)},
           {"variant", variant_tag(inst.variant)},
           {"n_shots", inst.n_shots},
           {"steps", steps}};
    if (!inst.distractors.empty()) j["distractors"] = inst.distractors;
    return j;
}

inline void check_schema_version(const json& j, const char* what) {
    const int v = j.value("schema_version", -1);
    if (v != kSchemaVersion) {
        throw SchemaVersionError(std::string(what) + ": unsupported schema version " +
                                 std::to_string(v) + " (expected " +
                                 std::to_string(kSchemaVersion) + ")");
    }
}

inline Instance instance_from_json(const json& j) {
    check_schema_version(j, "instance");
    Instance inst;
    inst.id = j.at("id").get<std::string>();
    inst.seed = j.at("seed").get<uint64_t>();
    inst.env = env_from_json(j.at("env"));
    inst.lexicon = lexicon_from_json(j.at("lexicon"));
    inst.variant = parse_variant_tag(j.at("variant").get<std::string>());
    inst.n_shots = j.at("n_shots").get<int>();
    for (const json& a : j.at("steps")) {
        inst.steps.push_back(StepAction{a.at(0).get<int>(), a.at(1).get<int>()});
    }
    if (j.contains("distractors")) {
        inst.distractors = j.at("distractors").get<std::vector<std::string>>();
    }
    return inst;
}

inline json to_json(const MessageList& messages) { return messages_to_json(messages); }

inline MessageList messages_from_json(const json& j) {
    MessageList out;
    for (const json& m : j) {
        out.push_back(Message{parse_role_tag(m.at("role").get<std::string>()),
                              m.at("content").get<std::string>()});
    }
    return out;
}

inline json to_json(const StateId& id) {
    return json{{"kind", id.kind == StateKind::Box ? "box" : "key"}, {"index", id.index}};
}

inline StateId state_id_from_json(const json& j) {
    return StateId{j.at("kind").get<std::string>() == "box" ? StateKind::Box : StateKind::Key,
                   j.at("index").get<int>()};
}

inline json to_json(const RawAtom& a) {
    return json{{"functor", a.functor},
                {"argument", a.argument},
                {"truth_token", a.truth_token},
                {"byte_offset", a.byte_offset}};
}

inline RawAtom raw_atom_from_json(const json& j) {
    RawAtom a;
    a.functor = j.at("functor").get<std::string>();
    a.argument = j.at("argument").get<std::string>();
    a.truth_token = j.at("truth_token").get<std::string>();
    a.byte_offset = j.at("byte_offset").get<size_t>();
    return a;
}

inline json to_json(const PredictionMap& pred) {
    json entries = json::array();
    for (const auto& [key, value] : pred.entries) {
        entries.push_back(json::array({key.first, key.second, value}));
    }
    json unknown = json::array();
    for (const RawAtom& a : pred.anomalies.unknown_atoms) unknown.push_back(to_json(a));
    json missing = json::array();
    for (const StateId& s : pred.anomalies.missing_states) missing.push_back(to_json(s));
    return json{{"entries", entries},
                {"addressed_atoms", pred.addressed_atoms},
                {"duplicate_conflicts", pred.anomalies.duplicate_conflicts},
                {"duplicate_agreements", pred.anomalies.duplicate_agreements},
                {"unknown_atoms", unknown},
                {"missing_states", missing}};
}

inline PredictionMap prediction_from_json(const json& j) {
    PredictionMap pred;
    for (const json& e : j.at("entries")) {
        pred.entries.emplace(std::make_pair(e.at(0).get<std::string>(), e.at(1).get<std::string>()),
                             e.at(2).get<bool>());
    }
    pred.addressed_atoms = j.at("addressed_atoms").get<int>();
    pred.anomalies.duplicate_conflicts = j.at("duplicate_conflicts").get<int>();
    pred.anomalies.duplicate_agreements = j.at("duplicate_agreements").get<int>();
    for (const json& a : j.at("unknown_atoms")) {
        pred.anomalies.unknown_atoms.push_back(raw_atom_from_json(a));
    }
    for (const json& s : j.at("missing_states")) {
        pred.anomalies.missing_states.push_back(state_id_from_json(s));
    }
    return pred;
}

inline json to_json(const StepScore& s) {
    return json{{"matched", s.matched},
                {"queried", s.queried},
                {"predicted", s.predicted},
                {"state_em", s.state_em},
                {"step_em", s.step_em}};
}

inline StepScore score_from_json(const json& j) {
    StepScore s;
    s.matched = j.at("matched").get<int>();
    s.queried = j.at("queried").get<int>();
    s.predicted = j.at("predicted").get<int>();
    s.state_em = j.at("state_em").get<double>();
    s.step_em = j.at("step_em").get<int>();
    return s;
}

inline json to_json(const StepTransitions& t) {
    json per_state = json::array();
    for (const StateTransition& st : t.per_state) {
        per_state.push_back(json::array(
            {to_json(st.state), std::string(transition_category_name(st.category))}));
    }
    return json{{"step_index", t.step_index}, {"per_state", per_state}};
}

inline StepTransitions transitions_from_json(const json& j) {
    StepTransitions t;
    t.step_index = j.at("step_index").get<int>();
    for (const json& st : j.at("per_state")) {
        const TransitionCategory cat = parse_category_tag(st.at(1).get<std::string>());
        t.per_state.push_back(StateTransition{state_id_from_json(st.at(0)), cat});
        t.counts[static_cast<size_t>(cat)] += 1;
    }
    return t;
}

inline json to_json(const QueryRecord& q) {
    return json{{"step_index", q.step_index},
                {"messages", to_json(q.messages)},
                {"raw_response", q.raw_response},
                {"ok", q.ok},
                {"error", q.error},
                {"retries", q.retries},
                {"prediction", to_json(q.prediction)},
                {"score", to_json(q.score)}};
}

inline QueryRecord query_from_json(const json& j) {
    QueryRecord q;
    q.step_index = j.at("step_index").get<int>();
    q.messages = messages_from_json(j.at("messages"));
    q.raw_response = j.at("raw_response").get<std::string>();
    q.ok = j.at("ok").get<bool>();
    q.error = j.at("error").get<std::string>();
    q.retries = j.at("retries").get<int>();
    q.prediction = prediction_from_json(j.at("prediction"));
    q.score = score_from_json(j.at("score"));
    return q;
}

inline json to_json(const Trial& t) {
    json queries = json::array();
    for (const QueryRecord& q : t.queries) queries.push_back(to_json(q));
    json transitions = json::array();
    for (const StepTransitions& tr : t.transitions) transitions.push_back(to_json(tr));
    return json{{"schema_version", kSchemaVersion},
                {"kind", "trial"},
                {"trial_id", t.trial_id},
                {"instance", to_json(t.instance)},
                {"protocol", protocol_tag(t.protocol, t.compressed_k)},
                {"compressed_k", t.compressed_k},
                {"style", style_tag(t.style)},
                {"queries", queries},
                {"transitions", transitions}};
}

inline Trial trial_from_json(const json& j) {
    check_schema_version(j, "trial");
    Trial t;
    t.trial_id = j.at("trial_id").get<std::string>();
    t.instance = instance_from_json(j.at("instance"));
    t.protocol = parse_protocol_tag(j.at("protocol").get<std::string>());
    t.compressed_k = j.at("compressed_k").get<int>();
    t.style = parse_style_tag(j.at("style").get<std::string>());
    for (const json& q : j.at("queries")) t.queries.push_back(query_from_json(q));
    for (const json& tr : j.at("transitions")) t.transitions.push_back(transitions_from_json(tr));
    return t;
}

// --- line-delimited record files --------------------------------------------

inline void for_each_jsonl(const std::string& path, const std::function<void(const json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open record file: " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw Error(path + ":" + std::to_string(lineno) + ": invalid record");
        }
        fn(j);
    }
}

inline std::vector<Instance> read_instance_file(const std::string& path) {
    std::vector<Instance> out;
    for_each_jsonl(path, [&](const json& j) { out.push_back(instance_from_json(j)); });
    return out;
}

inline void write_instance_file(const std::string& path, const std::vector<Instance>& instances) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write instance file: " + path);
    for (const Instance& inst : instances) out << to_json(inst).dump() << "\n";
}

}  // namespace boxkey
