#pragma once

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "boxkey/errors.hpp"
#include "boxkey/parse.hpp"
#include "boxkey/prompt.hpp"
#include "boxkey/rng.hpp"

namespace boxkey {

struct ClientConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-3.5-turbo";
    std::string auth_env = "OPENAI_API_KEY";  // env var holding the key; never logged
    double timeout_seconds = 60.0;
    int max_retries = 5;
    double backoff_base_seconds = 1.0;
    double backoff_multiplier = 2.0;
    int max_concurrent = 4;
    double requests_per_second = 0.0;  // 0 disables the token bucket
    std::optional<nlohmann::json> decoding_overrides;  // absent: provider defaults
};

// Oracle-side context handed to scripted agents by the probe layer: the
// rendered expected answer for the queried step and for the step before it.
struct OracleView {
    std::string expected_answer;
    std::string previous_answer;
};

struct CompletionResult {
    bool ok = false;
    std::string text;   // model output; raw body when the response was malformed
    std::string error;  // empty on success
    int retries = 0;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual CompletionResult complete(const MessageList& messages, const OracleView& view) = 0;
};

inline const char* role_name(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

inline uint64_t message_list_hash(const MessageList& messages) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const Message& m : messages) {
        h = splitmix64(h ^ static_cast<uint64_t>(m.role));
        h = splitmix64(h ^ fnv1a64(m.content));
    }
    return h;
}

// ---------------------------------------------------------------------------
// Scripted reference agents. Pure functions of (message list, agent seed),
// so whole batches replay byte-for-byte.

enum class AgentKind { Oracle, CopyLastAnswer, RandomTruth, Forgetful };

struct ScriptedAgentSpec {
    AgentKind kind = AgentKind::Oracle;
    double p = 0.1;     // Forgetful flip probability
    uint64_t seed = 0;  // RandomTruth / Forgetful
};

class ScriptedAgent final : public ChatClient {
public:
    explicit ScriptedAgent(ScriptedAgentSpec spec) : spec_(spec) {}

    CompletionResult complete(const MessageList& messages, const OracleView& view) override {
        switch (spec_.kind) {
            case AgentKind::Oracle:
                return CompletionResult{true, view.expected_answer, "", 0};
            case AgentKind::CopyLastAnswer:
                return CompletionResult{true, last_answer_block(messages), "", 0};
            case AgentKind::RandomTruth:
                return CompletionResult{true, random_truth(messages, view), "", 0};
            case AgentKind::Forgetful:
                return CompletionResult{true, forgetful(messages, view), "", 0};
        }
        return CompletionResult{false, "", "unknown agent kind", 0};
    }

private:
    static std::string last_answer_block(const MessageList& messages) {
        static constexpr std::string_view kPrefix = "Answer: ";
        std::string found;
        bool any = false;
        for (const Message& m : messages) {
            size_t pos = 0;
            while (pos <= m.content.size()) {
                const size_t hit = m.content.find(kPrefix, pos);
                if (hit == std::string::npos) break;
                const bool at_line_start = hit == 0 || m.content[hit - 1] == '\n';
                const size_t body = hit + kPrefix.size();
                size_t end = m.content.find('\n', body);
                if (end == std::string::npos) end = m.content.size();
                if (at_line_start) {
                    found = m.content.substr(body, end - body);
                    any = true;
                }
                pos = end + 1;
            }
        }
        if (!any) throw NoPreviousAnswerError("CopyLastAnswer: prompt contains no answer block");
        return found;
    }

    Rng request_rng(const MessageList& messages) const {
        return Rng(splitmix64(spec_.seed ^ message_list_hash(messages)));
    }

    // Query atoms with independently uniform truth tokens.
    std::string random_truth(const MessageList& messages, const OracleView& view) const {
        Rng rng = request_rng(messages);
        const std::vector<RawAtom> atoms = extract_states(view.expected_answer);
        std::string out;
        for (size_t i = 0; i < atoms.size(); ++i) {
            if (i > 0) out += ", ";
            out += atoms[i].functor + "(" + atoms[i].argument + ")=" +
                   (rng.below(2) == 1 ? "True" : "False");
        }
        return out;
    }

    // Expected answer, but each untouched state's token flips with
    // probability p. Touched states are those whose rendered value differs
    // from the previous step's answer.
    std::string forgetful(const MessageList& messages, const OracleView& view) const {
        Rng rng = request_rng(messages);
        const std::vector<RawAtom> cur = extract_states(view.expected_answer);
        const std::vector<RawAtom> prev = extract_states(view.previous_answer);
        std::map<std::pair<std::string, std::string>, bool> prev_values;
        for (const RawAtom& a : prev) {
            prev_values[std::make_pair(a.functor, a.argument)] = truth_token_value(a.truth_token);
        }
        std::string out;
        for (size_t i = 0; i < cur.size(); ++i) {
            bool value = truth_token_value(cur[i].truth_token);
            const auto it = prev_values.find(std::make_pair(cur[i].functor, cur[i].argument));
            const bool touched = it == prev_values.end() || it->second != value;
            if (!touched && rng.chance(spec_.p)) value = !value;
            if (i > 0) out += ", ";
            out += cur[i].functor + "(" + cur[i].argument + ")=" + (value ? "True" : "False");
        }
        return out;
    }

    ScriptedAgentSpec spec_;
};

// ---------------------------------------------------------------------------
// HTTP client.

namespace detail {

struct ParsedEndpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // /v1/chat/completions
};

inline ParsedEndpoint parse_endpoint(const std::string& url) {
    const size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error("endpoint URL missing scheme: " + url);
    const size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return ParsedEndpoint{url, "/"};
    return ParsedEndpoint{url.substr(0, path_start), url.substr(path_start)};
}

// Blocking token bucket; rate 0 disables it.
class TokenBucket {
public:
    explicit TokenBucket(double rate)
        : rate_(rate), tokens_(rate > 0 ? rate : 0), last_(std::chrono::steady_clock::now()) {}

    void acquire() {
        if (rate_ <= 0) return;
        std::unique_lock<std::mutex> lock(mu_);
        for (;;) {
            refill();
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
            cv_.wait_for(lock, wait);
        }
    }

private:
    void refill() {
        const auto now = std::chrono::steady_clock::now();
        const double elapsed = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(rate_, tokens_ + elapsed * rate_);  // burst capped at one second
    }

    double rate_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mu_;
    std::condition_variable cv_;
};

// Bounded in-flight counter shared by all threads using one client.
class InFlightLimiter {
public:
    explicit InFlightLimiter(int bound) : bound_(bound < 1 ? 1 : bound) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return active_ < bound_; });
        ++active_;
    }

    void release() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            --active_;
        }
        cv_.notify_one();
    }

    struct Guard {
        InFlightLimiter& limiter;
        explicit Guard(InFlightLimiter& l) : limiter(l) { limiter.acquire(); }
        ~Guard() { limiter.release(); }
    };

private:
    int bound_;
    int active_ = 0;
    std::mutex mu_;
    std::condition_variable cv_;
};

}  // namespace detail

inline nlohmann::json messages_to_json(const MessageList& messages) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Message& m : messages) {
        arr.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    }
    return arr;
}

// Chat-completions client. Sends {model, messages} and reads the first
// choice's message content; 429/5xx/transport failures retry with
// exponential backoff, 401/403 aborts the run.
class HttpChatClient final : public ChatClient {
public:
    explicit HttpChatClient(ClientConfig config)
        : config_(std::move(config)),
          endpoint_(detail::parse_endpoint(config_.endpoint)),
          bucket_(config_.requests_per_second),
          limiter_(config_.max_concurrent) {}

    CompletionResult complete(const MessageList& messages, const OracleView&) override {
        detail::InFlightLimiter::Guard guard(limiter_);

        nlohmann::json body = {{"model", config_.model}, {"messages", messages_to_json(messages)}};
        if (config_.decoding_overrides) {
            for (const auto& [k, v] : config_.decoding_overrides->items()) body[k] = v;
        }
        const std::string payload = body.dump();

        const char* token = std::getenv(config_.auth_env.c_str());
        httplib::Headers headers;
        if (token != nullptr && *token != '\0') {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }

        CompletionResult result;
        std::string last_error;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                const double delay = config_.backoff_base_seconds *
                                     std::pow(config_.backoff_multiplier, attempt - 1);
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            }
            bucket_.acquire();
            result.retries = attempt;

            httplib::Client cli(endpoint_.base);
            cli.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
            cli.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
            cli.set_write_timeout(std::chrono::duration<double>(config_.timeout_seconds));

            httplib::Result res = cli.Post(endpoint_.path, headers, payload, "application/json");
            if (!res) {
                last_error = "transport: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403) {
                throw AuthError("authentication rejected (HTTP " + std::to_string(res->status) +
                                ") using key from $" + config_.auth_env);
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                result.ok = false;
                result.error = "HTTP " + std::to_string(res->status);
                result.text = res->body;
                return result;
            }
            return parse_body(res->body, result);
        }
        result.ok = false;
        result.error = "Exhausted: " + last_error + " after " +
                       std::to_string(config_.max_retries + 1) + " attempts";
        return result;
    }

    const ClientConfig& config() const { return config_; }

private:
    static CompletionResult parse_body(const std::string& body, CompletionResult result) {
        nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
        if (!parsed.is_discarded() && parsed.contains("choices") && parsed["choices"].is_array() &&
            !parsed["choices"].empty() && parsed["choices"][0].contains("message") &&
            parsed["choices"][0]["message"].contains("content") &&
            parsed["choices"][0]["message"]["content"].is_string()) {
            result.ok = true;
            result.text = parsed["choices"][0]["message"]["content"].get<std::string>();
            return result;
        }
        result.ok = false;
        result.error = "MalformedResponse";
        result.text = body;
        return result;
    }

    ClientConfig config_;
    detail::ParsedEndpoint endpoint_;
    detail::TokenBucket bucket_;
    detail::InFlightLimiter limiter_;
};

inline std::unique_ptr<ChatClient> make_scripted_client(const ScriptedAgentSpec& spec) {
    return std::make_unique<ScriptedAgent>(spec);
}

inline std::unique_ptr<ChatClient> make_http_client(const ClientConfig& config) {
    return std::make_unique<HttpChatClient>(config);
}

}  // namespace boxkey
