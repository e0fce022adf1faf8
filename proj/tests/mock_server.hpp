#pragma once

// In-process chat-completions mock used by the client tests, the loopback
// smoke run, and the acceptance suite. By default it behaves like a
// copy-last-answer agent: it echoes the most recent "Answer:" line found in
// the request messages.

#include <httplib.h>

#include <atomic>
#include <functional>
#include <string>
#include <thread>

#include "json.hpp"

namespace boxkey::testing {

class MockChatServer {
public:
    // Maps the concatenated request to a reply body; empty handler uses the
    // copy-last-answer default.
    using ReplyFn = std::function<std::string(const nlohmann::json& request)>;

    MockChatServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
            const int now = ++in_flight_;
            int seen = max_in_flight_.load();
            while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
            }
            ++requests_;

            if (fail_first_ > 0 && requests_ <= fail_first_) {
                res.status = 429;
                res.set_content("{\"error\": \"rate limit\"}", "application/json");
                --in_flight_;
                return;
            }
            if (fixed_status_ != 0) {
                res.status = fixed_status_;
                res.set_content(fixed_body_, "application/json");
                --in_flight_;
                return;
            }

            const nlohmann::json request = nlohmann::json::parse(req.body, nullptr, false);
            std::string reply;
            if (reply_fn_) {
                reply = reply_fn_(request);
            } else {
                reply = copy_last_answer(request);
            }
            const nlohmann::json body = {
                {"choices", {{{"message", {{"role", "assistant"}, {"content", reply}}}}}}};
            res.set_content(body.dump(), "application/json");
            --in_flight_;
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockChatServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string endpoint() const {
        return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    }

    void set_reply_fn(ReplyFn fn) { reply_fn_ = std::move(fn); }
    void fail_first(int n) { fail_first_ = n; }
    void set_fixed_response(int status, std::string body) {
        fixed_status_ = status;
        fixed_body_ = std::move(body);
    }

    int requests() const { return requests_.load(); }
    int max_in_flight() const { return max_in_flight_.load(); }

    static std::string copy_last_answer(const nlohmann::json& request) {
        std::string found;
        if (!request.contains("messages")) return found;
        for (const auto& m : request["messages"]) {
            const std::string content = m.value("content", "");
            size_t pos = 0;
            while (pos <= content.size()) {
                const size_t hit = content.find("Answer: ", pos);
                if (hit == std::string::npos) break;
                const bool at_line_start = hit == 0 || content[hit - 1] == '\n';
                size_t end = content.find('\n', hit);
                if (end == std::string::npos) end = content.size();
                if (at_line_start) found = content.substr(hit + 8, end - hit - 8);
                pos = end + 1;
            }
        }
        return found;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    ReplyFn reply_fn_;
    int fail_first_ = 0;
    int fixed_status_ = 0;
    std::string fixed_body_;
    std::atomic<int> requests_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
};

}  // namespace boxkey::testing
