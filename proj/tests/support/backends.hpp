// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "crag/errors.hpp"
#include "crag/llm_gateway.hpp"
#include "crag/retry.hpp"

namespace crag::testing {

/// Backend whose reply is computed by a callback; records every request it saw.
class ScriptedBackend final : public ChatBackend {
public:
    using Script = std::function<ChatResponse(const ChatRequest&, int call)>;

    ScriptedBackend(std::string id, Script script) : id_(std::move(id)), script_(std::move(script)) {}

    ChatResponse send(const ChatRequest& request) override {
        int call = 0;
        {
            std::lock_guard lock(mutex_);
            seen_.push_back(request);
            call = static_cast<int>(seen_.size());
        }
        return script_(request, call);
    }
    const std::string& id() const noexcept override { return id_; }

    std::vector<ChatRequest> seen() const {
        std::lock_guard lock(mutex_);
        return seen_;
    }

private:
    std::string id_;
    Script script_;
    mutable std::mutex mutex_;
    std::vector<ChatRequest> seen_;
};

inline ChatResponse reply(const std::string& text, const ChatRequest& request) {
    ChatResponse response;
    response.text = text;
    response.model = request.model;
    response.correlation_id = request.correlation_id;
    return response;
}

/// Fails with TransientError on the first `failures` calls, then answers `text`.
inline std::shared_ptr<ScriptedBackend> flaky_backend(std::string id, int failures, std::string text = "ok") {
    return std::make_shared<ScriptedBackend>(std::move(id), [failures, text](const ChatRequest& r, int call) {
        if (call <= failures) {
            throw TransientError("scripted failure " + std::to_string(call));
        }
        return reply(text, r);
    });
}

/// Wraps the mock but fails every request whose correlation id ends with `suffix`.
inline std::shared_ptr<ScriptedBackend> failing_on(std::string id, std::string suffix) {
    auto mock = std::make_shared<MockChatBackend>(id);
    return std::make_shared<ScriptedBackend>(std::move(id), [mock, suffix](const ChatRequest& r, int) {
        if (r.correlation_id.size() >= suffix.size() &&
            r.correlation_id.compare(r.correlation_id.size() - suffix.size(), suffix.size(), suffix) == 0) {
            throw GenerationError("scripted refusal for " + r.correlation_id);
        }
        return mock->send(r);
    });
}

inline RetryPolicy instant_retry(int attempts = 3) {
    RetryPolicy policy;
    policy.max_attempts = attempts;
    policy.sleep = [](std::chrono::milliseconds) {};
    return policy;
}

}  // namespace crag::testing
