// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <thread>
#include <utility>

#include "crag/errors.hpp"

namespace crag {

/// Thrown by transports for failures worth retrying (connection refused, timeouts, 5xx, 429).
class TransientError : public Error {
public:
    using Error::Error;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
    double multiplier = 2.0;
    /// Replaced in tests so retries do not sleep.
    std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
    };
};

/// Calls `fn(attempt)` until it returns without a TransientError or the attempts run out.
/// `attempt` is 1-based. Exhaustion raises TransportError carrying the attempt count.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, const std::string& what, Fn&& fn) {
    const int attempts = policy.max_attempts < 1 ? 1 : policy.max_attempts;
    auto backoff = policy.initial_backoff;
    std::string last_error;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn(attempt);
        } catch (const TransientError& e) {
            last_error = e.what();
            if (attempt >= attempts) {
                break;
            }
        }
        if (policy.sleep) {
            policy.sleep(backoff);
        }
        backoff = std::chrono::milliseconds(
            static_cast<std::chrono::milliseconds::rep>(static_cast<double>(backoff.count()) * policy.multiplier));
    }
    throw TransportError(what + " failed after " + std::to_string(attempts) + " attempts: " + last_error, attempts);
}

}  // namespace crag
