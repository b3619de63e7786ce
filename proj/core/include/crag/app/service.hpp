// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "crag/app/answer.hpp"
#include "crag/app/config.hpp"

namespace crag::app {

struct HttpReply {
    int status = 200;
    std::string body;  // JSON
};

/// QA over a knowledge store opened read-only at construction. The handlers are plain
/// functions of the request body so they can be exercised without a socket.
class Service {
public:
    explicit Service(AppConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    HttpReply products() const;
    HttpReply ask(const std::string& body) const;
    HttpReply health() const;

    /// Binds and serves on a background thread; returns the bound port (useful with port 0).
    /// Bind failure raises StartupError.
    int start();
    /// Blocks until stop() or a SIGINT/SIGTERM, then shuts down gracefully.
    void run_until_signal();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Blocks SIGINT/SIGTERM in the calling thread and every thread it later creates, so
/// run_until_signal() can wait for them. Call before start().
void block_shutdown_signals();

/// JSON for an AskResponse; field order is fixed so equal responses serialize identically.
std::string to_json(const AskResponse& response);
AskRequest parse_ask_request(const std::string& body);

}  // namespace crag::app
