// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <functional>
#include <string>
#include <thread>

#include <httplib.h>

namespace crag::testing {

/// Loopback HTTP server on an ephemeral port, for exercising remote clients.
class HttpStub {
public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    explicit HttpStub(const std::string& path, Handler handler) {
        server_.Post(path, [this, handler](const httplib::Request& req, httplib::Response& res) {
            ++calls_;
            handler(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~HttpStub() {
        server_.stop();
        thread_.join();
    }
    HttpStub(const HttpStub&) = delete;
    HttpStub& operator=(const HttpStub&) = delete;

    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }
    int calls() const { return calls_.load(); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> calls_{0};
};

}  // namespace crag::testing
