// SPDX-License-Identifier: Apache-2.0

#include "crag/app/service.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "crag/errors.hpp"
#include "crag/knowledge_store.hpp"

namespace crag::app {
namespace {

using nlohmann::ordered_json;

HttpReply error_reply(int status, const std::string& message, const std::string& correlation_id = {}) {
    ordered_json body;
    body["error"] = message;
    if (!correlation_id.empty()) {
        body["correlation_id"] = correlation_id;
    }
    return HttpReply{status, body.dump()};
}

}  // namespace

std::string to_json(const AskResponse& response) {
    ordered_json body;
    body["answer"] = response.answer;
    body["method"] = to_string(response.method);
    body["model"] = response.model;
    body["prompt_token_count"] = response.prompt_token_count;
    body["elapsed_ms"] = response.elapsed_ms;
    body["correlation_id"] = response.correlation_id;
    body["cost_estimate"] = response.cost_estimate ? ordered_json(*response.cost_estimate) : ordered_json(nullptr);
    return body.dump();
}

AskRequest parse_ask_request(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw ContractError(std::string("request body is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ContractError("request body must be a JSON object");
    }
    auto field = [&](const char* name) {
        if (!j.contains(name) || !j[name].is_string()) {
            throw ContractError(std::string("field '") + name + "' must be a string");
        }
        return j[name].get<std::string>();
    };
    AskRequest request;
    request.product_id = field("product_id");
    request.question = field("question");
    request.method = method_from_string(field("method"));
    request.model = field("model");
    return request;
}

struct Service::Impl {
    AppConfig config;
    KnowledgeStore store;
    std::shared_ptr<Gateway> gateway;
    std::vector<TokenizerSpec> tokenizers;
    httplib::Server server;
    std::thread listener;
    std::atomic<bool> stopping{false};

    explicit Impl(AppConfig c)
        : config(std::move(c)),
          store(config.resolve(config.paths.knowledge)),
          gateway(make_gateway(config)),
          tokenizers(make_tokenizers(config)) {}

    AnswerContext context() const { return AnswerContext{store, *gateway, tokenizers, config.prices, config.service.clock}; }
};

Service::Service(AppConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
    auto& server = impl_->server;
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    auto reply = [](httplib::Response& res, const HttpReply& r) {
        res.status = r.status;
        res.set_content(r.body, "application/json; charset=utf-8");
    };
    server.Get("/api/products", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, products()); });
    server.Get("/api/health", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, health()); });
    server.Post("/api/ask",
                [this, reply](const httplib::Request& req, httplib::Response& res) { reply(res, ask(req.body)); });
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        res.status = 500;
        res.set_content(R"({"error":"internal error"})", "application/json; charset=utf-8");
    });
    server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
        std::string correlation_id = "-";
        if (req.path == "/api/ask") {
            const auto body = nlohmann::json::parse(res.body, nullptr, false);
            if (body.is_object()) {
                correlation_id = body.value("correlation_id", "-");
            }
        }
        spdlog::info("{} {} -> {} correlation_id={}", req.method, req.path, res.status, correlation_id);
    });
}

Service::~Service() {
    stop();
}

HttpReply Service::products() const {
    ordered_json list = ordered_json::array();
    for (const auto& product : impl_->store.products()) {
        ordered_json entry;
        entry["product_id"] = product;
        std::size_t review_count = 0;
        ordered_json methods = ordered_json::array();
        for (Method m : impl_->store.methods(product)) {
            methods.push_back(to_string(m));
            review_count = std::max(review_count, impl_->store.get(product, m).review_count());
        }
        entry["review_count"] = review_count;
        entry["methods_available"] = std::move(methods);
        list.push_back(std::move(entry));
    }
    return HttpReply{200, list.dump()};
}

HttpReply Service::ask(const std::string& body) const {
    AskRequest request;
    try {
        request = parse_ask_request(body);
        return HttpReply{200, to_json(answer_question(request, impl_->context()))};
    } catch (const ContractError& e) {
        return error_reply(400, e.what());
    } catch (const NotFoundError& e) {
        return error_reply(404, e.what());
    } catch (const UpstreamError& e) {
        return error_reply(502, e.what(), e.correlation_id());
    } catch (const Error& e) {
        return error_reply(500, e.what(), ask_correlation_id(request));
    }
}

HttpReply Service::health() const {
    ordered_json body;
    body["status"] = "ok";
    body["products"] = impl_->store.products().size();
    return HttpReply{200, body.dump()};
}

int Service::start() {
    auto& server = impl_->server;
    const auto& host = impl_->config.service.host;
    int port = impl_->config.service.port;
    // httplib's default also sets SO_REUSEPORT, which lets a second server share a busy port.
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    if (port == 0) {
        port = server.bind_to_any_port(host);
    } else if (!server.bind_to_port(host, port)) {
        port = -1;
    }
    if (port < 0) {
        throw StartupError("cannot bind " + host + ":" + std::to_string(impl_->config.service.port));
    }
    impl_->listener = std::thread([&server] { server.listen_after_bind(); });
    spdlog::info("serving on http://{}:{}", host, port);
    return port;
}

void block_shutdown_signals() {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);
}

void Service::run_until_signal() {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    const timespec poll{0, 200'000'000};
    while (!impl_->stopping.load()) {
        if (sigtimedwait(&signals, nullptr, &poll) > 0) {
            spdlog::info("shutting down");
            break;
        }
    }
    stop();
}

void Service::stop() {
    impl_->stopping.store(true);
    impl_->server.stop();
    if (impl_->listener.joinable()) {
        impl_->listener.join();
    }
}

}  // namespace crag::app
