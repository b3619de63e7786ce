// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "crag/app/service.hpp"
#include "crag/errors.hpp"
#include "support/workspace.hpp"

namespace crag::app {
namespace {

using nlohmann::json;

struct ServiceFixture : ::testing::Test {
    static inline testing::TempDir* dir = nullptr;
    static inline AppConfig* config = nullptr;

    static void SetUpTestSuite() {
        dir = new testing::TempDir;
        config = new AppConfig(testing::fixture_config(*dir));
        testing::build_all(*config);
    }
    static void TearDownTestSuite() {
        delete config;
        delete dir;
    }
};

std::string ask_body(const std::string& product, const std::string& method, const std::string& model = "mock") {
    return json{{"product_id", product}, {"question", "What do buyers think?"}, {"method", method}, {"model", model}}
        .dump();
}

TEST_F(ServiceFixture, ProductsListsBothFixtureProducts) {
    const Service service(*config);
    const auto reply = service.products();
    EXPECT_EQ(reply.status, 200);
    const auto body = json::parse(reply.body);
    ASSERT_EQ(body.size(), 2u);
    EXPECT_EQ(body[0]["product_id"], "Zeta Phone X1");
    EXPECT_EQ(body[0]["review_count"], 12);
    EXPECT_EQ(body[0]["methods_available"], json::array({"CRAG", "RAG"}));
    EXPECT_EQ(body[1]["product_id"], "Echo Buds 2");
}

TEST_F(ServiceFixture, AskIsByteIdenticalForIdenticalRequests) {
    const Service service(*config);
    const auto first = service.ask(ask_body("Echo Buds 2", "CRAG"));
    const auto second = service.ask(ask_body("Echo Buds 2", "CRAG"));
    EXPECT_EQ(first.status, 200);
    EXPECT_EQ(first.body, second.body);
    const auto body = json::parse(first.body);
    EXPECT_EQ(body["method"], "CRAG");
    EXPECT_EQ(body["model"], "mock");
    EXPECT_EQ(body["elapsed_ms"], 0);
    EXPECT_GT(body["prompt_token_count"].get<int>(), 0);
    EXPECT_TRUE(body["cost_estimate"].is_number());
    EXPECT_EQ(std::vector<std::string>({"answer", "method", "model", "prompt_token_count", "elapsed_ms",
                                        "correlation_id", "cost_estimate"}),
              [&] {
                  std::vector<std::string> keys;
                  const auto ordered = nlohmann::ordered_json::parse(first.body);
                  for (const auto& item : ordered.items()) {
                      keys.push_back(item.key());
                  }
                  return keys;
              }());
}

TEST_F(ServiceFixture, AskErrorsMapToStatusCodes) {
    const Service service(*config);
    EXPECT_EQ(service.ask(ask_body("Echo Buds 2", "HYBRID")).status, 400);
    EXPECT_NE(service.ask(ask_body("Echo Buds 2", "HYBRID")).body.find("HYBRID"), std::string::npos);
    EXPECT_EQ(service.ask("not json").status, 400);
    EXPECT_EQ(service.ask(R"({"product_id": "x"})").status, 400);
    EXPECT_EQ(service.ask(ask_body("Echo Buds 2", "crag", "ghost")).status, 400);
    EXPECT_EQ(service.ask(ask_body("Nothing", "crag")).status, 404);
}

TEST_F(ServiceFixture, UpstreamFailureIs502WithCorrelationId) {
    AppConfig broken = *config;
    BackendConfig remote;
    remote.id = "down";
    remote.kind = BackendKind::remote;
    remote.endpoint = "http://127.0.0.1:1/chat";
    remote.timeout = std::chrono::milliseconds(200);
    broken.backends.push_back(remote);
    const Service service(broken);
    const auto reply = service.ask(ask_body("Echo Buds 2", "RAG", "down"));
    EXPECT_EQ(reply.status, 502);
    EXPECT_TRUE(json::parse(reply.body)["correlation_id"].is_string());
}

TEST_F(ServiceFixture, HealthReportsOk) {
    const Service service(*config);
    EXPECT_EQ(json::parse(service.health().body)["status"], "ok");
}

TEST_F(ServiceFixture, HttpRoundTripWithCors) {
    Service service(*config);
    const int port = service.start();
    httplib::Client client("127.0.0.1", port);
    const auto products = client.Get("/api/products");
    ASSERT_TRUE(products);
    EXPECT_EQ(products->status, 200);
    EXPECT_EQ(products->get_header_value("Access-Control-Allow-Origin"), "*");
    EXPECT_EQ(products->body, service.products().body);

    const auto ask = client.Post("/api/ask", ask_body("Zeta Phone X1", "RAG"), "application/json");
    ASSERT_TRUE(ask);
    EXPECT_EQ(ask->status, 200);
    EXPECT_EQ(ask->body, service.ask(ask_body("Zeta Phone X1", "RAG")).body);

    const auto bad = client.Post("/api/ask", ask_body("Zeta Phone X1", "nope"), "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);

    const auto preflight = client.Options("/api/ask");
    ASSERT_TRUE(preflight);
    EXPECT_EQ(preflight->status, 204);

    const auto health = client.Get("/api/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
    service.stop();
}

TEST_F(ServiceFixture, BindFailureIsAStartupError) {
    Service first(*config);
    const int port = first.start();
    AppConfig same_port = *config;
    same_port.service.port = port;
    Service second(same_port);
    EXPECT_THROW(second.start(), StartupError);
}

TEST_F(ServiceFixture, EmptyStoreServesEmptyList) {
    testing::TempDir empty;
    const Service service(testing::fixture_config(empty));
    EXPECT_EQ(service.products().body, "[]");
}

}  // namespace
}  // namespace crag::app
