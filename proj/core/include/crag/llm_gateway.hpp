// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <exception>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "crag/retry.hpp"

namespace crag {

using Bindings = std::map<std::string, std::string>;

/// Text with `{{NAME}}` placeholders. Each required placeholder occurs exactly once.
class PromptTemplate {
public:
    PromptTemplate(std::string body, std::set<std::string> required);

    /// Every `{{NAME}}` found in `body` becomes required.
    static PromptTemplate from_body(std::string body);

    const std::string& body() const noexcept { return body_; }
    const std::set<std::string>& required() const noexcept { return required_; }

private:
    std::string body_;
    std::set<std::string> required_;
};

/// Single left-to-right pass: required placeholders are replaced by their bindings
/// verbatim, everything else (including braces inside bound values) is copied as-is.
/// A missing or an unknown extra binding raises ContractError naming it.
std::string render_template(const PromptTemplate& prompt, const Bindings& bindings);

/// One-shot summarization prompt with Mistral [INST] delimiters.
/// Placeholders: PRODUCT_REVIEWS, ONESHOT_QUESTION, ONESHOT_ANSWER.
const PromptTemplate& summarization_template();

/// Question-answering prompt. Placeholders: KNOWLEDGE, USER_QUESTION.
const PromptTemplate& qa_template();

struct OneShotExample {
    std::string question = "What do customers think about this product overall?";
    std::string answer =
        "Customers are mostly satisfied. They value the price and the ease of use, while a smaller group "
        "reports problems with durability and delivery.";
};

enum class PromptKind { summarization, question_answering, other };

struct DecodingParams {
    double temperature = 0.0;
    int max_output_tokens = 512;
};

struct ChatRequest {
    std::string prompt;
    std::string model;            // backend id in the gateway
    DecodingParams decoding;
    PromptKind kind = PromptKind::other;
    Bindings bindings;            // template bindings the prompt was rendered from
    std::string correlation_id;
};

struct Usage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

struct ChatResponse {
    std::string text;
    std::string model;
    std::optional<Usage> usage;
    int attempts = 1;
    std::string correlation_id;
};

/// Joins reviews as "- review" lines.
std::string bullet_list(std::span<const std::string> reviews);

ChatRequest summarization_request(std::span<const std::string> reviews, const OneShotExample& example,
                                  const std::string& model);

ChatRequest qa_request(const std::string& knowledge, const std::string& question, const std::string& model);

/// A chat-completion backend. `send` performs one attempt; it throws TransientError for
/// retryable failures and GenerationError for refusals. Must be safe to call concurrently.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse send(const ChatRequest& request) = 0;
    virtual const std::string& id() const noexcept = 0;
};

/// Sends with retries and validates the answer. Empty text raises GenerationError;
/// exhausted retries raise TransportError.
ChatResponse complete(const ChatRequest& request, ChatBackend& backend, const RetryPolicy& retry = {});

/// Deterministic offline model.
///  - summarization: first sentence of each distinct review bullet, joined by spaces,
///    cut off at `budget` builtin-tokenizer tokens.
///  - question answering: first three non-empty knowledge lines, each as "- line".
///  - anything else: first sentence of the prompt, within budget.
class MockChatBackend final : public ChatBackend {
public:
    explicit MockChatBackend(std::string id = "mock", std::size_t budget = 80);

    ChatResponse send(const ChatRequest& request) override;
    const std::string& id() const noexcept override { return id_; }
    std::size_t budget() const noexcept { return budget_; }

private:
    std::string id_;
    std::size_t budget_;
};

struct RemoteBackendConfig {
    std::string id;
    std::string endpoint;       // OpenAI-style chat completions URL
    std::string model;          // model name sent upstream
    std::string auth_env;       // env var holding the bearer token
    bool wrap_inst = false;     // wrap question-answering prompts in [INST] ... [/INST]
    std::chrono::milliseconds timeout{120000};
};

class RemoteChatBackend final : public ChatBackend {
public:
    explicit RemoteChatBackend(RemoteBackendConfig config);

    ChatResponse send(const ChatRequest& request) override;
    const std::string& id() const noexcept override { return config_.id; }

private:
    RemoteBackendConfig config_;
};

/// Result slot for batch completion; exactly one of the two is set.
struct ChatOutcome {
    std::optional<ChatResponse> response;
    std::exception_ptr error;
};

/// Routes requests to backends by `ChatRequest::model` and bounds in-flight requests
/// per backend. Responses are matched to requests by position and correlation id.
class Gateway {
public:
    explicit Gateway(RetryPolicy retry = {});
    ~Gateway();
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// `concurrency_limit` 0 means unbounded.
    void add_backend(std::shared_ptr<ChatBackend> backend, std::size_t concurrency_limit = 0);
    bool has_backend(const std::string& id) const;
    std::vector<std::string> backend_ids() const;

    ChatResponse complete(const ChatRequest& request) const;

    /// Issues all requests concurrently (subject to per-backend limits); outcome i belongs to request i.
    std::vector<ChatOutcome> complete_all(std::span<const ChatRequest> requests) const;

private:
    struct Route;
    const Route& route(const std::string& id) const;

    RetryPolicy retry_;
    std::map<std::string, std::unique_ptr<Route>> routes_;
};

}  // namespace crag
