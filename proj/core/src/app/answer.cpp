// SPDX-License-Identifier: Apache-2.0

#include "crag/app/answer.hpp"

#include <chrono>

#include "crag/errors.hpp"
#include "crag/evaluation.hpp"
#include "crag/hashing.hpp"

namespace crag::app {

std::string ask_correlation_id(const AskRequest& request) {
    Fnv1a h;
    h.field(request.product_id).field(request.question).field(to_string(request.method)).field(request.model);
    return "ask-" + to_hex(splitmix64(h.digest()));
}

AskResponse answer_question(const AskRequest& request, const AnswerContext& context) {
    const auto started = std::chrono::steady_clock::now();
    if (!context.gateway.has_backend(request.model)) {
        throw ContractError("unknown model '" + request.model + "'");
    }
    if (trim(request.question).empty()) {
        throw ContractError("question is empty");
    }
    const KnowledgeDocument doc = context.store.get(request.product_id, request.method);

    AskResponse response;
    response.method = request.method;
    response.model = request.model;
    response.correlation_id = ask_correlation_id(request);
    response.prompt_token_count = max_prompt_tokens(doc, request.question, context.tokenizers);

    ChatRequest chat = qa_request(doc.text, request.question, request.model);
    chat.correlation_id = response.correlation_id;
    try {
        response.answer = context.gateway.complete(chat).text;
    } catch (const GenerationError& e) {
        throw UpstreamError(response.correlation_id, e.what());
    } catch (const TransportError& e) {
        throw UpstreamError(response.correlation_id, e.what());
    }

    if (const auto price = context.prices.find(request.model); price != context.prices.end()) {
        response.cost_estimate = cost_estimate(response.prompt_token_count, price->second);
    }
    if (context.clock == ClockMode::steady) {
        response.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - started)
                                  .count();
    }
    return response;
}

}  // namespace crag::app
