// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "crag/app/config.hpp"
#include "crag/knowledge_store.hpp"
#include "crag/llm_gateway.hpp"
#include "crag/pipeline.hpp"
#include "crag/tokenizer.hpp"

namespace crag::app {

struct AskRequest {
    std::string product_id;
    std::string question;
    Method method = Method::crag;
    std::string model;
};

struct AskResponse {
    std::string answer;
    Method method = Method::crag;
    std::string model;
    std::size_t prompt_token_count = 0;
    std::int64_t elapsed_ms = 0;
    std::string correlation_id;
    std::optional<double> cost_estimate;  // set when the model has a configured price
};

/// Derived from the request fields only, so repeated asks share an id.
std::string ask_correlation_id(const AskRequest& request);

struct AnswerContext {
    const KnowledgeStore& store;
    const Gateway& gateway;
    std::span<const TokenizerSpec> tokenizers;
    const std::map<std::string, double>& prices;
    ClockMode clock = ClockMode::steady;
};

/// Unknown product or method: NotFoundError. Unknown model or empty question: ContractError.
/// Generation or transport failure: UpstreamError carrying the correlation id.
AskResponse answer_question(const AskRequest& request, const AnswerContext& context);

}  // namespace crag::app
