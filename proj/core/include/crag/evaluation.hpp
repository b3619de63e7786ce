// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crag/embedding.hpp"
#include "crag/ingest.hpp"
#include "crag/llm_gateway.hpp"
#include "crag/pipeline.hpp"
#include "crag/tokenizer.hpp"

namespace crag {

struct EvaluationRow {
    std::string product_id;
    std::size_t n_reviews = 0;
    std::size_t t_crag = 0;
    std::size_t t_rag = 0;
    double cit_percent = 0.0;
    std::map<std::string, std::optional<double>> cossim_by_model;  // absent when the model failed

    friend bool operator==(const EvaluationRow&, const EvaluationRow&) = default;
};

/// Renders the question-answering prompt over `doc` and returns its largest token
/// count across `tokenizers`.
std::size_t max_prompt_tokens(const KnowledgeDocument& doc, const std::string& question,
                              std::span<const TokenizerSpec> tokenizers);

/// Change in tokens, 100 * (t_crag - t_rag) / t_rag, in exact hundredths of a percent
/// rounded half away from zero. t_rag == 0 raises UndefinedMetricError.
std::int64_t cit_hundredths(std::size_t t_crag, std::size_t t_rag);
double compute_cit(std::size_t t_crag, std::size_t t_rag);

/// Clamped to [-1, 1]. Zero vectors raise UndefinedMetricError; dimension mismatch ContractError.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

double cost_estimate(std::size_t prompt_tokens, double price_per_1k);
std::string format_cost(double cost);   // 5 decimals
std::string format_cit(double cit);     // sign on non-zero values, 2 decimals

/// T-CRAG / T-RAG are maxima over questions and tokenizers. CosSim per model is the mean
/// over questions of the similarity between the embedded CRAG and RAG answers; a model
/// that fails on any question gets no value and the row continues.
EvaluationRow evaluate_product(const ProductGroup& group, const KnowledgeDocument& crag_doc,
                               const KnowledgeDocument& rag_doc, std::span<const std::string> questions,
                               std::span<const std::string> models, const Gateway& gateway,
                               const Embedder& embedder, std::span<const TokenizerSpec> tokenizers);

enum class ReportFormat { markdown, csv };

/// Columns: # reviews, T-CRAG, T-RAG, CiT(%), then "CosSim (<model>)" per model.
std::string render_report(std::span<const EvaluationRow> rows, std::span<const std::string> models,
                          ReportFormat format);

}  // namespace crag
