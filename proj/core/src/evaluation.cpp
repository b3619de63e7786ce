// SPDX-License-Identifier: Apache-2.0

#include "crag/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "crag/csv.hpp"
#include "crag/errors.hpp"

namespace crag {

std::size_t max_prompt_tokens(const KnowledgeDocument& doc, const std::string& question,
                              std::span<const TokenizerSpec> tokenizers) {
    if (tokenizers.empty()) {
        throw ContractError("max_prompt_tokens: no tokenizer configured");
    }
    const ChatRequest request = qa_request(doc.text, question, "");
    std::size_t best = 0;
    for (const auto& tokenizer : tokenizers) {
        best = std::max(best, count_tokens(request.prompt, tokenizer));
    }
    return best;
}

std::int64_t cit_hundredths(std::size_t t_crag, std::size_t t_rag) {
    if (t_rag == 0) {
        throw UndefinedMetricError("CiT is undefined when T-RAG is 0");
    }
    const auto numerator = (static_cast<std::int64_t>(t_crag) - static_cast<std::int64_t>(t_rag)) * 10000;
    const auto denominator = static_cast<std::int64_t>(t_rag);
    const std::int64_t magnitude = (std::abs(numerator) * 2 + denominator) / (2 * denominator);
    return numerator < 0 ? -magnitude : magnitude;
}

double compute_cit(std::size_t t_crag, std::size_t t_rag) {
    return static_cast<double>(cit_hundredths(t_crag, t_rag)) / 100.0;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) {
        throw ContractError("cosine_similarity: dimension mismatch (" + std::to_string(a.dimension()) + " vs " +
                            std::to_string(b.dimension()) + ")");
    }
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw UndefinedMetricError("cosine similarity is undefined for a zero vector");
    }
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double cost_estimate(std::size_t prompt_tokens, double price_per_1k) {
    if (price_per_1k < 0.0) {
        throw ContractError("cost_estimate: negative price");
    }
    return static_cast<double>(prompt_tokens) * price_per_1k / 1000.0;
}

std::string format_cost(double cost) {
    return fmt::format("{:.5f}", cost);
}

std::string format_cit(double cit) {
    const std::string text = fmt::format("{:.2f}", cit);
    if (text == "0.00" || text == "-0.00") {
        return "0.00";
    }
    return cit > 0 ? "+" + text : text;
}

EvaluationRow evaluate_product(const ProductGroup& group, const KnowledgeDocument& crag_doc,
                               const KnowledgeDocument& rag_doc, std::span<const std::string> questions,
                               std::span<const std::string> models, const Gateway& gateway,
                               const Embedder& embedder, std::span<const TokenizerSpec> tokenizers) {
    if (questions.empty()) {
        throw ContractError("evaluate_product: no questions");
    }
    if (crag_doc.product_id != group.product_id || rag_doc.product_id != group.product_id) {
        throw ContractError("evaluate_product: documents do not belong to product '" + group.product_id + "'");
    }
    EvaluationRow row;
    row.product_id = group.product_id;
    row.n_reviews = group.reviews.size();
    for (const auto& question : questions) {
        row.t_crag = std::max(row.t_crag, max_prompt_tokens(crag_doc, question, tokenizers));
        row.t_rag = std::max(row.t_rag, max_prompt_tokens(rag_doc, question, tokenizers));
    }
    row.cit_percent = compute_cit(row.t_crag, row.t_rag);

    for (const auto& model : models) {
        std::optional<double> mean;
        try {
            double sum = 0.0;
            for (std::size_t q = 0; q < questions.size(); ++q) {
                std::vector<ChatRequest> requests{qa_request(crag_doc.text, questions[q], model),
                                                  qa_request(rag_doc.text, questions[q], model)};
                const std::string stem = group.product_id + "#eval-" + model + "-q" + std::to_string(q);
                requests[0].correlation_id = stem + "-crag";
                requests[1].correlation_id = stem + "-rag";
                const auto outcomes = gateway.complete_all(requests);
                for (const auto& outcome : outcomes) {
                    if (outcome.error) {
                        std::rethrow_exception(outcome.error);
                    }
                }
                const std::vector<std::string> answers{outcomes[0].response->text, outcomes[1].response->text};
                const auto vectors = embedder.embed(answers);
                sum += cosine_similarity(vectors[0], vectors[1]);
            }
            mean = sum / static_cast<double>(questions.size());
        } catch (const TokenizerError&) {
            throw;
        } catch (const Error& e) {
            spdlog::warn("product '{}': model '{}' failed, CosSim left empty: {}", group.product_id, model, e.what());
        }
        row.cossim_by_model[model] = mean;
    }
    return row;
}

std::string render_report(std::span<const EvaluationRow> rows, std::span<const std::string> models,
                          ReportFormat format) {
    std::vector<std::string> header{"# reviews", "T-CRAG", "T-RAG", "CiT(%)"};
    for (const auto& model : models) {
        header.push_back("CosSim (" + model + ")");
    }
    std::vector<std::vector<std::string>> body;
    for (const auto& row : rows) {
        std::vector<std::string> cells{std::to_string(row.n_reviews), std::to_string(row.t_crag),
                                       std::to_string(row.t_rag), format_cit(row.cit_percent)};
        for (const auto& model : models) {
            const auto it = row.cossim_by_model.find(model);
            cells.push_back(it != row.cossim_by_model.end() && it->second ? fmt::format("{:.4f}", *it->second)
                                                                          : std::string("n/a"));
        }
        body.push_back(std::move(cells));
    }

    std::string out;
    if (format == ReportFormat::csv) {
        const auto emit = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                out += (i == 0 ? "" : ",") + csv_escape(cells[i]);
            }
            out += '\n';
        };
        emit(header);
        for (const auto& cells : body) {
            emit(cells);
        }
        return out;
    }

    const auto emit = [&](const std::vector<std::string>& cells) {
        out += '|';
        for (const auto& cell : cells) {
            out += ' ' + cell + " |";
        }
        out += '\n';
    };
    emit(header);
    out += '|';
    for (std::size_t i = 0; i < header.size(); ++i) {
        out += "---|";
    }
    out += '\n';
    for (const auto& cells : body) {
        emit(cells);
    }
    return out;
}

}  // namespace crag
