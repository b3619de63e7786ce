// SPDX-License-Identifier: Apache-2.0

#include "crag/pipeline.hpp"

#include <algorithm>
#include <unordered_set>

#include "crag/errors.hpp"
#include "crag/hashing.hpp"

namespace crag {

std::string to_string(Method method) {
    return method == Method::crag ? "CRAG" : "RAG";
}

Method method_from_string(std::string_view name) {
    std::string lower;
    for (char c : name) {
        lower.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
    if (lower == "crag") {
        return Method::crag;
    }
    if (lower == "rag") {
        return Method::rag;
    }
    throw ContractError("unknown method '" + std::string(name) + "' (expected CRAG or RAG)");
}

std::size_t KnowledgeDocument::review_count() const {
    if (method == Method::rag) {
        return review_indexes.size();
    }
    std::size_t total = 0;
    for (const auto& s : summaries) {
        total += s.source_review_count;
    }
    return total;
}

std::string input_hash(const ProductGroup& group) {
    Fnv1a h;
    h.field(group.product_id);
    for (const auto& review : group.reviews) {
        h.update(static_cast<std::uint64_t>(review.source_index));
        h.field(review.text);
    }
    return to_hex(h.digest());
}

std::string embedder_id(const Embedder& embedder) {
    return to_string(embedder.kind()) + "/" + std::to_string(embedder.dimension());
}

std::size_t effective_k(const ProductGroup& group, std::span<const EmbeddingVector> vectors,
                        const CragOptions& options) {
    std::unordered_set<std::string> distinct;
    for (const auto& review : group.reviews) {
        distinct.insert(review.text);
    }
    std::size_t k = options.clustering.k;
    if (options.per_product_elbow) {
        const std::size_t k_max = std::min(options.elbow_k_max, distinct.size());
        if (k_max >= options.elbow_k_min + 2) {
            k = elbow_select_k(vectors, options.elbow_k_min, k_max, options.clustering).chosen_k;
        }
    }
    return std::max<std::size_t>(1, std::min(k, distinct.size()));
}

KnowledgeDocument build_crag_knowledge(const ProductGroup& group, std::span<const EmbeddingVector> vectors,
                                       const CragOptions& options, const Gateway& gateway) {
    if (group.reviews.empty()) {
        throw ContractError("build_crag_knowledge: product '" + group.product_id + "' has no reviews");
    }
    if (vectors.size() != group.reviews.size()) {
        throw ContractError("build_crag_knowledge: product '" + group.product_id + "' has " +
                            std::to_string(group.reviews.size()) + " reviews but " + std::to_string(vectors.size()) +
                            " vectors");
    }

    ClusteringConfig clustering = options.clustering;
    clustering.k = effective_k(group, vectors, options);
    const ClusteringResult clusters = kmeans(vectors, clustering);
    const std::size_t k = clusters.centroids.size();

    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < clusters.assignments.size(); ++i) {
        members[clusters.assignments[i]].push_back(i);
    }

    std::vector<ChatRequest> requests;
    requests.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<std::string> texts;
        for (std::size_t i : members[c]) {
            texts.push_back(group.reviews[i].text);
        }
        ChatRequest request = summarization_request(texts, options.example, options.summarizer_model);
        request.correlation_id = group.product_id + "#cluster-" + std::to_string(c);
        requests.push_back(std::move(request));
    }

    const auto outcomes = gateway.complete_all(requests);

    KnowledgeDocument doc;
    doc.product_id = group.product_id;
    doc.method = Method::crag;
    for (std::size_t c = 0; c < k; ++c) {
        if (outcomes[c].error) {
            std::string reason = "unknown error";
            try {
                std::rethrow_exception(outcomes[c].error);
            } catch (const std::exception& e) {
                reason = e.what();
            } catch (...) {
            }
            throw PartialFailureError(group.product_id, c,
                                      "product '" + group.product_id + "': summarization of cluster " +
                                          std::to_string(c) + " failed: " + reason);
        }
        ClusterSummary summary;
        summary.product_id = group.product_id;
        summary.cluster_index = c;
        summary.summary_text = outcomes[c].response->text;
        summary.source_review_count = members[c].size();
        for (std::size_t i : members[c]) {
            summary.source_indexes.push_back(group.reviews[i].source_index);
        }
        doc.summaries.push_back(std::move(summary));
    }
    doc.text = aggregate_summaries(doc.summaries);
    doc.created_with = BuildFingerprint{options.clustering.k, options.clustering.seed, options.embedder_id,
                                        options.backend_descriptor.empty() ? options.summarizer_model : options.backend_descriptor,
                                        input_hash(group), options.per_product_elbow};
    return doc;
}

KnowledgeDocument build_crag_knowledge(const ProductGroup& group, const Embedder& embedder, CragOptions options,
                                       const Gateway& gateway) {
    std::vector<std::string> texts;
    texts.reserve(group.reviews.size());
    for (const auto& review : group.reviews) {
        texts.push_back(review.text);
    }
    const auto vectors = embedder.embed(texts);
    options.embedder_id = embedder_id(embedder);
    return build_crag_knowledge(group, vectors, options, gateway);
}

std::string aggregate_summaries(std::span<const ClusterSummary> summaries) {
    if (summaries.empty()) {
        throw ContractError("aggregate_summaries: no summaries");
    }
    for (const auto& s : summaries) {
        if (s.product_id != summaries.front().product_id) {
            throw ContractError("aggregate_summaries: summaries belong to different products ('" +
                                summaries.front().product_id + "' and '" + s.product_id + "')");
        }
    }
    std::vector<const ClusterSummary*> ordered;
    for (const auto& s : summaries) {
        ordered.push_back(&s);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const ClusterSummary* a, const ClusterSummary* b) { return a->cluster_index < b->cluster_index; });
    std::string text;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (i > 0) {
            text += "\n\n";
        }
        text += ordered[i]->summary_text;
    }
    return text;
}

KnowledgeDocument build_rag_knowledge(const ProductGroup& group) {
    if (group.reviews.empty()) {
        throw ContractError("build_rag_knowledge: product '" + group.product_id + "' has no reviews");
    }
    KnowledgeDocument doc;
    doc.product_id = group.product_id;
    doc.method = Method::rag;
    std::vector<std::string> texts;
    for (const auto& review : group.reviews) {
        texts.push_back(review.text);
        doc.review_indexes.push_back(review.source_index);
    }
    doc.text = bullet_list(texts);
    doc.created_with.input_hash = input_hash(group);
    return doc;
}

}  // namespace crag
