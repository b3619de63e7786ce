// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crag/clustering.hpp"
#include "crag/embedding.hpp"
#include "crag/ingest.hpp"
#include "crag/llm_gateway.hpp"

namespace crag {

enum class Method { crag, rag };

/// "CRAG" / "RAG".
std::string to_string(Method method);
/// Case-insensitive; anything else raises ContractError.
Method method_from_string(std::string_view name);

struct ClusterSummary {
    std::string product_id;
    std::size_t cluster_index = 0;
    std::string summary_text;
    std::size_t source_review_count = 0;
    std::vector<std::size_t> source_indexes;  // Review::source_index of every member

    friend bool operator==(const ClusterSummary&, const ClusterSummary&) = default;
};

/// What a document was built from. Two builds with equal fingerprints produce equal documents.
struct BuildFingerprint {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::string embedder;     // e.g. "deterministic-test/768"; empty for RAG
    std::string backend_id;   // summarizer; empty for RAG
    std::string input_hash;   // hash of the product's review texts
    bool per_product_elbow = false;

    friend bool operator==(const BuildFingerprint&, const BuildFingerprint&) = default;
};

struct KnowledgeDocument {
    std::string product_id;
    Method method = Method::crag;
    std::string text;
    std::vector<ClusterSummary> summaries;        // CRAG provenance
    std::vector<std::size_t> review_indexes;      // RAG provenance
    BuildFingerprint created_with;

    /// Reviews behind the document, from whichever provenance list applies.
    std::size_t review_count() const;

    friend bool operator==(const KnowledgeDocument&, const KnowledgeDocument&) = default;
};

struct CragOptions {
    ClusteringConfig clustering;
    std::string summarizer_model = "mock";
    OneShotExample example;
    /// Replace the global k by an elbow choice over [elbow_k_min, elbow_k_max] per product.
    bool per_product_elbow = false;
    std::size_t elbow_k_min = 1;
    std::size_t elbow_k_max = 10;
    /// Recorded in the fingerprint; filled in automatically by the Embedder overload.
    std::string embedder_id;
    /// Recorded in the fingerprint instead of summarizer_model when set (e.g. "mock(budget=80)").
    std::string backend_descriptor;
};

std::string input_hash(const ProductGroup& group);

/// Number of clusters actually used for `group`: k, optionally replaced by the elbow
/// choice, then capped at the number of distinct review texts.
std::size_t effective_k(const ProductGroup& group, std::span<const EmbeddingVector> vectors,
                        const CragOptions& options);

/// Cluster -> summarize -> aggregate over precomputed vectors (vectors[i] embeds reviews[i]).
/// Summaries are requested concurrently and aggregated in cluster order. Any failed cluster
/// raises PartialFailureError naming it; no document is returned.
KnowledgeDocument build_crag_knowledge(const ProductGroup& group, std::span<const EmbeddingVector> vectors,
                                       const CragOptions& options, const Gateway& gateway);

KnowledgeDocument build_crag_knowledge(const ProductGroup& group, const Embedder& embedder, CragOptions options,
                                       const Gateway& gateway);

/// Summaries in cluster_index order separated by one blank line.
std::string aggregate_summaries(std::span<const ClusterSummary> summaries);

/// Every review, in source order, as a "- text" line.
KnowledgeDocument build_rag_knowledge(const ProductGroup& group);

std::string embedder_id(const Embedder& embedder);

}  // namespace crag
