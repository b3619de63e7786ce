// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crag/retry.hpp"

namespace crag {

/// Fixed-length vector of finite reals. Construction rejects empty or non-finite input.
class EmbeddingVector {
public:
    explicit EmbeddingVector(std::vector<double> values);

    std::size_t dimension() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
    std::vector<double> values_;
};

double dot(const EmbeddingVector& a, const EmbeddingVector& b);
double l2_norm(const EmbeddingVector& v);

enum class EmbedderKind { deterministic_test, remote_endpoint };

std::string to_string(EmbedderKind kind);
EmbedderKind embedder_kind_from_string(std::string_view name);

struct EmbedderConfig {
    EmbedderKind kind = EmbedderKind::deterministic_test;
    std::size_t dimension = 768;

    // deterministic_test
    std::uint64_t seed = 0;

    // remote_endpoint
    std::string endpoint;       // absolute URL accepting {"model", "input": [...]}
    std::string model;
    std::string auth_env;       // name of the env var holding a bearer token
    std::size_t parallelism = 4;
    std::size_t batch_size = 32;
    std::chrono::milliseconds timeout{30000};
    RetryPolicy retry;
};

/// Shared across threads; implementations must be safe for concurrent `embed` calls.
class Embedder {
public:
    virtual ~Embedder() = default;

    /// One vector per text, in input order, each of dimension().
    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const = 0;
    virtual std::size_t dimension() const noexcept = 0;
    virtual EmbedderKind kind() const noexcept = 0;
};

/// Bag-of-words hashing embedder: each lowercase alphanumeric word adds +/-1 to one
/// seeded-hash-selected coordinate, then the sum is L2-normalized. An all-zero sum
/// becomes the unit vector e0.
EmbeddingVector deterministic_test_embed(std::string_view text, std::uint64_t seed, std::size_t dimension);

class DeterministicEmbedder final : public Embedder {
public:
    DeterministicEmbedder(std::uint64_t seed, std::size_t dimension);

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override;
    std::size_t dimension() const noexcept override { return dimension_; }
    EmbedderKind kind() const noexcept override { return EmbedderKind::deterministic_test; }

private:
    std::uint64_t seed_;
    std::size_t dimension_;
};

/// JSON-over-HTTP client. Request: {"model": m, "input": [texts]}. Accepted responses:
/// {"embeddings": [[...], ...]} or {"data": [{"embedding": [...]}, ...]}.
/// Vectors are passed through unnormalized.
class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(EmbedderConfig config);

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override;
    std::size_t dimension() const noexcept override { return config_.dimension; }
    EmbedderKind kind() const noexcept override { return EmbedderKind::remote_endpoint; }

private:
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const;

    EmbedderConfig config_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config);

/// Convenience wrapper: builds the configured embedder and embeds `texts`.
std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts, const EmbedderConfig& config);

// --- vector store -----------------------------------------------------------
//
// One JSON object per line, fields in order: product_id, text, dimension, values.
// Values are written in shortest round-trip decimal form.

struct VectorRecord {
    std::string product_id;
    std::string text;
    EmbeddingVector vector;

    friend bool operator==(const VectorRecord&, const VectorRecord&) = default;
};

struct LoadedVectors {
    std::vector<std::string> texts;
    std::vector<EmbeddingVector> vectors;
};

/// Replaces `product_id`'s records in the store (creating it if absent).
void save_vectors(const std::filesystem::path& path, const std::string& product_id,
                  std::span<const std::string> texts, std::span<const EmbeddingVector> vectors);

/// Records for `product_id` in file order. Missing file or corrupt line raises StorageError.
LoadedVectors load_vectors(const std::filesystem::path& path, const std::string& product_id);

void write_vector_store(const std::filesystem::path& path, std::span<const VectorRecord> records);
std::vector<VectorRecord> read_vector_store(const std::filesystem::path& path);

}  // namespace crag
