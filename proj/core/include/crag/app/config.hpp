// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crag/clustering.hpp"
#include "crag/embedding.hpp"
#include "crag/evaluation.hpp"
#include "crag/ingest.hpp"
#include "crag/llm_gateway.hpp"
#include "crag/retry.hpp"
#include "crag/tokenizer.hpp"

namespace crag::app {

struct PathsConfig {
    std::filesystem::path corpus_csv;
    std::filesystem::path reviews = "work/reviews.jsonl";      // ingest output
    std::filesystem::path vectors = "work/vectors.jsonl";      // embed output
    std::filesystem::path knowledge = "work/knowledge.jsonl";  // build output (+ .idx)
    std::filesystem::path report = "work/report.md";           // evaluate output
};

struct IngestConfig {
    ColumnMapping columns;
    std::size_t min_reviews = 4;
    bool dedup = false;
};

struct PipelineConfig {
    ClusteringConfig clustering;
    bool per_product_elbow = false;
    std::size_t elbow_k_min = 1;
    std::size_t elbow_k_max = 10;
    std::size_t parallel_products = 1;
};

enum class BackendKind { mock, remote };

struct BackendConfig {
    std::string id;
    BackendKind kind = BackendKind::mock;
    std::size_t budget = 80;          // mock only
    std::string endpoint;             // remote only
    std::string model;
    std::string auth_env;
    bool wrap_inst = false;
    std::size_t concurrency = 2;      // remote; mock is unbounded
    std::chrono::milliseconds timeout{120000};

    /// Stable description recorded in document fingerprints.
    std::string descriptor() const;
};

struct TokenizerConfig {
    std::string id;
    TokenizerKind kind = TokenizerKind::builtin_segmenter;
    std::map<std::string, std::string> parameters;
};

enum class ClockMode { steady, frozen };

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    /// `frozen` reports elapsed_ms = 0 so identical requests get byte-identical bodies.
    ClockMode clock = ClockMode::steady;
};

struct AppConfig {
    std::filesystem::path base_dir;  // relative paths resolve against this
    PathsConfig paths;
    IngestConfig ingest;
    EmbedderConfig embedder;
    PipelineConfig pipeline;
    std::vector<BackendConfig> backends;
    std::string summarizer = "mock";
    std::vector<std::string> qa_models{"mock"};
    OneShotExample oneshot;
    std::vector<TokenizerConfig> tokenizers;
    std::map<std::string, double> prices;  // model id -> price per 1k prompt tokens
    ReportFormat report_format = ReportFormat::markdown;
    ServiceConfig service;
    RetryPolicy retry;

    std::filesystem::path resolve(const std::filesystem::path& p) const;

    /// Checks that referenced backends and tokenizers exist and artifact paths are distinct.
    void validate() const;
};

/// Defaults: one mock backend "mock" and one builtin tokenizer.
AppConfig default_config();

/// Parses a JSON config; unspecified fields keep their defaults. Relative paths resolve
/// against the file's directory.
AppConfig load_config(const std::filesystem::path& path);
AppConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);

/// Applies the global --seed override to both clustering and the test embedder.
void apply_seed(AppConfig& config, std::uint64_t seed);

std::shared_ptr<Gateway> make_gateway(const AppConfig& config);
std::vector<TokenizerSpec> make_tokenizers(const AppConfig& config);

}  // namespace crag::app
