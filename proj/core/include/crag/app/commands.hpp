// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crag/app/config.hpp"
#include "crag/clustering.hpp"
#include "crag/ingest.hpp"
#include "crag/pipeline.hpp"

namespace crag::app {

/// Stage commands. Each reads the previous stage's artifact (StageError naming the
/// command to run when it is missing), writes its own artifact plus a `<artifact>.stamp`
/// fingerprint, and skips the work when the stamp still matches unless `force` is set.
/// Data goes to `out`, diagnostics to `err`.
struct CommandIo {
    std::ostream& out;
    std::ostream& err;
    bool force = false;
};

struct IngestSummary {
    CorpusStats stats;
    std::size_t skipped_rows = 0;
    bool up_to_date = false;
};

struct EmbedSummary {
    std::size_t products = 0;
    std::size_t vectors = 0;
    bool up_to_date = false;
};

struct BuildSummary {
    std::size_t rebuilt = 0;
    std::size_t skipped = 0;
    std::vector<std::string> failed;  // product ids whose build failed
};

struct EvaluateSummary {
    std::size_t products = 0;
    bool up_to_date = false;
};

IngestSummary cmd_ingest(const AppConfig& config, const CommandIo& io);
EmbedSummary cmd_embed(const AppConfig& config, const CommandIo& io);
/// Failed products are reported on `err` and listed in the summary; the rest are still built.
BuildSummary cmd_build(const AppConfig& config, Method method, const CommandIo& io);
EvaluateSummary cmd_evaluate(const AppConfig& config, const std::filesystem::path& questions_file,
                             const CommandIo& io);
/// Inertia curve over [k_min, k_max] for one product, as CSV on `out`.
ElbowCurve cmd_elbow(const AppConfig& config, const std::string& product_id, const CommandIo& io);

/// Line-oriented query loop. Plain lines are questions; `:products`, `:product ID`,
/// `:method crag|rag`, `:model ID`, `:help` and `:quit` change or show the session state.
void cmd_query(const AppConfig& config, std::istream& in, const CommandIo& io);

/// Ingest artifact: one JSON review per line, grouped by product.
void write_reviews_artifact(const std::filesystem::path& path, std::span<const ProductGroup> groups);
std::vector<ProductGroup> read_reviews_artifact(const std::filesystem::path& path);

/// Non-empty trimmed lines of a questions file; an empty file raises InputError.
std::vector<std::string> read_questions(const std::filesystem::path& path);

}  // namespace crag::app
