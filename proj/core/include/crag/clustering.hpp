// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crag/embedding.hpp"

namespace crag {

struct ClusteringConfig {
    std::size_t k = 4;
    std::uint64_t seed = 0;
    std::size_t max_iterations = 300;
    std::size_t restarts = 10;
};

struct ClusteringResult {
    std::vector<EmbeddingVector> centroids;
    std::vector<std::size_t> assignments;  // one per input, in [0, centroids.size())
    double inertia = 0.0;
    std::size_t iterations_run = 0;        // Lloyd iterations of the winning restart
    bool converged = false;
    std::size_t best_restart = 0;

    /// Inertia after initialization and after every update and assignment step,
    /// one trace per restart. Each trace is non-increasing.
    std::vector<std::vector<double>> restart_traces;

    friend bool operator==(const ClusteringResult&, const ClusteringResult&) = default;
};

/// Sum over points of the squared Euclidean distance to the assigned centroid.
double inertia(std::span<const EmbeddingVector> vectors, std::span<const EmbeddingVector> centroids,
               std::span<const std::size_t> assignments);

/// Seeded k-means++ followed by Lloyd iterations, best of `restarts` runs.
///
/// Restart r draws from seed + r. A restart stops when a reassignment leaves every
/// point in place or after max_iterations. Nearest-centroid ties go to the lower
/// cluster index; an empty cluster is refilled with the point farthest from its own
/// centroid (taken from a cluster that can spare it). The minimum-inertia restart
/// wins, ties to the lower restart index. k larger than the input is clamped to n.
ClusteringResult kmeans(std::span<const EmbeddingVector> vectors, const ClusteringConfig& config);

struct ElbowPoint {
    std::size_t k = 0;
    double inertia = 0.0;
    std::optional<double> second_difference;  // interior candidates only
};

struct ElbowCurve {
    std::vector<ElbowPoint> points;
    std::size_t chosen_k = 0;
};

/// Picks k from an inertia curve indexed by k_min, k_min+1, ...: the interior candidate
/// maximizing (I(k-1) - I(k)) - (I(k) - I(k+1)), ties to the smaller k.
ElbowCurve select_elbow(std::span<const double> inertias, std::size_t k_min);

/// Runs kmeans for every k in [k_min, min(k_max, n)] and applies select_elbow.
/// `config.k` is ignored. Fewer than three candidates raise ConfigError.
ElbowCurve elbow_select_k(std::span<const EmbeddingVector> vectors, std::size_t k_min, std::size_t k_max,
                          const ClusteringConfig& config);

/// CSV with header "k,inertia,second_difference,chosen".
std::string elbow_to_csv(const ElbowCurve& curve);

}  // namespace crag
