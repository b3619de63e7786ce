// SPDX-License-Identifier: Apache-2.0

#include "crag/clustering.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "crag/errors.hpp"

namespace crag {
namespace {

/// Row-major copy of the input so the inner loops stay on contiguous memory.
class PointMatrix {
public:
    explicit PointMatrix(std::span<const EmbeddingVector> vectors)
        : rows_(vectors.size()), cols_(vectors.empty() ? 0 : vectors.front().dimension()) {
        data_.reserve(rows_ * cols_);
        for (const auto& v : vectors) {
            if (v.dimension() != cols_) {
                throw ContractError("kmeans: vectors have mixed dimensions (" + std::to_string(cols_) + " and " +
                                    std::to_string(v.dimension()) + ")");
            }
            data_.insert(data_.end(), v.values().begin(), v.values().end());
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    const double* row(std::size_t i) const noexcept { return data_.data() + i * cols_; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

double squared_distance(const double* a, const double* b, std::size_t d) noexcept {
    double sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double delta = a[i] - b[i];
        sum += delta * delta;
    }
    return sum;
}

/// Uniform double in [0, 1) from the top 53 bits; independent of the standard
/// library's distribution implementations.
double unit_interval(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return std::min(static_cast<std::size_t>(unit_interval(rng) * static_cast<double>(n)), n - 1);
}

struct Run {
    std::vector<double> centers;  // k * d, row-major
    std::vector<std::size_t> assignments;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> trace;
};

class Lloyd {
public:
    Lloyd(const PointMatrix& points, std::size_t k) : points_(points), k_(k), d_(points.cols()) {}

    std::vector<double> seed_plus_plus(std::uint64_t seed) const {
        const std::size_t n = points_.rows();
        std::mt19937_64 rng(seed);
        std::vector<double> centers;
        centers.reserve(k_ * d_);

        const auto add_center = [&](std::size_t i) {
            centers.insert(centers.end(), points_.row(i), points_.row(i) + d_);
        };
        add_center(uniform_index(rng, n));

        std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
        for (std::size_t c = 1; c < k_; ++c) {
            const double* last = centers.data() + (c - 1) * d_;
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nearest[i] = std::min(nearest[i], squared_distance(points_.row(i), last, d_));
                total += nearest[i];
            }
            if (total <= 0.0) {
                // Every point already coincides with a center.
                add_center(uniform_index(rng, n));
                continue;
            }
            const double target = unit_interval(rng) * total;
            double cumulative = 0.0;
            std::size_t pick = n;
            std::size_t last_positive = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (nearest[i] <= 0.0) {
                    continue;
                }
                last_positive = i;
                cumulative += nearest[i];
                if (cumulative > target) {
                    pick = i;
                    break;
                }
            }
            add_center(pick == n ? last_positive : pick);
        }
        return centers;
    }

    std::vector<std::size_t> assign(const std::vector<double>& centers) const {
        std::vector<std::size_t> out(points_.rows());
        for (std::size_t i = 0; i < points_.rows(); ++i) {
            std::size_t best = 0;
            double best_dist = squared_distance(points_.row(i), centers.data(), d_);
            for (std::size_t c = 1; c < k_; ++c) {
                const double dist = squared_distance(points_.row(i), centers.data() + c * d_, d_);
                if (dist < best_dist) {
                    best = c;
                    best_dist = dist;
                }
            }
            out[i] = best;
        }
        return out;
    }

    double cost(const std::vector<double>& centers, const std::vector<std::size_t>& assignments) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < points_.rows(); ++i) {
            sum += squared_distance(points_.row(i), centers.data() + assignments[i] * d_, d_);
        }
        return sum;
    }

    /// Centroid update. Empty clusters take the point farthest from its own centroid among
    /// clusters holding at least two points; neither step can raise the cost.
    std::vector<double> update(std::vector<std::size_t>& assignments) const {
        std::vector<double> centers;
        std::vector<std::size_t> counts;
        for (;;) {
            means(assignments, centers, counts);
            const auto empty = std::find(counts.begin(), counts.end(), std::size_t{0});
            if (empty == counts.end()) {
                return centers;
            }
            std::size_t donor = points_.rows();
            double donor_dist = -1.0;
            for (std::size_t i = 0; i < points_.rows(); ++i) {
                if (counts[assignments[i]] < 2) {
                    continue;
                }
                const double dist = squared_distance(points_.row(i), centers.data() + assignments[i] * d_, d_);
                if (dist > donor_dist) {
                    donor = i;
                    donor_dist = dist;
                }
            }
            if (donor == points_.rows()) {
                throw ContractError("kmeans: cannot fill an empty cluster (k exceeds n)");
            }
            assignments[donor] = static_cast<std::size_t>(empty - counts.begin());
        }
    }

    Run run(std::uint64_t seed, std::size_t max_iterations) const {
        Run r;
        r.centers = seed_plus_plus(seed);
        r.assignments = assign(r.centers);
        r.trace.push_back(cost(r.centers, r.assignments));
        for (std::size_t it = 1; it <= max_iterations; ++it) {
            r.centers = update(r.assignments);
            r.trace.push_back(cost(r.centers, r.assignments));
            r.iterations = it;
            auto next = assign(r.centers);
            if (next == r.assignments) {
                r.converged = true;
                break;
            }
            if (it == max_iterations) {
                // Keep the post-update state so no cluster is left empty.
                break;
            }
            r.assignments = std::move(next);
            r.trace.push_back(cost(r.centers, r.assignments));
        }
        return r;
    }

private:
    void means(const std::vector<std::size_t>& assignments, std::vector<double>& centers,
               std::vector<std::size_t>& counts) const {
        centers.assign(k_ * d_, 0.0);
        counts.assign(k_, 0);
        for (std::size_t i = 0; i < points_.rows(); ++i) {
            const std::size_t c = assignments[i];
            ++counts[c];
            const double* p = points_.row(i);
            double* center = centers.data() + c * d_;
            for (std::size_t j = 0; j < d_; ++j) {
                center[j] += p[j];
            }
        }
        for (std::size_t c = 0; c < k_; ++c) {
            if (counts[c] == 0) {
                continue;
            }
            const double scale = static_cast<double>(counts[c]);
            for (std::size_t j = 0; j < d_; ++j) {
                centers[c * d_ + j] /= scale;
            }
        }
    }

    const PointMatrix& points_;
    std::size_t k_;
    std::size_t d_;
};

std::string format_real(double value) {
    return fmt::format("{}", value);
}

}  // namespace

double inertia(std::span<const EmbeddingVector> vectors, std::span<const EmbeddingVector> centroids,
               std::span<const std::size_t> assignments) {
    if (vectors.size() != assignments.size()) {
        throw ContractError("inertia: " + std::to_string(vectors.size()) + " vectors but " +
                            std::to_string(assignments.size()) + " assignments");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (assignments[i] >= centroids.size()) {
            throw ContractError("inertia: assignment " + std::to_string(assignments[i]) + " of point " +
                                std::to_string(i) + " is out of range for " + std::to_string(centroids.size()) +
                                " centroids");
        }
        const EmbeddingVector& c = centroids[assignments[i]];
        if (c.dimension() != vectors[i].dimension()) {
            throw ContractError("inertia: dimension mismatch between point and centroid");
        }
        sum += squared_distance(vectors[i].values().data(), c.values().data(), c.dimension());
    }
    return sum;
}

ClusteringResult kmeans(std::span<const EmbeddingVector> vectors, const ClusteringConfig& config) {
    if (vectors.empty()) {
        throw ContractError("kmeans: empty input");
    }
    if (config.k == 0) {
        throw ConfigError("kmeans: k must be at least 1");
    }
    if (config.max_iterations == 0) {
        throw ConfigError("kmeans: max_iterations must be at least 1");
    }
    if (config.restarts == 0) {
        throw ConfigError("kmeans: restarts must be at least 1");
    }
    const PointMatrix points(vectors);
    const std::size_t k = std::min(config.k, points.rows());
    const Lloyd lloyd(points, k);

    ClusteringResult result;
    std::optional<Run> best;
    double best_cost = 0.0;
    for (std::size_t r = 0; r < config.restarts; ++r) {
        Run run = lloyd.run(config.seed + r, config.max_iterations);
        const double run_cost = lloyd.cost(run.centers, run.assignments);
        result.restart_traces.push_back(run.trace);
        if (!best || run_cost < best_cost) {
            best_cost = run_cost;
            result.best_restart = r;
            best = std::move(run);
        }
    }

    const std::size_t d = points.cols();
    for (std::size_t c = 0; c < k; ++c) {
        result.centroids.emplace_back(
            std::vector<double>(best->centers.begin() + static_cast<std::ptrdiff_t>(c * d),
                                best->centers.begin() + static_cast<std::ptrdiff_t>((c + 1) * d)));
    }
    result.assignments = std::move(best->assignments);
    result.iterations_run = best->iterations;
    result.converged = best->converged;
    result.inertia = inertia(vectors, result.centroids, result.assignments);
    return result;
}

ElbowCurve select_elbow(std::span<const double> inertias, std::size_t k_min) {
    if (inertias.size() < 3) {
        throw ConfigError("elbow selection needs at least 3 candidate k values, got " +
                          std::to_string(inertias.size()));
    }
    ElbowCurve curve;
    for (std::size_t i = 0; i < inertias.size(); ++i) {
        curve.points.push_back(ElbowPoint{k_min + i, inertias[i], std::nullopt});
    }
    std::optional<double> best;
    for (std::size_t i = 1; i + 1 < inertias.size(); ++i) {
        const double d = (inertias[i - 1] - inertias[i]) - (inertias[i] - inertias[i + 1]);
        curve.points[i].second_difference = d;
        // Strict comparison keeps the smaller k on ties.
        if (!best || d > *best) {
            best = d;
            curve.chosen_k = curve.points[i].k;
        }
    }
    return curve;
}

ElbowCurve elbow_select_k(std::span<const EmbeddingVector> vectors, std::size_t k_min, std::size_t k_max,
                          const ClusteringConfig& config) {
    if (vectors.empty()) {
        throw ContractError("elbow_select_k: empty input");
    }
    if (k_min < 1) {
        throw ConfigError("elbow_select_k: k_min must be at least 1");
    }
    k_max = std::min(k_max, vectors.size());
    if (k_max < k_min || k_max - k_min < 2) {
        throw ConfigError("elbow_select_k: need at least 3 candidates, range is [" + std::to_string(k_min) + ", " +
                          std::to_string(k_max) + "]");
    }
    std::vector<double> curve;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        ClusteringConfig per_k = config;
        per_k.k = k;
        curve.push_back(kmeans(vectors, per_k).inertia);
    }
    return select_elbow(curve, k_min);
}

std::string elbow_to_csv(const ElbowCurve& curve) {
    std::string out = "k,inertia,second_difference,chosen\n";
    for (const auto& p : curve.points) {
        out += fmt::format("{},{},{},{}\n", p.k, format_real(p.inertia),
                           p.second_difference ? format_real(*p.second_difference) : std::string{},
                           p.k == curve.chosen_k ? 1 : 0);
    }
    return out;
}

}  // namespace crag
