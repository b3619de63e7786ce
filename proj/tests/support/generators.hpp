// SPDX-License-Identifier: Apache-2.0
//
// Minimal seeded generators for property tests. Each case gets its own seed so a
// failure message can name the case to replay.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace crag::testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    std::size_t size(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_); }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    bool coin() { return size(0, 1) == 1; }

    std::vector<double> vector(std::size_t dim, double lo = -10, double hi = 10) {
        std::vector<double> v(dim);
        for (auto& x : v) {
            x = real(lo, hi);
        }
        return v;
    }

    /// Printable ASCII plus a few multi-byte UTF-8 letters, tabs and newlines.
    std::string text(std::size_t max_len) {
        static const std::vector<std::string> atoms{"a", "b", "Z", "7", " ", " ", ",", ".", "'", "\"", "!", "-",
                                                    "\t", "\n", "{", "}", "\xC3\xA9", "\xE2\x82\xAC", "word", "Great"};
        std::string out;
        const std::size_t n = size(0, max_len);
        for (std::size_t i = 0; i < n; ++i) {
            out += atoms[size(0, atoms.size() - 1)];
        }
        return out;
    }

    /// `k` well-separated blobs in `dim` dimensions, `n` points total.
    std::vector<std::vector<double>> blobs(std::size_t n, std::size_t k, std::size_t dim) {
        std::vector<std::vector<double>> centers;
        for (std::size_t c = 0; c < k; ++c) {
            std::vector<double> center(dim, 0.0);
            center[0] = static_cast<double>(c) * 100.0;
            if (dim > 1) {
                center[1] = real(-5, 5);
            }
            centers.push_back(center);
        }
        std::vector<std::vector<double>> points;
        for (std::size_t i = 0; i < n; ++i) {
            auto p = centers[i % k];
            for (auto& x : p) {
                x += real(-1, 1);
            }
            points.push_back(p);
        }
        return points;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

constexpr int kCases = 200;

}  // namespace crag::testing
