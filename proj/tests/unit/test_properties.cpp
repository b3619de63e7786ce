// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "crag/clustering.hpp"
#include "crag/csv.hpp"
#include "crag/embedding.hpp"
#include "crag/evaluation.hpp"
#include "crag/ingest.hpp"
#include "crag/llm_gateway.hpp"
#include "crag/tokenizer.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"

namespace crag {
namespace {

using testing::Gen;
using testing::kCases;

TEST(Property, CosineSymmetricBoundedScaleInvariant) {
    for (int seed = 0; seed < kCases; ++seed) {
        Gen g(seed);
        const std::size_t dim = g.size(2, 12);
        const EmbeddingVector a(g.vector(dim));
        const EmbeddingVector b(g.vector(dim));
        const double lambda = g.real(1e-3, 1e3);
        auto scaled_values = a.values();
        std::vector<double> scaled(scaled_values.begin(), scaled_values.end());
        for (auto& x : scaled) {
            x *= lambda;
        }
        const double ab = cosine_similarity(a, b);
        EXPECT_EQ(ab, cosine_similarity(b, a)) << "seed " << seed;
        EXPECT_GE(ab, -1.0);
        EXPECT_LE(ab, 1.0);
        EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-12) << "seed " << seed;
        EXPECT_NEAR(cosine_similarity(EmbeddingVector(scaled), b), ab, 1e-9) << "seed " << seed;
    }
}

TEST(Property, TokenCountIsAdditiveOverSpaceJoin) {
    for (int seed = 0; seed < kCases; ++seed) {
        Gen g(seed);
        const auto a = g.text(30);
        const auto b = g.text(30);
        EXPECT_EQ(count_builtin_tokens(a + " " + b), count_builtin_tokens(a) + count_builtin_tokens(b))
            << "seed " << seed;
    }
}

TEST(Property, CitIdentityAndAntitoneInRag) {
    for (int seed = 0; seed < kCases; ++seed) {
        Gen g(seed);
        const std::size_t t = g.size(1, 100000);
        EXPECT_EQ(compute_cit(t, t), 0.0);
        EXPECT_EQ(format_cit(compute_cit(t, t)), "0.00");
        const std::size_t rag = g.size(1, 10000);
        EXPECT_GE(compute_cit(t, rag), compute_cit(t, rag + g.size(1, 1000))) << "seed " << seed;
    }
}

TEST(Property, DeterministicEmbedIsUnitNormAndOrderFree) {
    for (int seed = 0; seed < kCases; ++seed) {
        Gen g(seed);
        std::vector<std::string> words;
        const std::size_t n = g.size(1, 12);
        for (std::size_t i = 0; i < n; ++i) {
            words.push_back("w" + std::to_string(g.size(0, 20)));
        }
        std::string forward;
        for (const auto& w : words) {
            forward += w + " ";
        }
        std::shuffle(words.begin(), words.end(), g.engine());
        std::string shuffled;
        for (const auto& w : words) {
            shuffled += w + ", ";
        }
        const std::size_t dim = g.size(2, 256);
        const auto a = deterministic_test_embed(forward, seed, dim);
        EXPECT_NEAR(l2_norm(a), 1.0, 1e-9) << "seed " << seed;
        EXPECT_EQ(a, deterministic_test_embed(shuffled, seed, dim)) << "seed " << seed;
    }
}

TEST(Property, KmeansOutputIsConsistent) {
    for (int seed = 0; seed < 60; ++seed) {
        Gen g(seed);
        const std::size_t n = g.size(1, 40);
        const std::size_t dim = g.size(1, 5);
        std::vector<std::vector<double>> raw;
        for (std::size_t i = 0; i < n; ++i) {
            raw.push_back(g.vector(dim));
        }
        const auto points = testing::to_vectors(raw);
        ClusteringConfig config;
        config.k = g.size(1, 6);
        config.seed = seed;
        config.restarts = g.size(1, 4);
        const auto result = kmeans(points, config);
        const std::size_t k = std::min(config.k, n);
        ASSERT_EQ(result.centroids.size(), k);
        ASSERT_EQ(result.assignments.size(), n);
        std::vector<std::size_t> sizes(k, 0);
        for (auto a : result.assignments) {
            ++sizes[a];
        }
        for (auto s : sizes) {
            EXPECT_GT(s, 0u) << "seed " << seed;
        }
        EXPECT_NEAR(inertia(points, result.centroids, result.assignments), result.inertia,
                    1e-9 * (1 + result.inertia));
        for (const auto& trace : result.restart_traces) {
            EXPECT_GE(trace.back(), result.inertia * (1 - 1e-12)) << "seed " << seed;
            for (std::size_t i = 1; i < trace.size(); ++i) {
                EXPECT_LE(trace[i], trace[i - 1] * (1 + 1e-12)) << "seed " << seed;
            }
        }
        if (n <= 8) {
            EXPECT_GE(result.inertia, testing::exhaustive_min_inertia(raw, k) * (1 - 1e-9) - 1e-12)
                << "nothing beats the exhaustive minimum; seed " << seed;
        }
    }
}

TEST(Property, KmeansFindsOptimumOnSeparatedBlobs) {
    for (int seed = 0; seed < 60; ++seed) {
        Gen g(seed);
        const std::size_t k = g.size(1, 3);
        const std::size_t n = g.size(k, 8);
        const auto raw = g.blobs(n, k, g.size(1, 2));
        ClusteringConfig config;
        config.k = k;
        config.seed = seed;
        const double expected = testing::exhaustive_min_inertia(raw, k);
        const double got = kmeans(testing::to_vectors(raw), config).inertia;
        EXPECT_NEAR(got, expected, 1e-9 * std::max(1.0, expected)) << "seed " << seed;
    }
}

TEST(Property, ElbowChoiceMaximizesSecondDifference) {
    for (int seed = 0; seed < kCases; ++seed) {
        Gen g(seed);
        std::vector<double> curve{g.real(100, 1000)};
        const std::size_t len = g.size(3, 10);
        while (curve.size() < len) {
            curve.push_back(curve.back() - g.real(0, 100));
        }
        const std::size_t k_min = g.size(1, 3);
        const auto elbow = select_elbow(curve, k_min);
        EXPECT_GT(elbow.chosen_k, k_min);
        EXPECT_LT(elbow.chosen_k, k_min + curve.size() - 1);
        const double chosen = *elbow.points[elbow.chosen_k - k_min].second_difference;
        for (const auto& p : elbow.points) {
            if (p.second_difference) {
                EXPECT_LE(*p.second_difference, chosen);
                if (p.k < elbow.chosen_k) {
                    EXPECT_LT(*p.second_difference, chosen) << "ties go to the smaller k; seed " << seed;
                }
            }
        }
    }
}

TEST(Property, FilterMinReviewsIsIdempotentAndMonotone) {
    for (int seed = 0; seed < kCases; ++seed) {
        Gen g(seed);
        std::vector<ProductGroup> groups;
        const std::size_t products = g.size(0, 8);
        for (std::size_t p = 0; p < products; ++p) {
            groups.push_back(testing::make_group("P" + std::to_string(p), std::vector<std::string>(g.size(1, 9), "r")));
        }
        const std::size_t lo = g.size(1, 6);
        const std::size_t hi = lo + g.size(0, 4);
        const auto once = filter_min_reviews(groups, lo);
        EXPECT_EQ(filter_min_reviews(once, lo), once);
        const auto stricter = filter_min_reviews(groups, hi);
        for (const auto& group : stricter) {
            EXPECT_TRUE(std::find(once.begin(), once.end(), group) != once.end()) << "seed " << seed;
        }
    }
}

TEST(Property, CsvEscapedFieldsParseBackAndSourceIndexIncreases) {
    for (int seed = 0; seed < kCases; ++seed) {
        Gen g(seed);
        std::string csv = "Product Name,Reviews\n";
        std::vector<std::pair<std::string, std::string>> rows;
        const std::size_t n = g.size(0, 10);
        for (std::size_t i = 0; i < n; ++i) {
            rows.emplace_back("p" + std::to_string(g.size(0, 3)), g.text(15));
            csv += csv_escape(rows.back().first) + "," + csv_escape(rows.back().second) + (g.coin() ? "\r\n" : "\n");
        }
        ColumnMapping mapping;
        mapping.brand = mapping.price = mapping.rating = mapping.votes = "";
        std::istringstream in(csv);
        const auto parsed = parse_reviews(in, mapping);
        std::size_t kept = 0;
        for (const auto& [product, text] : rows) {
            kept += trim(text).empty() ? 0 : 1;
        }
        ASSERT_EQ(parsed.reviews.size(), kept) << "seed " << seed << "\n" << csv;
        EXPECT_EQ(parsed.reviews.size() + parsed.skipped, n);
        for (std::size_t i = 1; i < parsed.reviews.size(); ++i) {
            EXPECT_LT(parsed.reviews[i - 1].source_index, parsed.reviews[i].source_index);
        }
        for (const auto& r : parsed.reviews) {
            EXPECT_EQ(r.text, trim(rows[r.source_index].second)) << "seed " << seed;
        }
    }
}

TEST(Property, RenderedBindingsAppearVerbatim) {
    for (int seed = 0; seed < kCases; ++seed) {
        Gen g(seed);
        const auto knowledge = g.text(40) + "k";
        const auto question = g.text(20) + "q";
        const auto prompt = qa_request(knowledge, question, "m").prompt;
        EXPECT_NE(prompt.find("Related descriptions: " + knowledge + "\n\nQuestion: " + question), std::string::npos)
            << "seed " << seed;
    }
}

}  // namespace
}  // namespace crag
