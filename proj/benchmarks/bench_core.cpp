// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "crag/clustering.hpp"
#include "crag/embedding.hpp"
#include "crag/ingest.hpp"
#include "crag/tokenizer.hpp"

namespace {

std::vector<std::string> review_texts(std::size_t n) {
    static const std::vector<std::string> words{"battery", "screen", "great", "slow",  "delivery", "camera",
                                                "bright",  "noisy",  "the",   "lasts", "broken",   "value"};
    std::mt19937_64 rng(42);
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < n; ++i) {
        std::string t;
        for (int w = 0; w < 24; ++w) {
            t += words[rng() % words.size()];
            t += w % 8 == 7 ? ". " : " ";
        }
        texts.push_back(t);
    }
    return texts;
}

void BM_Embed(benchmark::State& state) {
    const auto texts = review_texts(static_cast<std::size_t>(state.range(0)));
    const crag::DeterministicEmbedder embedder(7, 768);
    for (auto _ : state) {
        benchmark::DoNotOptimize(embedder.embed(texts));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Embed)->Arg(100)->Arg(1000);

void BM_Kmeans(benchmark::State& state) {
    const auto texts = review_texts(static_cast<std::size_t>(state.range(0)));
    const auto vectors = crag::DeterministicEmbedder(7, 768).embed(texts);
    crag::ClusteringConfig config;
    config.k = 4;
    for (auto _ : state) {
        benchmark::DoNotOptimize(crag::kmeans(vectors, config));
    }
}
BENCHMARK(BM_Kmeans)->Arg(75)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_CountTokens(benchmark::State& state) {
    std::string text;
    for (const auto& t : review_texts(static_cast<std::size_t>(state.range(0)))) {
        text += t + "\n";
    }
    const auto tokenizer = crag::builtin_tokenizer();
    for (auto _ : state) {
        benchmark::DoNotOptimize(crag::count_tokens(text, tokenizer));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_CountTokens)->Arg(100)->Arg(5000);

void BM_ParseCsv(benchmark::State& state) {
    std::string csv = "Product Name,Brand Name,Price,Rating,Reviews,Review Votes\n";
    const auto texts = review_texts(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < texts.size(); ++i) {
        csv += "Product " + std::to_string(i % 50) + ",Acme,99.99," + std::to_string(1 + i % 5) + ",\"" + texts[i] + "\",0\n";
    }
    for (auto _ : state) {
        std::istringstream in(csv);
        benchmark::DoNotOptimize(crag::parse_reviews(in));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(csv.size()));
}
BENCHMARK(BM_ParseCsv)->Arg(1000)->Arg(20000);

}  // namespace

BENCHMARK_MAIN();
