// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "crag/embedding.hpp"
#include "crag/errors.hpp"
#include "crag/evaluation.hpp"
#include "support/fixtures.hpp"
#include "support/http_stub.hpp"

namespace crag {
namespace {

// Reference for the hashing embedder, written from the documented rule: FNV-1a over the
// seed's 8 little-endian bytes, the word length's 8 bytes and the word, then splitmix64;
// coordinate = h mod dim, sign = top bit.
std::vector<double> reference_embed(const std::vector<std::string>& words, std::uint64_t seed, std::size_t dim) {
    auto fnv = [](std::uint64_t state, unsigned char byte) { return (state ^ byte) * 0x100000001b3ULL; };
    std::vector<double> acc(dim, 0.0);
    for (const auto& word : words) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (int i = 0; i < 8; ++i) {
            h = fnv(h, static_cast<unsigned char>(seed >> (8 * i)));
        }
        for (int i = 0; i < 8; ++i) {
            h = fnv(h, static_cast<unsigned char>(static_cast<std::uint64_t>(word.size()) >> (8 * i)));
        }
        for (unsigned char c : word) {
            h = fnv(h, c);
        }
        h += 0x9e3779b97f4a7c15ULL;
        h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
        h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
        h ^= h >> 31;
        acc[h % dim] += (h >> 63) ? -1.0 : 1.0;
    }
    double norm = 0.0;
    for (double v : acc) {
        norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : acc) {
        v /= norm;
    }
    return acc;
}

TEST(EmbeddingVector, RejectsEmptyAndNonFinite) {
    EXPECT_THROW(EmbeddingVector(std::vector<double>{}), ContractError);
    EXPECT_THROW(EmbeddingVector(std::vector<double>{1.0, NAN}), ContractError);
    EXPECT_THROW(EmbeddingVector(std::vector<double>{INFINITY, 0.0}), ContractError);
}

TEST(EmbedderKind, StringRoundTrip) {
    EXPECT_EQ(to_string(EmbedderKind::deterministic_test), "deterministic-test");
    EXPECT_EQ(embedder_kind_from_string("remote-endpoint"), EmbedderKind::remote_endpoint);
    EXPECT_THROW(embedder_kind_from_string("word2vec"), ConfigError);
}

TEST(DeterministicEmbed, EmptyTextIsFirstBasisVector) {
    const auto v = deterministic_test_embed("", 0, 8);
    EXPECT_EQ(v[0], 1.0);
    for (std::size_t i = 1; i < 8; ++i) {
        EXPECT_EQ(v[i], 0.0);
    }
    EXPECT_EQ(deterministic_test_embed("?!  ...", 3, 8), v) << "no words at all";
}

TEST(DeterministicEmbed, RepeatedWordIsColinear) {
    const auto a = deterministic_test_embed("good good", 0, 768);
    const auto b = deterministic_test_embed("good", 0, 768);
    EXPECT_NEAR(cosine_similarity(a, b), 1.0, 1e-12);
}

TEST(DeterministicEmbed, MatchesReferenceRuleAndSeparatesTopics) {
    const auto a = deterministic_test_embed("great battery", 7, 16);
    const auto b = deterministic_test_embed("terrible screen", 7, 16);
    const auto ref_a = reference_embed({"great", "battery"}, 7, 16);
    const auto ref_b = reference_embed({"terrible", "screen"}, 7, 16);
    for (std::size_t i = 0; i < 16; ++i) {
        EXPECT_DOUBLE_EQ(a[i], ref_a[i]) << "coordinate " << i;
        EXPECT_DOUBLE_EQ(b[i], ref_b[i]) << "coordinate " << i;
    }
    EXPECT_LT(cosine_similarity(a, b), 1.0);
}

TEST(DeterministicEmbed, LowercasesAndSplitsOnNonAlphanumerics) {
    EXPECT_EQ(deterministic_test_embed("Great, BATTERY!", 1, 32), deterministic_test_embed("great battery", 1, 32));
}

TEST(DeterministicEmbed, DimensionBelowTwoIsRejected) {
    EXPECT_THROW(deterministic_test_embed("x", 0, 1), ContractError);
}

TEST(DeterministicEmbedder, SameTextTwiceGivesIdenticalVectors) {
    const DeterministicEmbedder embedder(5, 64);
    const std::vector<std::string> texts{"works fine", "works fine"};
    const auto out = embedder.embed(texts);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0], out[1]);
}

TEST(DeterministicEmbedder, DifferentTextsDiffer) {
    const DeterministicEmbedder embedder(5, 64);
    const std::vector<std::string> texts{"battery died", "screen cracked"};
    const auto out = embedder.embed(texts);
    EXPECT_NE(out[0], out[1]);
}

TEST(EmbedTexts, EmptyListGivesEmptyList) {
    EmbedderConfig config;
    EXPECT_TRUE(embed_texts({}, config).empty());
}

TEST(MakeEmbedder, ValidatesConfig) {
    EmbedderConfig config;
    config.dimension = 1;
    EXPECT_THROW(make_embedder(config), ConfigError);
    config.dimension = 8;
    config.kind = EmbedderKind::remote_endpoint;
    EXPECT_THROW(make_embedder(config), ConfigError) << "remote without endpoint";
}

EmbedderConfig remote_config(const std::string& url, std::size_t dim) {
    EmbedderConfig config;
    config.kind = EmbedderKind::remote_endpoint;
    config.endpoint = url;
    config.dimension = dim;
    config.model = "m";
    config.batch_size = 2;
    config.parallelism = 2;
    config.retry.sleep = [](std::chrono::milliseconds) {};
    return config;
}

TEST(RemoteEmbedder, BatchesAndKeepsOrder) {
    testing::HttpStub stub("/embed", [](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        nlohmann::json out;
        out["data"] = nlohmann::json::array();
        for (const auto& text : body["input"]) {
            out["data"].push_back({{"embedding", {static_cast<double>(text.get<std::string>().size()), 1.0}}});
        }
        res.set_content(out.dump(), "application/json");
    });
    const RemoteEmbedder embedder(remote_config(stub.url("/embed"), 2));
    const std::vector<std::string> texts{"a", "bb", "ccc", "dddd", "eeeee"};
    const auto out = embedder.embed(texts);
    ASSERT_EQ(out.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(out[i][0], static_cast<double>(i + 1));
    }
    EXPECT_EQ(stub.calls(), 3);
}

TEST(RemoteEmbedder, DimensionMismatchIsAContractError) {
    testing::HttpStub stub("/embed", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"embeddings":[[1.0,2.0,3.0]]})", "application/json");
    });
    const RemoteEmbedder embedder(remote_config(stub.url("/embed"), 2));
    const std::vector<std::string> texts{"x"};
    EXPECT_THROW(embedder.embed(texts), ContractError);
}

TEST(RemoteEmbedder, ServerErrorsExhaustRetriesWithAttemptCount) {
    testing::HttpStub stub("/embed", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    const RemoteEmbedder embedder(remote_config(stub.url("/embed"), 2));
    const std::vector<std::string> texts{"x"};
    try {
        embedder.embed(texts);
        FAIL() << "expected TransportError";
    } catch (const TransportError& e) {
        EXPECT_EQ(e.attempts(), 3);
    }
    EXPECT_EQ(stub.calls(), 3);
}

TEST(VectorStore, SaveThenLoadRoundTrips) {
    testing::TempDir dir;
    const auto path = dir / "vectors.jsonl";
    const std::vector<std::string> texts{"a", "b", "c"};
    const auto vectors = testing::to_vectors({{0.1, 1.0 / 3.0}, {-2.5e-300, 7.0}, {1e300, -0.0}});
    save_vectors(path, "P", texts, vectors);
    save_vectors(path, "Q", std::vector<std::string>{"z"}, testing::to_vectors({{1.0, 2.0}}));
    const auto loaded = load_vectors(path, "P");
    EXPECT_EQ(loaded.texts, texts);
    EXPECT_EQ(loaded.vectors, vectors);
    EXPECT_EQ(load_vectors(path, "Q").texts.size(), 1u);
}

TEST(VectorStore, SaveReplacesAProductsRecords) {
    testing::TempDir dir;
    const auto path = dir / "vectors.jsonl";
    save_vectors(path, "P", std::vector<std::string>{"old"}, testing::to_vectors({{1.0, 0.0}}));
    save_vectors(path, "P", std::vector<std::string>{"new"}, testing::to_vectors({{0.0, 1.0}}));
    const auto loaded = load_vectors(path, "P");
    ASSERT_EQ(loaded.texts.size(), 1u);
    EXPECT_EQ(loaded.texts[0], "new");
}

TEST(VectorStore, EmptyStoreLoadsNothing) {
    testing::TempDir dir;
    const auto path = dir / "vectors.jsonl";
    testing::write_text(path, "");
    EXPECT_TRUE(load_vectors(path, "P").vectors.empty());
}

TEST(VectorStore, MissingFileIsAStorageError) {
    testing::TempDir dir;
    EXPECT_THROW(load_vectors(dir / "absent.jsonl", "P"), StorageError);
}

TEST(VectorStore, TruncatedFinalLineNamesTheLine) {
    testing::TempDir dir;
    const auto path = dir / "vectors.jsonl";
    save_vectors(path, "P", std::vector<std::string>{"a", "b"}, testing::to_vectors({{1.0, 0.0}, {0.0, 1.0}}));
    std::string content;
    {
        std::ifstream in(path);
        content.assign(std::istreambuf_iterator<char>(in), {});
    }
    testing::write_text(path, content.substr(0, content.size() - 10));
    try {
        load_vectors(path, "P");
        FAIL() << "expected StorageError";
    } catch (const StorageError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
    }
}

TEST(VectorStore, MixedDimensionsAreRejectedOnSave) {
    testing::TempDir dir;
    EXPECT_THROW(save_vectors(dir / "v.jsonl", "P", std::vector<std::string>{"a", "b"},
                              testing::to_vectors({{1.0, 0.0}, {1.0, 0.0, 0.0}})),
                 ContractError);
}

}  // namespace
}  // namespace crag
