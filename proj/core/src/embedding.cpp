// SPDX-License-Identifier: Apache-2.0

#include "crag/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "crag/concurrency.hpp"
#include "crag/errors.hpp"
#include "crag/fileio.hpp"
#include "crag/hashing.hpp"
#include "crag/http_client.hpp"

namespace crag {
namespace {

bool is_word_byte(unsigned char c) {
    // Non-ASCII bytes stay inside words so UTF-8 sequences are never split.
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

template <typename Fn>
void for_each_word(std::string_view text, Fn&& fn) {
    std::string word;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_word_byte(c)) {
            word.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!word.empty()) {
            fn(word);
            word.clear();
        }
    }
    if (!word.empty()) {
        fn(word);
    }
}

EmbeddingVector vector_from_json(const nlohmann::json& values) {
    if (!values.is_array()) {
        throw ContractError("embedding is not an array");
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& v : values) {
        if (!v.is_number()) {
            throw ContractError("embedding contains a non-numeric entry");
        }
        out.push_back(v.get<double>());
    }
    return EmbeddingVector(std::move(out));
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
        throw ContractError("embedding vector must have positive dimension");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw ContractError("embedding vector has a non-finite entry");
        }
    }
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) {
        throw ContractError("dot: dimension mismatch (" + std::to_string(a.dimension()) + " vs " +
                            std::to_string(b.dimension()) + ")");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.dimension(); ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double l2_norm(const EmbeddingVector& v) {
    double sum = 0.0;
    for (double x : v.values()) {
        sum += x * x;
    }
    return std::sqrt(sum);
}

std::string to_string(EmbedderKind kind) {
    switch (kind) {
        case EmbedderKind::deterministic_test:
            return "deterministic-test";
        case EmbedderKind::remote_endpoint:
            return "remote-endpoint";
    }
    return "unknown";
}

EmbedderKind embedder_kind_from_string(std::string_view name) {
    if (name == "deterministic-test") {
        return EmbedderKind::deterministic_test;
    }
    if (name == "remote-endpoint") {
        return EmbedderKind::remote_endpoint;
    }
    throw ConfigError("unknown embedder kind '" + std::string(name) + "'");
}

EmbeddingVector deterministic_test_embed(std::string_view text, std::uint64_t seed, std::size_t dimension) {
    if (dimension < 2) {
        throw ContractError("deterministic_test_embed: dimension must be at least 2");
    }
    std::vector<double> acc(dimension, 0.0);
    for_each_word(text, [&](const std::string& word) {
        const std::uint64_t h = splitmix64(Fnv1a{}.update(seed).field(word).digest());
        const std::size_t coordinate = static_cast<std::size_t>(h % dimension);
        acc[coordinate] += (h >> 63) != 0 ? -1.0 : 1.0;
    });
    double norm_sq = 0.0;
    for (double v : acc) {
        norm_sq += v * v;
    }
    if (norm_sq == 0.0) {
        acc[0] = 1.0;
        return EmbeddingVector(std::move(acc));
    }
    const double norm = std::sqrt(norm_sq);
    for (double& v : acc) {
        v /= norm;
    }
    return EmbeddingVector(std::move(acc));
}

DeterministicEmbedder::DeterministicEmbedder(std::uint64_t seed, std::size_t dimension)
    : seed_(seed), dimension_(dimension) {
    if (dimension < 2) {
        throw ConfigError("embedder dimension must be at least 2");
    }
}

std::vector<EmbeddingVector> DeterministicEmbedder::embed(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const std::string& text : texts) {
        out.push_back(deterministic_test_embed(text, seed_, dimension_));
    }
    return out;
}

RemoteEmbedder::RemoteEmbedder(EmbedderConfig config) : config_(std::move(config)) {
    if (config_.dimension < 2) {
        throw ConfigError("embedder dimension must be at least 2");
    }
    if (config_.endpoint.empty()) {
        throw ConfigError("remote embedder needs an endpoint");
    }
    if (config_.batch_size == 0) {
        config_.batch_size = 1;
    }
}

std::vector<EmbeddingVector> RemoteEmbedder::embed(std::span<const std::string> texts) const {
    const std::size_t batches = (texts.size() + config_.batch_size - 1) / config_.batch_size;
    std::vector<std::vector<EmbeddingVector>> results(batches);
    parallel_for_bounded(batches, config_.parallelism, [&](std::size_t b) {
        const std::size_t begin = b * config_.batch_size;
        const std::size_t len = std::min(config_.batch_size, texts.size() - begin);
        results[b] = embed_batch(texts.subspan(begin, len));
    });
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (auto& batch : results) {
        for (auto& v : batch) {
            out.push_back(std::move(v));
        }
    }
    return out;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(std::span<const std::string> texts) const {
    nlohmann::json request;
    request["model"] = config_.model;
    request["input"] = std::vector<std::string>(texts.begin(), texts.end());
    const std::string body = request.dump();

    std::vector<std::pair<std::string, std::string>> headers;
    if (const std::string token = env_or_empty(config_.auth_env); !token.empty()) {
        headers.emplace_back("Authorization", "Bearer " + token);
    }

    const HttpResponse response = with_retries(config_.retry, "embedding request", [&](int) {
        return post_json(config_.endpoint, body, headers, config_.timeout);
    });
    if (response.status != 200) {
        throw TransportError("embedding endpoint returned HTTP " + std::to_string(response.status), 1);
    }

    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(response.body);
    } catch (const nlohmann::json::exception& e) {
        throw ContractError(std::string("embedding endpoint returned invalid JSON: ") + e.what());
    }

    std::vector<EmbeddingVector> out;
    if (parsed.contains("embeddings")) {
        for (const auto& v : parsed.at("embeddings")) {
            out.push_back(vector_from_json(v));
        }
    } else if (parsed.contains("data")) {
        for (const auto& item : parsed.at("data")) {
            out.push_back(vector_from_json(item.at("embedding")));
        }
    } else {
        throw ContractError("embedding response has neither 'embeddings' nor 'data'");
    }
    if (out.size() != texts.size()) {
        throw ContractError("embedding endpoint returned " + std::to_string(out.size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");
    }
    for (const auto& v : out) {
        if (v.dimension() != config_.dimension) {
            throw ContractError("embedding endpoint returned dimension " + std::to_string(v.dimension()) +
                                ", configured " + std::to_string(config_.dimension));
        }
    }
    return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config) {
    switch (config.kind) {
        case EmbedderKind::deterministic_test:
            return std::make_unique<DeterministicEmbedder>(config.seed, config.dimension);
        case EmbedderKind::remote_endpoint:
            return std::make_unique<RemoteEmbedder>(config);
    }
    throw ConfigError("unknown embedder kind");
}

std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts, const EmbedderConfig& config) {
    if (texts.empty()) {
        return {};
    }
    return make_embedder(config)->embed(texts);
}

// --- vector store -----------------------------------------------------------

namespace {

std::string encode_record(const std::string& product_id, const std::string& text, const EmbeddingVector& v) {
    nlohmann::ordered_json record;
    record["product_id"] = product_id;
    record["text"] = text;
    record["dimension"] = v.dimension();
    record["values"] = std::vector<double>(v.values().begin(), v.values().end());
    return record.dump() + "\n";
}

VectorRecord decode_record(const std::string& line, std::size_t line_number, const std::string& path) {
    const auto fail = [&](const std::string& why) {
        return StorageError(path + ":" + std::to_string(line_number) + ": " + why, line_number);
    };
    nlohmann::json record;
    try {
        record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        throw fail("corrupt vector record");
    }
    try {
        const auto dimension = record.at("dimension").get<std::size_t>();
        std::vector<double> values = record.at("values").get<std::vector<double>>();
        if (values.size() != dimension) {
            throw fail("vector record declares dimension " + std::to_string(dimension) + " but has " +
                       std::to_string(values.size()) + " values");
        }
        return VectorRecord{record.at("product_id").get<std::string>(), record.at("text").get<std::string>(),
                            EmbeddingVector(std::move(values))};
    } catch (const nlohmann::json::exception&) {
        throw fail("vector record has missing or mistyped fields");
    } catch (const ContractError& e) {
        throw fail(e.what());
    }
}

template <typename Fn>
void scan_store(const std::filesystem::path& path, Fn&& fn) {
    const std::string content = read_file(path);
    std::size_t line_number = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        ++line_number;
        const auto end = content.find('\n', pos);
        if (end == std::string::npos) {
            throw StorageError(path.string() + ":" + std::to_string(line_number) + ": truncated vector record",
                               line_number);
        }
        const std::string line = content.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) {
            continue;
        }
        fn(decode_record(line, line_number, path.string()));
    }
}

void check_uniform(std::span<const EmbeddingVector> vectors) {
    for (const auto& v : vectors) {
        if (v.dimension() != vectors.front().dimension()) {
            throw ContractError("vectors must share one dimension");
        }
    }
}

}  // namespace

void write_vector_store(const std::filesystem::path& path, std::span<const VectorRecord> records) {
    std::string content;
    for (const auto& r : records) {
        content += encode_record(r.product_id, r.text, r.vector);
    }
    write_file_atomically(path, content);
}

std::vector<VectorRecord> read_vector_store(const std::filesystem::path& path) {
    std::vector<VectorRecord> records;
    scan_store(path, [&](VectorRecord r) { records.push_back(std::move(r)); });
    return records;
}

void save_vectors(const std::filesystem::path& path, const std::string& product_id,
                  std::span<const std::string> texts, std::span<const EmbeddingVector> vectors) {
    if (texts.size() != vectors.size()) {
        throw ContractError("save_vectors: texts and vectors differ in length");
    }
    check_uniform(vectors);
    std::string content;
    if (std::filesystem::exists(path)) {
        scan_store(path, [&](const VectorRecord& r) {
            if (r.product_id != product_id) {
                content += encode_record(r.product_id, r.text, r.vector);
            }
        });
    }
    for (std::size_t i = 0; i < texts.size(); ++i) {
        content += encode_record(product_id, texts[i], vectors[i]);
    }
    write_file_atomically(path, content);
}

LoadedVectors load_vectors(const std::filesystem::path& path, const std::string& product_id) {
    LoadedVectors out;
    scan_store(path, [&](VectorRecord r) {
        if (r.product_id == product_id) {
            out.texts.push_back(std::move(r.text));
            out.vectors.push_back(std::move(r.vector));
        }
    });
    return out;
}

}  // namespace crag
