// SPDX-License-Identifier: Apache-2.0

#include "crag/app/config.hpp"

#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "crag/errors.hpp"
#include "crag/fileio.hpp"

namespace crag::app {
namespace {

using nlohmann::json;

template <typename T>
void read_if(const json& node, const char* key, T& target) {
    if (node.contains(key)) {
        try {
            target = node.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(fmt::format("config field '{}': {}", key, e.what()));
        }
    }
}

void read_path(const json& node, const char* key, std::filesystem::path& target) {
    std::string value;
    bool present = node.contains(key);
    read_if(node, key, value);
    if (present) {
        target = value;
    }
}

void reject_unknown(const json& node, const std::set<std::string>& known, const std::string& where) {
    if (!node.is_object()) {
        throw ConfigError("config section '" + where + "' must be an object");
    }
    for (const auto& [key, value] : node.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown config key '" + where + (where.empty() ? "" : ".") + key + "'");
        }
    }
}

BackendConfig parse_backend(const json& node) {
    reject_unknown(node,
                   {"id", "kind", "budget", "endpoint", "model", "auth_env", "wrap_inst", "concurrency", "timeout_ms"},
                   "backends[]");
    BackendConfig backend;
    read_if(node, "id", backend.id);
    std::string kind = "mock";
    read_if(node, "kind", kind);
    if (kind == "mock") {
        backend.kind = BackendKind::mock;
    } else if (kind == "remote") {
        backend.kind = BackendKind::remote;
    } else {
        throw ConfigError("backend '" + backend.id + "': unknown kind '" + kind + "'");
    }
    read_if(node, "budget", backend.budget);
    read_if(node, "endpoint", backend.endpoint);
    read_if(node, "model", backend.model);
    read_if(node, "auth_env", backend.auth_env);
    read_if(node, "wrap_inst", backend.wrap_inst);
    read_if(node, "concurrency", backend.concurrency);
    std::int64_t timeout_ms = backend.timeout.count();
    read_if(node, "timeout_ms", timeout_ms);
    backend.timeout = std::chrono::milliseconds(timeout_ms);
    if (backend.id.empty()) {
        throw ConfigError("every backend needs an id");
    }
    return backend;
}

}  // namespace

std::string BackendConfig::descriptor() const {
    if (kind == BackendKind::mock) {
        return fmt::format("{}:mock(budget={})", id, budget);
    }
    return fmt::format("{}:remote({}@{}{})", id, model, endpoint, wrap_inst ? ",inst" : "");
}

std::filesystem::path AppConfig::resolve(const std::filesystem::path& p) const {
    if (p.empty() || p.is_absolute()) {
        return p;
    }
    return base_dir / p;
}

void AppConfig::validate() const {
    std::set<std::string> backend_ids;
    for (const auto& b : backends) {
        if (!backend_ids.insert(b.id).second) {
            throw ConfigError("duplicate backend id '" + b.id + "'");
        }
        if (b.kind == BackendKind::remote && b.endpoint.empty()) {
            throw ConfigError("remote backend '" + b.id + "' needs an endpoint");
        }
    }
    if (!backend_ids.contains(summarizer)) {
        throw ConfigError("summarizer backend '" + summarizer + "' is not configured");
    }
    if (qa_models.empty()) {
        throw ConfigError("at least one QA model is required");
    }
    for (const auto& model : qa_models) {
        if (!backend_ids.contains(model)) {
            throw ConfigError("QA model '" + model + "' is not a configured backend");
        }
    }
    if (tokenizers.empty()) {
        throw ConfigError("at least one tokenizer is required");
    }
    std::set<std::string> tokenizer_ids;
    for (const auto& t : tokenizers) {
        if (!tokenizer_ids.insert(t.id).second) {
            throw ConfigError("duplicate tokenizer id '" + t.id + "'");
        }
    }
    for (const auto& [model, price] : prices) {
        if (price < 0.0) {
            throw ConfigError("price for '" + model + "' is negative");
        }
    }
    const std::vector<std::filesystem::path> artifacts{
        resolve(paths.corpus_csv), resolve(paths.reviews), resolve(paths.vectors), resolve(paths.knowledge),
        std::filesystem::path(resolve(paths.knowledge).string() + ".idx"), resolve(paths.report)};
    std::set<std::string> seen;
    for (const auto& p : artifacts) {
        if (p.empty()) {
            continue;
        }
        if (!seen.insert(p.lexically_normal().string()).second) {
            throw ConfigError("artifact paths must be distinct; '" + p.string() + "' is used twice");
        }
    }
    if (pipeline.clustering.k == 0) {
        throw ConfigError("clustering.k must be at least 1");
    }
    if (ingest.min_reviews == 0) {
        throw ConfigError("ingest.min_reviews must be at least 1");
    }
}

AppConfig default_config() {
    AppConfig config;
    config.backends.push_back(BackendConfig{});
    config.backends.back().id = "mock";
    config.tokenizers.push_back(TokenizerConfig{"builtin", TokenizerKind::builtin_segmenter, {}});
    return config;
}

AppConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(root,
                   {"paths", "ingest", "embedder", "clustering", "backends", "summarizer", "qa_models", "oneshot",
                    "tokenizers", "prices", "report_format", "service", "retry"},
                   "");

    AppConfig config = default_config();
    config.base_dir = base_dir;

    if (root.contains("paths")) {
        const auto& node = root["paths"];
        reject_unknown(node, {"corpus_csv", "reviews", "vectors", "knowledge", "report"}, "paths");
        read_path(node, "corpus_csv", config.paths.corpus_csv);
        read_path(node, "reviews", config.paths.reviews);
        read_path(node, "vectors", config.paths.vectors);
        read_path(node, "knowledge", config.paths.knowledge);
        read_path(node, "report", config.paths.report);
    }
    if (root.contains("ingest")) {
        const auto& node = root["ingest"];
        reject_unknown(node, {"columns", "min_reviews", "dedup"}, "ingest");
        read_if(node, "min_reviews", config.ingest.min_reviews);
        read_if(node, "dedup", config.ingest.dedup);
        if (node.contains("columns")) {
            const auto& cols = node["columns"];
            reject_unknown(cols, {"product", "brand", "price", "rating", "review", "votes"}, "ingest.columns");
            auto& m = config.ingest.columns;
            read_if(cols, "product", m.product);
            read_if(cols, "brand", m.brand);
            read_if(cols, "price", m.price);
            read_if(cols, "rating", m.rating);
            read_if(cols, "review", m.review);
            read_if(cols, "votes", m.votes);
        }
    }
    if (root.contains("embedder")) {
        const auto& node = root["embedder"];
        reject_unknown(node,
                       {"kind", "dimension", "seed", "endpoint", "model", "auth_env", "parallelism", "batch_size",
                        "timeout_ms"},
                       "embedder");
        auto& e = config.embedder;
        std::string kind = to_string(e.kind);
        read_if(node, "kind", kind);
        e.kind = embedder_kind_from_string(kind);
        read_if(node, "dimension", e.dimension);
        read_if(node, "seed", e.seed);
        read_if(node, "endpoint", e.endpoint);
        read_if(node, "model", e.model);
        read_if(node, "auth_env", e.auth_env);
        read_if(node, "parallelism", e.parallelism);
        read_if(node, "batch_size", e.batch_size);
        std::int64_t timeout_ms = e.timeout.count();
        read_if(node, "timeout_ms", timeout_ms);
        e.timeout = std::chrono::milliseconds(timeout_ms);
        if (e.dimension < 2) {
            throw ConfigError("embedder.dimension must be at least 2");
        }
    }
    if (root.contains("clustering")) {
        const auto& node = root["clustering"];
        reject_unknown(node,
                       {"k", "seed", "max_iterations", "restarts", "per_product_elbow", "elbow_k_min", "elbow_k_max",
                        "parallel_products"},
                       "clustering");
        auto& p = config.pipeline;
        read_if(node, "k", p.clustering.k);
        read_if(node, "seed", p.clustering.seed);
        read_if(node, "max_iterations", p.clustering.max_iterations);
        read_if(node, "restarts", p.clustering.restarts);
        read_if(node, "per_product_elbow", p.per_product_elbow);
        read_if(node, "elbow_k_min", p.elbow_k_min);
        read_if(node, "elbow_k_max", p.elbow_k_max);
        read_if(node, "parallel_products", p.parallel_products);
    }
    if (root.contains("backends")) {
        config.backends.clear();
        for (const auto& node : root["backends"]) {
            config.backends.push_back(parse_backend(node));
        }
    }
    read_if(root, "summarizer", config.summarizer);
    read_if(root, "qa_models", config.qa_models);
    if (root.contains("oneshot")) {
        const auto& node = root["oneshot"];
        reject_unknown(node, {"question", "answer"}, "oneshot");
        read_if(node, "question", config.oneshot.question);
        read_if(node, "answer", config.oneshot.answer);
    }
    if (root.contains("tokenizers")) {
        config.tokenizers.clear();
        for (const auto& node : root["tokenizers"]) {
            reject_unknown(node, {"id", "kind", "parameters"}, "tokenizers[]");
            TokenizerConfig t;
            read_if(node, "id", t.id);
            std::string kind = "builtin";
            read_if(node, "kind", kind);
            if (kind == "builtin") {
                t.kind = TokenizerKind::builtin_segmenter;
            } else if (kind == "plugged") {
                t.kind = TokenizerKind::plugged;
            } else {
                throw ConfigError("tokenizer '" + t.id + "': unknown kind '" + kind + "'");
            }
            read_if(node, "parameters", t.parameters);
            if (t.id.empty()) {
                throw ConfigError("every tokenizer needs an id");
            }
            config.tokenizers.push_back(std::move(t));
        }
    }
    read_if(root, "prices", config.prices);
    if (root.contains("report_format")) {
        std::string format;
        read_if(root, "report_format", format);
        if (format == "markdown") {
            config.report_format = ReportFormat::markdown;
        } else if (format == "csv") {
            config.report_format = ReportFormat::csv;
        } else {
            throw ConfigError("report_format must be 'markdown' or 'csv'");
        }
    }
    if (root.contains("service")) {
        const auto& node = root["service"];
        reject_unknown(node, {"host", "port", "clock"}, "service");
        read_if(node, "host", config.service.host);
        read_if(node, "port", config.service.port);
        std::string clock = "steady";
        read_if(node, "clock", clock);
        if (clock == "steady") {
            config.service.clock = ClockMode::steady;
        } else if (clock == "frozen") {
            config.service.clock = ClockMode::frozen;
        } else {
            throw ConfigError("service.clock must be 'steady' or 'frozen'");
        }
    }
    if (root.contains("retry")) {
        const auto& node = root["retry"];
        reject_unknown(node, {"max_attempts", "initial_backoff_ms"}, "retry");
        read_if(node, "max_attempts", config.retry.max_attempts);
        std::int64_t backoff = config.retry.initial_backoff.count();
        read_if(node, "initial_backoff_ms", backoff);
        config.retry.initial_backoff = std::chrono::milliseconds(backoff);
        config.embedder.retry = config.retry;
    }

    config.validate();
    return config;
}

AppConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const StorageError&) {
        throw ConfigError("cannot read config file '" + path.string() + "'");
    }
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return parse_config(text, base);
}

void apply_seed(AppConfig& config, std::uint64_t seed) {
    config.pipeline.clustering.seed = seed;
    config.embedder.seed = seed;
}

std::shared_ptr<Gateway> make_gateway(const AppConfig& config) {
    auto gateway = std::make_shared<Gateway>(config.retry);
    for (const auto& b : config.backends) {
        if (b.kind == BackendKind::mock) {
            gateway->add_backend(std::make_shared<MockChatBackend>(b.id, b.budget), 0);
        } else {
            RemoteBackendConfig remote{b.id, b.endpoint, b.model, b.auth_env, b.wrap_inst, b.timeout};
            gateway->add_backend(std::make_shared<RemoteChatBackend>(std::move(remote)), b.concurrency);
        }
    }
    return gateway;
}

std::vector<TokenizerSpec> make_tokenizers(const AppConfig& config) {
    std::vector<TokenizerSpec> specs;
    for (const auto& t : config.tokenizers) {
        if (t.kind == TokenizerKind::builtin_segmenter) {
            specs.push_back(builtin_tokenizer(t.id));
        } else {
            specs.push_back(make_plugged_tokenizer(t.id, t.parameters));
        }
    }
    return specs;
}

}  // namespace crag::app
