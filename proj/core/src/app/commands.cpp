// SPDX-License-Identifier: Apache-2.0

#include "crag/app/commands.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "crag/app/answer.hpp"
#include "crag/concurrency.hpp"
#include "crag/errors.hpp"
#include "crag/evaluation.hpp"
#include "crag/fileio.hpp"
#include "crag/hashing.hpp"
#include "crag/knowledge_store.hpp"

namespace crag::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

fs::path stamp_path(const fs::path& artifact) {
    fs::path p = artifact;
    p += ".stamp";
    return p;
}

bool stamp_matches(const fs::path& artifact, const std::string& fingerprint) {
    const auto stamp = stamp_path(artifact);
    if (!fs::exists(artifact) || !fs::exists(stamp)) {
        return false;
    }
    return read_file(stamp) == fingerprint + "\n";
}

void write_stamp(const fs::path& artifact, const std::string& fingerprint) {
    write_file_atomically(stamp_path(artifact), fingerprint + "\n");
}

std::string file_hash(const fs::path& path) {
    Fnv1a h;
    h.field(read_file(path));
    return to_hex(h.digest());
}

std::vector<ProductGroup> require_reviews(const AppConfig& config) {
    const auto path = config.resolve(config.paths.reviews);
    if (!fs::exists(path)) {
        throw StageError("ingest", "reviews artifact '" + path.string() + "' is missing; run `crag ingest` first");
    }
    return read_reviews_artifact(path);
}

std::string embedder_description(const EmbedderConfig& e) {
    if (e.kind == EmbedderKind::deterministic_test) {
        return fmt::format("{}/{}/seed={}", to_string(e.kind), e.dimension, e.seed);
    }
    return fmt::format("{}/{}/{}@{}", to_string(e.kind), e.dimension, e.model, e.endpoint);
}

const BackendConfig& backend_config(const AppConfig& config, const std::string& id) {
    for (const auto& b : config.backends) {
        if (b.id == id) {
            return b;
        }
    }
    throw ConfigError("backend '" + id + "' is not configured");
}

/// Settings that change CRAG output but have no field of their own in the fingerprint.
std::string crag_settings_hash(const AppConfig& config) {
    Fnv1a h;
    h.field(config.oneshot.question).field(config.oneshot.answer);
    h.update(static_cast<std::uint64_t>(config.pipeline.clustering.max_iterations));
    h.update(static_cast<std::uint64_t>(config.pipeline.clustering.restarts));
    h.update(static_cast<std::uint64_t>(config.pipeline.elbow_k_min));
    h.update(static_cast<std::uint64_t>(config.pipeline.elbow_k_max));
    return to_hex(h.digest()).substr(0, 8);
}

std::string vectors_hash(const LoadedVectors& loaded) {
    Fnv1a h;
    for (const auto& v : loaded.vectors) {
        for (double x : v.values()) {
            h.field(fmt::format("{}", x));
        }
    }
    return to_hex(h.digest()).substr(0, 8);
}

CragOptions crag_options(const AppConfig& config) {
    CragOptions options;
    options.clustering = config.pipeline.clustering;
    options.summarizer_model = config.summarizer;
    options.example = config.oneshot;
    options.per_product_elbow = config.pipeline.per_product_elbow;
    options.elbow_k_min = config.pipeline.elbow_k_min;
    options.elbow_k_max = config.pipeline.elbow_k_max;
    options.backend_descriptor =
        backend_config(config, config.summarizer).descriptor() + "#" + crag_settings_hash(config);
    return options;
}

std::map<std::string, LoadedVectors> require_vectors(const AppConfig& config, std::span<const ProductGroup> groups) {
    const auto path = config.resolve(config.paths.vectors);
    if (!fs::exists(path)) {
        throw StageError("embed", "vector store '" + path.string() + "' is missing; run `crag embed` first");
    }
    std::map<std::string, LoadedVectors> by_product;
    for (auto& record : read_vector_store(path)) {
        auto& slot = by_product[record.product_id];
        slot.texts.push_back(std::move(record.text));
        slot.vectors.push_back(std::move(record.vector));
    }
    for (const auto& group : groups) {
        const auto it = by_product.find(group.product_id);
        bool current = it != by_product.end() && it->second.texts.size() == group.reviews.size();
        for (std::size_t i = 0; current && i < group.reviews.size(); ++i) {
            current = it->second.texts[i] == group.reviews[i].text;
        }
        if (!current) {
            throw StageError("embed", "vectors for product '" + group.product_id +
                                          "' are missing or out of date; run `crag embed` first");
        }
    }
    return by_product;
}

std::string describe_error(const std::exception_ptr& error) {
    try {
        std::rethrow_exception(error);
    } catch (const std::exception& e) {
        return e.what();
    } catch (...) {
        return "unknown error";
    }
}

}  // namespace

void write_reviews_artifact(const fs::path& path, std::span<const ProductGroup> groups) {
    std::string content;
    for (const auto& group : groups) {
        for (const auto& r : group.reviews) {
            ordered_json j;
            j["product_id"] = r.product_id;
            j["text"] = r.text;
            j["rating"] = r.rating ? ordered_json(*r.rating) : ordered_json(nullptr);
            j["votes"] = r.votes ? ordered_json(*r.votes) : ordered_json(nullptr);
            j["source_index"] = r.source_index;
            j["brand"] = r.brand;
            j["price"] = r.price ? ordered_json(*r.price) : ordered_json(nullptr);
            content += j.dump();
            content += '\n';
        }
    }
    write_file_atomically(path, content);
}

std::vector<ProductGroup> read_reviews_artifact(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::vector<Review> reviews;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            Review r;
            r.product_id = j.at("product_id").get<std::string>();
            r.text = j.at("text").get<std::string>();
            if (!j.at("rating").is_null()) {
                r.rating = j.at("rating").get<int>();
            }
            if (!j.at("votes").is_null()) {
                r.votes = j.at("votes").get<std::int64_t>();
            }
            r.source_index = j.at("source_index").get<std::size_t>();
            r.brand = j.at("brand").get<std::string>();
            if (!j.at("price").is_null()) {
                r.price = j.at("price").get<double>();
            }
            reviews.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw StorageError(fmt::format("{}:{}: corrupt review record: {}", path.string(), line_number, e.what()),
                               line_number);
        }
    }
    return group_by_product(reviews);
}

std::vector<std::string> read_questions(const fs::path& path) {
    if (!fs::exists(path)) {
        throw InputError("questions file '" + path.string() + "' does not exist");
    }
    std::istringstream in(read_file(path));
    std::vector<std::string> questions;
    std::string line;
    while (std::getline(in, line)) {
        auto q = trim(line);
        if (!q.empty()) {
            questions.push_back(std::move(q));
        }
    }
    if (questions.empty()) {
        throw InputError("questions file '" + path.string() + "' has no questions");
    }
    return questions;
}

IngestSummary cmd_ingest(const AppConfig& config, const CommandIo& io) {
    if (config.paths.corpus_csv.empty()) {
        throw ConfigError("paths.corpus_csv is not set");
    }
    const auto corpus = config.resolve(config.paths.corpus_csv);
    if (!fs::exists(corpus)) {
        throw InputError("corpus file '" + corpus.string() + "' does not exist");
    }
    const auto artifact = config.resolve(config.paths.reviews);

    const auto& m = config.ingest.columns;
    Fnv1a h;
    h.field(file_hash(corpus));
    for (const auto* name : {&m.product, &m.brand, &m.price, &m.rating, &m.review, &m.votes}) {
        h.field(*name);
    }
    h.update(static_cast<std::uint64_t>(config.ingest.min_reviews));
    h.update(static_cast<std::uint64_t>(config.ingest.dedup ? 1 : 0));
    const std::string fingerprint = to_hex(h.digest());

    IngestSummary summary;
    std::vector<ProductGroup> groups;
    if (!io.force && stamp_matches(artifact, fingerprint)) {
        groups = read_reviews_artifact(artifact);
        summary.up_to_date = true;
        io.err << "ingest: " << artifact.string() << " is up to date\n";
    } else {
        std::ifstream in(corpus, std::ios::binary);
        if (!in) {
            throw InputError("cannot open corpus file '" + corpus.string() + "'");
        }
        const ParseResult parsed = parse_reviews(in, m);
        groups = group_by_product(parsed.reviews);
        if (config.ingest.dedup) {
            groups = dedup_exact(groups);
        }
        groups = filter_min_reviews(groups, config.ingest.min_reviews);
        write_reviews_artifact(artifact, groups);
        write_stamp(artifact, fingerprint);
        summary.skipped_rows = parsed.skipped;
        if (parsed.skipped > 0) {
            io.err << "ingest: skipped " << parsed.skipped << " rows with an empty product or review\n";
        }
    }
    summary.stats = corpus_stats(groups);
    const auto& s = summary.stats;
    io.out << fmt::format("products: {}\nreviews: {}\nunique reviews: {}\nmean reviews per product: {:.2f}\n"
                          "max reviews per product: {}\n",
                          s.product_count, s.review_count, s.unique_review_count, s.mean_reviews_per_product,
                          s.max_reviews_single_product);
    return summary;
}

EmbedSummary cmd_embed(const AppConfig& config, const CommandIo& io) {
    const auto groups = require_reviews(config);
    const auto reviews = config.resolve(config.paths.reviews);
    const auto artifact = config.resolve(config.paths.vectors);

    Fnv1a h;
    h.field(file_hash(reviews)).field(embedder_description(config.embedder));
    const std::string fingerprint = to_hex(h.digest());

    EmbedSummary summary;
    summary.products = groups.size();
    for (const auto& g : groups) {
        summary.vectors += g.reviews.size();
    }
    if (!io.force && stamp_matches(artifact, fingerprint)) {
        summary.up_to_date = true;
        io.err << "embed: " << artifact.string() << " is up to date\n";
    } else {
        const auto embedder = make_embedder(config.embedder);
        std::vector<VectorRecord> records;
        for (const auto& group : groups) {
            std::vector<std::string> texts;
            for (const auto& r : group.reviews) {
                texts.push_back(r.text);
            }
            auto vectors = embedder->embed(texts);
            for (std::size_t i = 0; i < texts.size(); ++i) {
                records.push_back(VectorRecord{group.product_id, texts[i], std::move(vectors[i])});
            }
        }
        write_vector_store(artifact, records);
        write_stamp(artifact, fingerprint);
    }
    io.out << fmt::format("embedded {} reviews across {} products\n", summary.vectors, summary.products);
    return summary;
}

BuildSummary cmd_build(const AppConfig& config, Method method, const CommandIo& io) {
    const auto groups = require_reviews(config);
    KnowledgeStore store(config.resolve(config.paths.knowledge));

    std::map<std::string, LoadedVectors> vectors;
    std::shared_ptr<Gateway> gateway;
    CragOptions options;
    if (method == Method::crag) {
        vectors = require_vectors(config, groups);
        gateway = make_gateway(config);
        options = crag_options(config);
    }

    auto expected_fingerprint = [&](const ProductGroup& group) {
        if (method == Method::rag) {
            return BuildFingerprint{0, 0, "", "", input_hash(group), false};
        }
        return BuildFingerprint{options.clustering.k,
                                options.clustering.seed,
                                embedder_description(config.embedder) + ":" + vectors_hash(vectors.at(group.product_id)),
                                options.backend_descriptor,
                                input_hash(group),
                                options.per_product_elbow};
    };

    std::vector<std::size_t> todo;
    BuildSummary summary;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto existing = store.find(groups[i].product_id, method);
        if (!io.force && existing && existing->created_with == expected_fingerprint(groups[i])) {
            ++summary.skipped;
        } else {
            todo.push_back(i);
        }
    }

    std::vector<std::optional<KnowledgeDocument>> built(todo.size());
    std::vector<std::exception_ptr> errors(todo.size());
    parallel_for_bounded(todo.size(), std::max<std::size_t>(1, config.pipeline.parallel_products), [&](std::size_t t) {
        const auto& group = groups[todo[t]];
        try {
            if (method == Method::rag) {
                built[t] = build_rag_knowledge(group);
            } else {
                CragOptions per_product = options;
                per_product.embedder_id = expected_fingerprint(group).embedder;
                built[t] = build_crag_knowledge(group, vectors.at(group.product_id).vectors, per_product, *gateway);
            }
        } catch (...) {
            errors[t] = std::current_exception();
        }
    });

    for (std::size_t t = 0; t < todo.size(); ++t) {
        const auto& product = groups[todo[t]].product_id;
        if (errors[t]) {
            summary.failed.push_back(product);
            io.err << "build: " << describe_error(errors[t]) << "\n";
            continue;
        }
        store.put(*built[t]);
        ++summary.rebuilt;
    }
    io.out << fmt::format("{}: rebuilt {}, skipped {}, failed {}\n", to_string(method), summary.rebuilt,
                          summary.skipped, summary.failed.size());
    return summary;
}

EvaluateSummary cmd_evaluate(const AppConfig& config, const fs::path& questions_file, const CommandIo& io) {
    const auto groups = require_reviews(config);
    const auto questions = read_questions(questions_file);
    const auto knowledge = config.resolve(config.paths.knowledge);
    const KnowledgeStore store(knowledge);

    std::vector<std::pair<KnowledgeDocument, KnowledgeDocument>> docs;
    for (const auto& group : groups) {
        auto crag_doc = store.find(group.product_id, Method::crag);
        if (!crag_doc) {
            throw StageError("build --method crag", "no CRAG document for product '" + group.product_id +
                                                        "'; run `crag build --method crag` first");
        }
        auto rag_doc = store.find(group.product_id, Method::rag);
        if (!rag_doc) {
            throw StageError("build --method rag", "no RAG document for product '" + group.product_id +
                                                       "'; run `crag build --method rag` first");
        }
        docs.emplace_back(std::move(*crag_doc), std::move(*rag_doc));
    }

    const auto report = config.resolve(config.paths.report);
    Fnv1a h;
    h.field(file_hash(config.resolve(config.paths.reviews))).field(file_hash(knowledge));
    for (const auto& q : questions) {
        h.field(q);
    }
    for (const auto& m : config.qa_models) {
        h.field(backend_config(config, m).descriptor());
    }
    for (const auto& t : config.tokenizers) {
        h.field(t.id);
        for (const auto& [key, value] : t.parameters) {
            h.field(key).field(value);
        }
    }
    h.field(embedder_description(config.embedder));
    h.update(static_cast<std::uint64_t>(config.report_format == ReportFormat::csv ? 1 : 0));
    const std::string fingerprint = to_hex(h.digest());

    EvaluateSummary summary;
    summary.products = groups.size();
    if (!io.force && stamp_matches(report, fingerprint)) {
        summary.up_to_date = true;
        io.err << "evaluate: " << report.string() << " is up to date\n";
        io.out << read_file(report);
        return summary;
    }

    const auto gateway = make_gateway(config);
    const auto embedder = make_embedder(config.embedder);
    const auto tokenizers = make_tokenizers(config);
    std::vector<EvaluationRow> rows;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        rows.push_back(evaluate_product(groups[i], docs[i].first, docs[i].second, questions, config.qa_models,
                                        *gateway, *embedder, tokenizers));
    }
    const std::string text = render_report(rows, config.qa_models, config.report_format);
    write_file_atomically(report, text);
    write_stamp(report, fingerprint);
    io.out << text;
    return summary;
}

ElbowCurve cmd_elbow(const AppConfig& config, const std::string& product_id, const CommandIo& io) {
    const auto groups = require_reviews(config);
    const auto it = std::find_if(groups.begin(), groups.end(),
                                 [&](const ProductGroup& g) { return g.product_id == product_id; });
    if (it == groups.end()) {
        throw NotFoundError(NotFoundError::Missing::product, "unknown product '" + product_id + "'");
    }
    const auto vectors = require_vectors(config, std::span(&*it, 1));
    const auto& loaded = vectors.at(product_id);
    const std::size_t k_max = std::min(config.pipeline.elbow_k_max, loaded.vectors.size());
    const ElbowCurve curve =
        elbow_select_k(loaded.vectors, config.pipeline.elbow_k_min, k_max, config.pipeline.clustering);
    io.out << elbow_to_csv(curve);
    return curve;
}

void cmd_query(const AppConfig& config, std::istream& in, const CommandIo& io) {
    const auto knowledge = config.resolve(config.paths.knowledge);
    if (!fs::exists(knowledge)) {
        throw StageError("build", "knowledge store '" + knowledge.string() + "' is missing; run `crag build` first");
    }
    const KnowledgeStore store(knowledge);
    const auto gateway = make_gateway(config);
    const auto tokenizers = make_tokenizers(config);
    const AnswerContext context{store, *gateway, tokenizers, config.prices, config.service.clock};

    AskRequest request;
    const auto products = store.products();
    if (!products.empty()) {
        request.product_id = products.front();
    }
    request.model = config.qa_models.front();

    io.err << "crag> " << std::flush;
    std::string line;
    while (std::getline(in, line)) {
        const std::string input = trim(line);
        if (input.empty()) {
        } else if (input == ":quit" || input == ":q") {
            break;
        } else if (input == ":help") {
            io.out << ":products | :product ID | :method crag|rag | :model ID | :quit\n";
        } else if (input == ":products") {
            for (const auto& p : products) {
                io.out << (p == request.product_id ? "* " : "  ") << p << "\n";
            }
        } else if (input.starts_with(":product ")) {
            const std::string id = trim(input.substr(9));
            if (std::find(products.begin(), products.end(), id) == products.end()) {
                io.err << "unknown product '" << id << "'\n";
            } else {
                request.product_id = id;
            }
        } else if (input.starts_with(":method ")) {
            try {
                request.method = method_from_string(trim(input.substr(8)));
            } catch (const ContractError& e) {
                io.err << e.what() << "\n";
            }
        } else if (input.starts_with(":model ")) {
            const std::string id = trim(input.substr(7));
            if (!gateway->has_backend(id)) {
                io.err << "unknown model '" << id << "'\n";
            } else {
                request.model = id;
            }
        } else if (input.starts_with(":")) {
            io.err << "unknown command '" << input << "' (try :help)\n";
        } else {
            request.question = input;
            try {
                const AskResponse response = answer_question(request, context);
                io.out << response.answer << "\n"
                       << fmt::format("[{} {} via {}: {} prompt tokens, {} ms]\n", request.product_id,
                                      to_string(response.method), response.model, response.prompt_token_count,
                                      response.elapsed_ms);
            } catch (const Error& e) {
                io.err << e.what() << "\n";
            }
        }
        io.err << "crag> " << std::flush;
    }
}

}  // namespace crag::app
