// SPDX-License-Identifier: Apache-2.0

#include "crag/knowledge_store.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "crag/errors.hpp"
#include "crag/fileio.hpp"

namespace crag {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json encode(const KnowledgeDocument& doc) {
    ordered_json record;
    record["product_id"] = doc.product_id;
    record["method"] = to_string(doc.method);
    record["text"] = doc.text;
    ordered_json provenance = ordered_json::array();
    if (doc.method == Method::crag) {
        for (const auto& s : doc.summaries) {
            ordered_json item;
            item["cluster_index"] = s.cluster_index;
            item["summary_text"] = s.summary_text;
            item["source_review_count"] = s.source_review_count;
            item["source_indexes"] = s.source_indexes;
            provenance.push_back(std::move(item));
        }
    } else {
        provenance = doc.review_indexes;
    }
    record["provenance"] = std::move(provenance);
    ordered_json fingerprint;
    fingerprint["k"] = doc.created_with.k;
    fingerprint["seed"] = doc.created_with.seed;
    fingerprint["embedder"] = doc.created_with.embedder;
    fingerprint["backend_id"] = doc.created_with.backend_id;
    fingerprint["input_hash"] = doc.created_with.input_hash;
    fingerprint["per_product_elbow"] = doc.created_with.per_product_elbow;
    record["fingerprint"] = std::move(fingerprint);
    return record;
}

KnowledgeDocument decode(const std::string& line) {
    const auto record = nlohmann::json::parse(line);
    KnowledgeDocument doc;
    doc.product_id = record.at("product_id").get<std::string>();
    doc.method = method_from_string(record.at("method").get<std::string>());
    doc.text = record.at("text").get<std::string>();
    if (doc.method == Method::crag) {
        for (const auto& item : record.at("provenance")) {
            ClusterSummary s;
            s.product_id = doc.product_id;
            s.cluster_index = item.at("cluster_index").get<std::size_t>();
            s.summary_text = item.at("summary_text").get<std::string>();
            s.source_review_count = item.at("source_review_count").get<std::size_t>();
            s.source_indexes = item.at("source_indexes").get<std::vector<std::size_t>>();
            doc.summaries.push_back(std::move(s));
        }
    } else {
        doc.review_indexes = record.at("provenance").get<std::vector<std::size_t>>();
    }
    const auto& fp = record.at("fingerprint");
    doc.created_with.k = fp.at("k").get<std::size_t>();
    doc.created_with.seed = fp.at("seed").get<std::uint64_t>();
    doc.created_with.embedder = fp.at("embedder").get<std::string>();
    doc.created_with.backend_id = fp.at("backend_id").get<std::string>();
    doc.created_with.input_hash = fp.at("input_hash").get<std::string>();
    doc.created_with.per_product_elbow = fp.value("per_product_elbow", false);
    return doc;
}

/// Drops a torn (newline-less) final line from an append-only file.
void cut_torn_tail(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        return;
    }
    const std::string content = read_file(path);
    if (content.empty() || content.back() == '\n') {
        return;
    }
    const auto last_newline = content.rfind('\n');
    std::filesystem::resize_file(path, last_newline == std::string::npos ? 0 : last_newline + 1);
}

}  // namespace

KnowledgeStore::KnowledgeStore(std::filesystem::path path) : path_(std::move(path)) {
    load_index();
}

std::filesystem::path KnowledgeStore::index_path(const std::filesystem::path& path) {
    std::filesystem::path idx = path;
    idx += ".idx";
    return idx;
}

void KnowledgeStore::load_index() {
    index_.clear();
    product_order_.clear();
    committed_ = 0;
    const auto idx = index_path(path_);
    if (!std::filesystem::exists(idx)) {
        return;
    }
    const std::uint64_t data_size =
        std::filesystem::exists(path_) ? static_cast<std::uint64_t>(std::filesystem::file_size(path_)) : 0;
    const std::string content = read_file(idx);
    std::size_t pos = 0;
    std::size_t line_number = 0;
    while (pos < content.size()) {
        const auto end = content.find('\n', pos);
        if (end == std::string::npos) {
            break;  // torn index line: its record never committed
        }
        ++line_number;
        const std::string line = content.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) {
            continue;
        }
        try {
            const auto entry = nlohmann::json::parse(line);
            const std::string product = entry.at("product_id").get<std::string>();
            const Method method = method_from_string(entry.at("method").get<std::string>());
            const Entry e{entry.at("offset").get<std::uint64_t>(), entry.at("length").get<std::uint64_t>()};
            if (e.offset + e.length > data_size) {
                continue;
            }
            if (std::find(product_order_.begin(), product_order_.end(), product) == product_order_.end()) {
                product_order_.push_back(product);
            }
            index_[{product, method}] = e;
            committed_ = std::max(committed_, e.offset + e.length);
        } catch (const std::exception& e) {
            throw StorageError(idx.string() + ":" + std::to_string(line_number) + ": corrupt index entry: " + e.what(),
                               line_number);
        }
    }
}

void KnowledgeStore::put(const KnowledgeDocument& doc) {
    if (doc.product_id.empty()) {
        throw ContractError("knowledge document has no product id");
    }
    if (path_.has_parent_path()) {
        std::filesystem::create_directories(path_.parent_path());
    }
    if (std::filesystem::exists(path_) && std::filesystem::file_size(path_) > committed_) {
        std::filesystem::resize_file(path_, committed_);
    }
    const auto idx = index_path(path_);
    cut_torn_tail(idx);

    const std::string line = encode(doc).dump() + "\n";
    const Entry entry{committed_, line.size()};
    {
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
        out.flush();
        if (!out) {
            throw StorageError("append to '" + path_.string() + "' failed");
        }
    }
    ordered_json index_entry;
    index_entry["product_id"] = doc.product_id;
    index_entry["method"] = to_string(doc.method);
    index_entry["offset"] = entry.offset;
    index_entry["length"] = entry.length;
    {
        std::ofstream out(idx, std::ios::binary | std::ios::app);
        const std::string index_line = index_entry.dump() + "\n";
        out.write(index_line.data(), static_cast<std::streamsize>(index_line.size()));
        out.flush();
        if (!out) {
            throw StorageError("append to '" + idx.string() + "' failed");
        }
    }
    if (std::find(product_order_.begin(), product_order_.end(), doc.product_id) == product_order_.end()) {
        product_order_.push_back(doc.product_id);
    }
    index_[{doc.product_id, doc.method}] = entry;
    committed_ += entry.length;
}

KnowledgeDocument KnowledgeStore::read_record(const Entry& entry) const {
    std::ifstream in(path_, std::ios::binary);
    if (!in) {
        throw StorageError("cannot open '" + path_.string() + "'");
    }
    in.seekg(static_cast<std::streamoff>(entry.offset));
    std::string line(entry.length, '\0');
    in.read(line.data(), static_cast<std::streamsize>(entry.length));
    if (!in || line.empty() || line.back() != '\n') {
        throw StorageError("'" + path_.string() + "': truncated record at offset " + std::to_string(entry.offset));
    }
    line.pop_back();
    try {
        return decode(line);
    } catch (const std::exception& e) {
        throw StorageError("'" + path_.string() + "': corrupt record at offset " + std::to_string(entry.offset) +
                           ": " + e.what());
    }
}

std::optional<KnowledgeDocument> KnowledgeStore::find(const std::string& product_id, Method method) const {
    const auto it = index_.find({product_id, method});
    if (it == index_.end()) {
        return std::nullopt;
    }
    return read_record(it->second);
}

KnowledgeDocument KnowledgeStore::get(const std::string& product_id, Method method) const {
    if (auto doc = find(product_id, method)) {
        return *std::move(doc);
    }
    if (std::find(product_order_.begin(), product_order_.end(), product_id) == product_order_.end()) {
        throw NotFoundError(NotFoundError::Missing::product, "unknown product '" + product_id + "'");
    }
    throw NotFoundError(NotFoundError::Missing::method,
                        "no " + to_string(method) + " document for product '" + product_id + "'");
}

std::vector<std::string> KnowledgeStore::products() const {
    return product_order_;
}

std::vector<Method> KnowledgeStore::methods(const std::string& product_id) const {
    std::vector<Method> out;
    for (Method m : {Method::crag, Method::rag}) {
        if (index_.contains({product_id, m})) {
            out.push_back(m);
        }
    }
    return out;
}

bool KnowledgeStore::contains(const std::string& product_id, Method method) const {
    return index_.contains({product_id, method});
}

void store_knowledge(const KnowledgeDocument& doc, const std::filesystem::path& path) {
    KnowledgeStore(path).put(doc);
}

KnowledgeDocument load_knowledge(const std::filesystem::path& path, const std::string& product_id, Method method) {
    return KnowledgeStore(path).get(product_id, method);
}

}  // namespace crag
