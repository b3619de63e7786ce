// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crag/pipeline.hpp"

namespace crag {

/// Append-only document file plus an append-only index.
///
/// `<path>` holds one JSON record per line: product_id, method, text, provenance,
/// fingerprint. `<path>.idx` holds one JSON line per stored document mapping
/// (product_id, method) to the record's byte offset and length; the last entry for a
/// key wins. A record becomes visible only once its index line is written, so a crash
/// mid-write leaves the previous state intact; the torn tail is cut on the next write.
class KnowledgeStore {
public:
    explicit KnowledgeStore(std::filesystem::path path);

    static std::filesystem::path index_path(const std::filesystem::path& path);

    void put(const KnowledgeDocument& doc);

    /// Throws NotFoundError that tells an unknown product from a missing method.
    KnowledgeDocument get(const std::string& product_id, Method method) const;
    std::optional<KnowledgeDocument> find(const std::string& product_id, Method method) const;

    /// Products in order of first storage.
    std::vector<std::string> products() const;
    std::vector<Method> methods(const std::string& product_id) const;
    bool contains(const std::string& product_id, Method method) const;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    struct Entry {
        std::uint64_t offset = 0;
        std::uint64_t length = 0;
    };
    using Key = std::pair<std::string, Method>;

    void load_index();
    KnowledgeDocument read_record(const Entry& entry) const;

    std::filesystem::path path_;
    std::map<Key, Entry> index_;
    std::vector<std::string> product_order_;
    std::uint64_t committed_ = 0;
};

void store_knowledge(const KnowledgeDocument& doc, const std::filesystem::path& path);
KnowledgeDocument load_knowledge(const std::filesystem::path& path, const std::string& product_id, Method method);

}  // namespace crag
