// SPDX-License-Identifier: Apache-2.0

#include "crag/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "crag/csv.hpp"
#include "crag/errors.hpp"

namespace crag {
namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

template <typename T>
std::optional<T> parse_number(std::string_view cell) {
    const std::string trimmed = trim(cell);
    if (trimmed.empty()) {
        return std::nullopt;
    }
    T value{};
    const char* first = trimmed.data();
    const char* last = first + trimmed.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        return std::nullopt;
    }
    return value;
}

std::optional<int> parse_rating(std::string_view cell) {
    auto value = parse_number<int>(cell);
    if (!value) {
        // Some exports write ratings as "4.0".
        const auto real = parse_number<double>(cell);
        if (real && *real >= 1.0 && *real <= 5.0 && *real == static_cast<int>(*real)) {
            value = static_cast<int>(*real);
        }
    }
    if (value && *value >= 1 && *value <= 5) {
        return value;
    }
    return std::nullopt;
}

std::optional<std::int64_t> parse_votes(std::string_view cell) {
    auto value = parse_number<std::int64_t>(cell);
    if (value && *value >= 0) {
        return value;
    }
    return std::nullopt;
}

struct ColumnIndex {
    std::optional<std::size_t> product, brand, price, rating, review, votes;
};

std::optional<std::size_t> locate(const std::vector<std::string>& header, const std::string& name) {
    if (name.empty()) {
        return std::nullopt;
    }
    const auto it = std::find_if(header.begin(), header.end(),
                                 [&](const std::string& h) { return trim(h) == name; });
    if (it == header.end()) {
        throw SchemaError(name, "csv header is missing mapped column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

std::string_view cell(const std::vector<std::string>& row, const std::optional<std::size_t>& index) {
    if (!index || *index >= row.size()) {
        return {};
    }
    return row[*index];
}

}  // namespace

std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && is_space(text[begin])) {
        ++begin;
    }
    while (end > begin && is_space(text[end - 1])) {
        --end;
    }
    return std::string(text.substr(begin, end - begin));
}

ParseResult parse_reviews(std::istream& source, const ColumnMapping& mapping) {
    if (mapping.product.empty()) {
        throw SchemaError("product", "column mapping must name the product column");
    }
    if (mapping.review.empty()) {
        throw SchemaError("review", "column mapping must name the review column");
    }
    if (!source) {
        throw InputError("review source is not readable");
    }

    CsvReader reader(source);
    std::vector<std::string> row;
    ParseResult result;
    if (!reader.next(row)) {
        return result;
    }

    ColumnIndex columns;
    columns.product = locate(row, mapping.product);
    columns.brand = locate(row, mapping.brand);
    columns.price = locate(row, mapping.price);
    columns.rating = locate(row, mapping.rating);
    columns.review = locate(row, mapping.review);
    columns.votes = locate(row, mapping.votes);

    std::size_t ordinal = 0;
    while (reader.next(row)) {
        const std::size_t index = ordinal++;
        std::string text = trim(cell(row, columns.review));
        std::string product = trim(cell(row, columns.product));
        if (text.empty() || product.empty()) {
            ++result.skipped;
            continue;
        }
        Review review;
        review.product_id = std::move(product);
        review.text = std::move(text);
        review.rating = parse_rating(cell(row, columns.rating));
        review.votes = parse_votes(cell(row, columns.votes));
        review.brand = trim(cell(row, columns.brand));
        review.price = parse_number<double>(cell(row, columns.price));
        review.source_index = index;
        result.reviews.push_back(std::move(review));
    }
    return result;
}

std::vector<ProductGroup> group_by_product(std::span<const Review> reviews) {
    std::vector<ProductGroup> groups;
    std::unordered_map<std::string, std::size_t> slot;
    for (const Review& review : reviews) {
        const auto [it, inserted] = slot.try_emplace(review.product_id, groups.size());
        if (inserted) {
            groups.push_back(ProductGroup{review.product_id, {}});
        }
        groups[it->second].reviews.push_back(review);
    }
    for (ProductGroup& group : groups) {
        std::stable_sort(group.reviews.begin(), group.reviews.end(),
                         [](const Review& a, const Review& b) { return a.source_index < b.source_index; });
    }
    return groups;
}

std::vector<ProductGroup> filter_min_reviews(std::span<const ProductGroup> groups, std::size_t min_count) {
    if (min_count < 1) {
        throw ContractError("filter_min_reviews: min_count must be at least 1");
    }
    std::vector<ProductGroup> kept;
    std::copy_if(groups.begin(), groups.end(), std::back_inserter(kept),
                 [&](const ProductGroup& g) { return g.reviews.size() >= min_count; });
    return kept;
}

std::vector<ProductGroup> dedup_exact(std::span<const ProductGroup> groups) {
    std::vector<ProductGroup> out;
    out.reserve(groups.size());
    for (const ProductGroup& group : groups) {
        ProductGroup copy{group.product_id, {}};
        std::unordered_set<std::string> seen;
        for (const Review& review : group.reviews) {
            if (seen.insert(review.text).second) {
                copy.reviews.push_back(review);
            }
        }
        out.push_back(std::move(copy));
    }
    return out;
}

CorpusStats corpus_stats(std::span<const ProductGroup> groups) {
    CorpusStats stats;
    std::unordered_set<std::string> unique_texts;
    for (const ProductGroup& group : groups) {
        ++stats.product_count;
        stats.review_count += group.reviews.size();
        stats.max_reviews_single_product = std::max(stats.max_reviews_single_product, group.reviews.size());
        for (const Review& review : group.reviews) {
            unique_texts.insert(trim(review.text));
        }
    }
    stats.unique_review_count = unique_texts.size();
    if (stats.product_count > 0) {
        stats.mean_reviews_per_product =
            static_cast<double>(stats.review_count) / static_cast<double>(stats.product_count);
    }
    return stats;
}

}  // namespace crag
