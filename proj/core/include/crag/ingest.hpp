// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crag {

struct Review {
    std::string product_id;
    std::string text;
    std::optional<int> rating;            // 1..5 when parsable
    std::optional<std::int64_t> votes;    // >= 0 when parsable
    std::size_t source_index = 0;         // data-row ordinal in the source file

    // Carried through from the source but not used by the pipeline.
    std::string brand;
    std::optional<double> price;

    friend bool operator==(const Review&, const Review&) = default;
};

struct ProductGroup {
    std::string product_id;
    std::vector<Review> reviews;  // ascending source_index

    friend bool operator==(const ProductGroup&, const ProductGroup&) = default;
};

struct CorpusStats {
    std::size_t product_count = 0;
    std::size_t review_count = 0;
    std::size_t unique_review_count = 0;
    double mean_reviews_per_product = 0.0;
    std::size_t max_reviews_single_product = 0;

    friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

/// Header names for each review field. An empty name leaves that field unmapped;
/// `product` and `review` must always be mapped.
struct ColumnMapping {
    std::string product = "Product Name";
    std::string brand = "Brand Name";
    std::string price = "Price";
    std::string rating = "Rating";
    std::string review = "Reviews";
    std::string votes = "Review Votes";
};

struct ParseResult {
    std::vector<Review> reviews;
    std::size_t skipped = 0;  // data rows with an empty review or product cell
};

/// Parses a CSV whose first row is a header. Every non-empty name in `mapping`
/// must appear in the header, otherwise SchemaError names the missing column.
ParseResult parse_reviews(std::istream& source, const ColumnMapping& mapping = {});

/// Groups by product_id; groups appear in order of first appearance.
std::vector<ProductGroup> group_by_product(std::span<const Review> reviews);

/// Keeps groups with at least `min_count` reviews. Products with fewer reviews
/// fit any context window as-is, so they never need compression.
std::vector<ProductGroup> filter_min_reviews(std::span<const ProductGroup> groups, std::size_t min_count = 4);

/// Drops exact-duplicate review texts within each product, keeping the first occurrence.
std::vector<ProductGroup> dedup_exact(std::span<const ProductGroup> groups);

CorpusStats corpus_stats(std::span<const ProductGroup> groups);

/// Whitespace trim (ASCII space, tab, CR, LF, VT, FF).
std::string trim(std::string_view text);

}  // namespace crag
