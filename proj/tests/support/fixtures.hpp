// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "crag/embedding.hpp"
#include "crag/ingest.hpp"

namespace crag::testing {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(CRAG_FIXTURE_DIR) / name;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        const auto tag = std::to_string(rd()) + std::to_string(rd());
        path_ = std::filesystem::temp_directory_path() / ("crag-test-" + tag);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline ProductGroup make_group(const std::string& product, const std::vector<std::string>& texts) {
    ProductGroup group;
    group.product_id = product;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Review r;
        r.product_id = product;
        r.text = texts[i];
        r.source_index = i;
        group.reviews.push_back(r);
    }
    return group;
}

/// Four topics, two reviews each, no shared vocabulary between topics.
inline std::vector<std::string> four_topic_reviews() {
    return {
        "battery charge lasts days battery charge.",  "battery charge lasts days charge battery!",
        "screen display bright sharp screen display.", "screen display sharp bright display screen!",
        "shipping delivery late slow shipping delivery.", "shipping delivery slow late delivery shipping!",
        "camera photo grainy night camera photo.",   "camera photo night grainy photo camera!",
    };
}

inline const std::vector<std::string>& base_themes() {
    static const std::vector<std::string> themes{
        "The battery easily lasts two days on a single charge.",
        "The screen is bright and easy to read outdoors.",
        "Delivery took three weeks and the box arrived dented.",
        "Night photos are blurry and full of noise.",
    };
    return themes;
}

/// `count` reviews cycling through the four base themes. Every review keeps its theme's
/// first sentence and adds a varied second sentence, as repetitive real reviews do.
inline std::vector<std::string> synthetic_reviews(std::size_t count, std::uint64_t seed = 1) {
    static const std::vector<std::string> tails{
        "Would buy again.", "Not what I expected.", "My sister agrees.", "Fine for the price.",
        "Happened twice now.", "Still using it.", "Told my friends.", "Hard to ignore.",
    };
    std::mt19937_64 rng(seed);
    std::vector<std::string> reviews;
    for (std::size_t i = 0; i < count; ++i) {
        std::string text = base_themes()[i % base_themes().size()];
        if (i >= base_themes().size()) {
            text += " " + tails[rng() % tails.size()] + " Review number " + std::to_string(i) + ".";
        }
        reviews.push_back(std::move(text));
    }
    return reviews;
}

inline std::vector<EmbeddingVector> to_vectors(const std::vector<std::vector<double>>& points) {
    std::vector<EmbeddingVector> out;
    for (const auto& p : points) {
        out.emplace_back(p);
    }
    return out;
}

}  // namespace crag::testing
