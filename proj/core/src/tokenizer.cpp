// SPDX-License-Identifier: Apache-2.0

#include "crag/tokenizer.hpp"

#include <charconv>
#include <cmath>

#include <nlohmann/json.hpp>

#include "crag/errors.hpp"
#include "crag/http_client.hpp"
#include "crag/retry.hpp"

namespace crag {
namespace {

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_alnum(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

}  // namespace

std::vector<TokenSpan> segment(std::string_view text) {
    std::vector<TokenSpan> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space(c)) {
            ++i;
        } else if (is_alnum(c)) {
            const std::size_t start = i;
            while (i < text.size() && is_alnum(static_cast<unsigned char>(text[i]))) {
                ++i;
            }
            tokens.push_back({start, i});
        } else {
            tokens.push_back({i, i + 1});
            ++i;
        }
    }
    return tokens;
}

std::size_t count_builtin_tokens(std::string_view text) {
    std::size_t count = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space(c)) {
            ++i;
            continue;
        }
        ++count;
        if (is_alnum(c)) {
            while (i < text.size() && is_alnum(static_cast<unsigned char>(text[i]))) {
                ++i;
            }
        } else {
            ++i;
        }
    }
    return count;
}

TokenizerSpec builtin_tokenizer(std::string id) {
    return TokenizerSpec{std::move(id), TokenizerKind::builtin_segmenter, {}, {}};
}

TokenizerSpec plugged_tokenizer(std::string id, std::function<std::size_t(std::string_view)> counter) {
    return TokenizerSpec{std::move(id), TokenizerKind::plugged, {}, std::move(counter)};
}

TokenizerSpec make_plugged_tokenizer(std::string id, std::map<std::string, std::string> parameters) {
    TokenizerSpec spec{std::move(id), TokenizerKind::plugged, std::move(parameters), {}};
    const auto type = spec.parameters.find("type");
    if (type == spec.parameters.end()) {
        return spec;
    }
    if (type->second == "chars-per-token") {
        double ratio = 4.0;
        if (const auto it = spec.parameters.find("ratio"); it != spec.parameters.end()) {
            const auto& s = it->second;
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), ratio);
            if (ec != std::errc{} || ptr != s.data() + s.size() || !(ratio > 0.0)) {
                throw ConfigError("tokenizer '" + spec.id + "': ratio must be a positive number");
            }
        }
        spec.counter = [ratio](std::string_view text) {
            return static_cast<std::size_t>(std::ceil(static_cast<double>(text.size()) / ratio));
        };
    } else if (type->second == "http") {
        const auto endpoint = spec.parameters.find("endpoint");
        if (endpoint == spec.parameters.end()) {
            throw ConfigError("tokenizer '" + spec.id + "': http tokenizer needs an endpoint");
        }
        spec.counter = [url = endpoint->second](std::string_view text) {
            const nlohmann::json request{{"text", std::string(text)}};
            const HttpResponse response = with_retries(RetryPolicy{}, "tokenizer request", [&](int) {
                return post_json(url, request.dump(), {}, std::chrono::seconds(30));
            });
            if (response.status != 200) {
                throw Error("tokenizer endpoint returned HTTP " + std::to_string(response.status));
            }
            return nlohmann::json::parse(response.body).at("count").get<std::size_t>();
        };
    }
    return spec;
}

std::size_t count_tokens(std::string_view text, const TokenizerSpec& tokenizer) {
    switch (tokenizer.kind) {
        case TokenizerKind::builtin_segmenter:
            return count_builtin_tokens(text);
        case TokenizerKind::plugged:
            if (!tokenizer.counter) {
                throw TokenizerError(tokenizer.id, "tokenizer '" + tokenizer.id + "' is not available");
            }
            try {
                return tokenizer.counter(text);
            } catch (const TokenizerError&) {
                throw;
            } catch (const std::exception& e) {
                throw TokenizerError(tokenizer.id, "tokenizer '" + tokenizer.id + "' failed: " + e.what());
            }
    }
    throw TokenizerError(tokenizer.id, "tokenizer '" + tokenizer.id + "' has an unknown kind");
}

}  // namespace crag
