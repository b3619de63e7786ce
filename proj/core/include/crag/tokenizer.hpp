// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace crag {

struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;  // one past the last byte
};

/// Builtin segmenter: a token is a maximal run of alphanumeric bytes or a single
/// non-whitespace, non-alphanumeric byte. Bytes >= 0x80 count as alphanumeric so
/// UTF-8 letters stay in their word. Whitespace yields nothing.
std::vector<TokenSpan> segment(std::string_view text);
std::size_t count_builtin_tokens(std::string_view text);

enum class TokenizerKind { builtin_segmenter, plugged };

struct TokenizerSpec {
    std::string id;
    TokenizerKind kind = TokenizerKind::builtin_segmenter;
    std::map<std::string, std::string> parameters;
    /// Required for the plugged kind; an empty function means the tokenizer is unavailable.
    std::function<std::size_t(std::string_view)> counter;
};

TokenizerSpec builtin_tokenizer(std::string id = "builtin");
TokenizerSpec plugged_tokenizer(std::string id, std::function<std::size_t(std::string_view)> counter);

/// Builds a plugged tokenizer from config parameters:
///   type=chars-per-token, ratio=<positive real>  -> ceil(bytes / ratio)
///   type=http, endpoint=<url>                    -> POST {"text"} expecting {"count"}
/// Unknown types produce a spec whose counter is empty.
TokenizerSpec make_plugged_tokenizer(std::string id, std::map<std::string, std::string> parameters);

/// Throws TokenizerError naming the id when a plugged tokenizer is unavailable or fails.
std::size_t count_tokens(std::string_view text, const TokenizerSpec& tokenizer);

}  // namespace crag
