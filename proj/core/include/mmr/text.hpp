// Copyright 2026 The mmr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mmr {

/// A lowercased token and the byte range of its source word.
struct Token {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Whitespace tokenization with ASCII lowercasing. Leading and trailing ASCII
/// punctuation is stripped from each word; words that become empty are
/// dropped. This is the single tokenizer used for embeddings, linking and BM25.
std::vector<Token> tokenize_with_offsets(std::string_view text);
std::vector<std::string> tokenize(std::string_view text);

/// Tokens joined by single spaces, e.g. "New  York." -> "new york".
std::string normalize_surface(std::string_view text);

struct SentenceRange {
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Splits on '.', '!' and '?'. Ranges exclude surrounding whitespace and
/// include the terminator.
std::vector<SentenceRange> split_sentences(std::string_view text);

/// True when `needle` occurs as a contiguous token run inside `haystack`.
bool contains_token_run(const std::vector<std::string>& haystack, const std::vector<std::string>& needle);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace mmr
