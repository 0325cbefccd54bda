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

#include "mmr/text.hpp"

#include <algorithm>
#include <cctype>

namespace mmr {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::vector<Token> tokenize_with_offsets(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) {
            ++i;
        }
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) {
            ++j;
        }
        std::size_t b = i;
        std::size_t e = j;
        while (b < e && is_punct(text[b])) {
            ++b;
        }
        while (e > b && is_punct(text[e - 1])) {
            --e;
        }
        if (b < e) {
            Token t;
            t.text.reserve(e - b);
            for (std::size_t k = b; k < e; ++k) {
                t.text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[k]))));
            }
            t.begin = b;
            t.end = e;
            out.push_back(std::move(t));
        }
        i = j;
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : tokenize_with_offsets(text)) {
        out.push_back(std::move(t.text));
    }
    return out;
}

std::string normalize_surface(std::string_view text) {
    return join(tokenize(text), " ");
}

std::vector<SentenceRange> split_sentences(std::string_view text) {
    std::vector<SentenceRange> out;
    std::size_t start = 0;
    auto push = [&](std::size_t b, std::size_t e) {
        while (b < e && is_space(text[b])) {
            ++b;
        }
        while (e > b && is_space(text[e - 1])) {
            --e;
        }
        if (b < e) {
            out.push_back({b, e});
        }
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '.' || c == '!' || c == '?') {
            push(start, i + 1);
            start = i + 1;
        }
    }
    push(start, text.size());
    return out;
}

bool contains_token_run(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) {
        return false;
    }
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out.append(sep);
        }
        out.append(parts[i]);
    }
    return out;
}

}  // namespace mmr
