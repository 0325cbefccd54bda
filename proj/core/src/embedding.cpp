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

#include "mmr/embedding.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "mmr/errors.hpp"
#include "mmr/text.hpp"
#include "mmr/vec.hpp"

namespace mmr {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

TextFeatures EmbeddingProvider::embed_text(std::string_view text) const {
    const auto tokens = tokenize(text);
    if (tokens.empty()) {
        fail(ErrorKind::kInput, "text has no tokens");
    }
    return embed_tokens(tokens);
}

SeededEmbeddingProvider::SeededEmbeddingProvider(std::size_t text_dim, std::size_t image_dim,
                                                 std::size_t num_patches)
        : text_dim_(text_dim), image_dim_(image_dim), num_patches_(num_patches) {
    if (text_dim < 2 || image_dim < 2 || num_patches == 0) {
        fail(ErrorKind::kConfig, "embedding provider needs dims >= 2 and at least one patch");
    }
}

TextFeatures SeededEmbeddingProvider::embed_tokens(std::span<const std::string> tokens) const {
    if (tokens.empty()) {
        fail(ErrorKind::kInput, "text has no tokens");
    }
    TextFeatures out;
    out.tokens.assign(tokens.begin(), tokens.end());
    out.embeddings.resize(static_cast<Eigen::Index>(tokens.size()), static_cast<Eigen::Index>(text_dim_));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Vec v = seeded_unit_vector(tokens[i], text_dim_, "text");
        for (std::size_t c = 0; c < text_dim_; ++c) {
            out.embeddings(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v[c];
        }
    }
    return out;
}

ImageFeatures SeededEmbeddingProvider::embed_image(std::string_view image_key) const {
    if (image_key.empty()) {
        fail(ErrorKind::kMissingEmbedding, "empty image key");
    }
    ImageFeatures out;
    const Vec g = seeded_unit_vector(image_key, image_dim_, "img-g");
    out.global = Eigen::Map<const Vector>(g.data(), static_cast<Eigen::Index>(g.size()));
    out.patches.resize(static_cast<Eigen::Index>(num_patches_), static_cast<Eigen::Index>(image_dim_));
    std::string key(image_key);
    for (std::size_t j = 0; j < num_patches_; ++j) {
        const Vec p = seeded_unit_vector(key + "#" + std::to_string(j), image_dim_, "img-p");
        for (std::size_t c = 0; c < image_dim_; ++c) {
            out.patches(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = p[c];
        }
    }
    return out;
}

namespace {

template <class T>
bool read_pod(std::istream& in, T& value) {
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&value), sizeof(T)));
}

bool starts_with(const std::string& s, std::string_view prefix) {
    return s.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

FileEmbeddingProvider::FileEmbeddingProvider(const std::filesystem::path& path, std::size_t num_patches)
        : num_patches_(num_patches) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::kIo, "cannot open embedding file " + path.string());
    }
    while (true) {
        std::uint32_t key_len = 0;
        if (!read_pod(in, key_len)) {
            break;
        }
        std::string key(key_len, '\0');
        std::uint32_t dim = 0;
        if (!in.read(key.data(), key_len) || !read_pod(in, dim)) {
            fail(ErrorKind::kCorruption, "truncated embedding record in " + path.string());
        }
        std::vector<float> raw(dim);
        if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(dim * sizeof(float)))) {
            fail(ErrorKind::kCorruption, "truncated embedding values for '" + key + "'");
        }
        std::size_t* expected = nullptr;
        if (starts_with(key, "text/")) {
            expected = &text_dim_;
        } else if (starts_with(key, "image/") || starts_with(key, "patch/")) {
            expected = &image_dim_;
        } else {
            fail(ErrorKind::kFormat, "embedding key '" + key + "' has no known prefix");
        }
        if (*expected == 0) {
            *expected = dim;
        } else if (*expected != dim) {
            fail(ErrorKind::kFormat, "embedding '" + key + "' has inconsistent dimension");
        }
        records_[key] = std::vector<double>(raw.begin(), raw.end());
    }
}

const std::vector<double>& FileEmbeddingProvider::lookup(const std::string& key) const {
    const auto it = records_.find(key);
    if (it == records_.end()) {
        fail(ErrorKind::kMissingEmbedding, "no embedding for '" + key + "'");
    }
    return it->second;
}

TextFeatures FileEmbeddingProvider::embed_tokens(std::span<const std::string> tokens) const {
    if (tokens.empty()) {
        fail(ErrorKind::kInput, "text has no tokens");
    }
    TextFeatures out;
    out.tokens.assign(tokens.begin(), tokens.end());
    out.embeddings.resize(static_cast<Eigen::Index>(tokens.size()), static_cast<Eigen::Index>(text_dim_));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& v = lookup("text/" + tokens[i]);
        for (std::size_t c = 0; c < text_dim_; ++c) {
            out.embeddings(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v[c];
        }
    }
    return out;
}

ImageFeatures FileEmbeddingProvider::embed_image(std::string_view image_key) const {
    const std::string key(image_key);
    ImageFeatures out;
    const auto& g = lookup("image/" + key);
    out.global = Eigen::Map<const Vector>(g.data(), static_cast<Eigen::Index>(g.size()));
    out.patches.resize(static_cast<Eigen::Index>(num_patches_), static_cast<Eigen::Index>(image_dim_));
    for (std::size_t j = 0; j < num_patches_; ++j) {
        const auto& p = lookup("patch/" + key + "/" + std::to_string(j));
        for (std::size_t c = 0; c < image_dim_; ++c) {
            out.patches(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = p[c];
        }
    }
    return out;
}

void write_embedding_records(const std::filesystem::path& path,
                             const std::vector<std::pair<std::string, std::vector<float>>>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::kIo, "cannot write " + path.string());
    }
    for (const auto& [key, values] : records) {
        const auto key_len = static_cast<std::uint32_t>(key.size());
        const auto dim = static_cast<std::uint32_t>(values.size());
        out.write(reinterpret_cast<const char*>(&key_len), sizeof key_len);
        out.write(key.data(), static_cast<std::streamsize>(key.size()));
        out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(float)));
    }
}

}  // namespace mmr
