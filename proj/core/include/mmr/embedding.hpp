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

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mmr/feature_set.hpp"

namespace mmr {

/// Token-level backbone text features: one row per token.
struct TextFeatures {
    std::vector<std::string> tokens;
    RowMatrix embeddings;

    std::size_t size() const { return tokens.size(); }
};

/// Backbone image features: a global vector and a grid of patch vectors.
struct ImageFeatures {
    Vector global;
    RowMatrix patches;
};

/// Source of frozen backbone features. Implementations must be deterministic
/// and safe to call concurrently.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t text_dim() const = 0;
    virtual std::size_t image_dim() const = 0;
    virtual std::size_t num_patches() const = 0;

    /// Features for already-tokenized text. Throws kInput when empty.
    virtual TextFeatures embed_tokens(std::span<const std::string> tokens) const = 0;
    virtual ImageFeatures embed_image(std::string_view image_key) const = 0;

    /// Tokenizes (whitespace, lowercase) then embeds. Throws kInput when the
    /// text has no tokens.
    TextFeatures embed_text(std::string_view text) const;
};

/// Hash-seeded stand-in for the frozen backbones: token i maps to
/// seeded_unit_vector(token, text_dim, "text"); an image key maps to a global
/// vector in domain "img-g" and patch j to key + "#" + j in domain "img-p".
class SeededEmbeddingProvider final : public EmbeddingProvider {
public:
    SeededEmbeddingProvider(std::size_t text_dim, std::size_t image_dim, std::size_t num_patches);

    std::size_t text_dim() const override { return text_dim_; }
    std::size_t image_dim() const override { return image_dim_; }
    std::size_t num_patches() const override { return num_patches_; }

    TextFeatures embed_tokens(std::span<const std::string> tokens) const override;
    ImageFeatures embed_image(std::string_view image_key) const override;

private:
    std::size_t text_dim_;
    std::size_t image_dim_;
    std::size_t num_patches_;
};

/// Precomputed features loaded from a binary record file. Each record is
///   u32 key length | key bytes | u32 dim | dim x f32
/// all little-endian. Keys are "text/<token>", "image/<key>" (global) and
/// "patch/<key>/<j>" for j in [0, num_patches).
class FileEmbeddingProvider final : public EmbeddingProvider {
public:
    FileEmbeddingProvider(const std::filesystem::path& path, std::size_t num_patches);

    std::size_t text_dim() const override { return text_dim_; }
    std::size_t image_dim() const override { return image_dim_; }
    std::size_t num_patches() const override { return num_patches_; }

    TextFeatures embed_tokens(std::span<const std::string> tokens) const override;
    ImageFeatures embed_image(std::string_view image_key) const override;

    std::size_t num_records() const { return records_.size(); }

private:
    const std::vector<double>& lookup(const std::string& key) const;

    std::unordered_map<std::string, std::vector<double>> records_;
    std::size_t text_dim_ = 0;
    std::size_t image_dim_ = 0;
    std::size_t num_patches_;
};

/// Writes records in the format FileEmbeddingProvider reads.
void write_embedding_records(const std::filesystem::path& path,
                             const std::vector<std::pair<std::string, std::vector<float>>>& records);

}  // namespace mmr
