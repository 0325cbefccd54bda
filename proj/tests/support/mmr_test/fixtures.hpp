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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <unistd.h>

#include "mmr/document.hpp"
#include "mmr/errors.hpp"
#include "mmr/encoder.hpp"
#include "mmr/feature_set.hpp"
#include "mmr/params.hpp"
#include "mmr/rng.hpp"
#include "mmr/text.hpp"

// Fails unless `stmt` throws mmr::Error of the given kind.
#define EXPECT_MMR_ERROR(stmt, error_kind)                                                   \
    do {                                                                                     \
        bool caught_ = false;                                                                \
        try {                                                                                \
            stmt;                                                                            \
        } catch (const ::mmr::Error& e_) {                                                   \
            caught_ = true;                                                                  \
            EXPECT_EQ(::mmr::to_string(e_.kind()), ::mmr::to_string(error_kind)) << e_.what(); \
        }                                                                                    \
        EXPECT_TRUE(caught_) << #stmt " did not throw";                                      \
    } while (0)

namespace mmr::testing {

// Hand-rolled generators for property tests.

inline RowMatrix random_rows(Rng& rng, std::size_t n, std::size_t dim) {
    RowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = rng.normal();
        }
        m.row(i).normalize();
    }
    return m;
}

inline FeatureSet random_set(Rng& rng, std::size_t n, std::size_t dim) {
    std::vector<TokenTag> tags;
    for (std::size_t i = 0; i < n; ++i) {
        tags.push_back(TokenTag::text(static_cast<std::int32_t>(i)));
    }
    return FeatureSet(random_rows(rng, n, dim), std::move(tags));
}

inline FeatureSet rows_of(const FeatureSet& s, const std::vector<std::size_t>& rows) {
    RowMatrix m(static_cast<Eigen::Index>(rows.size()), s.matrix().cols());
    std::vector<TokenTag> tags;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        m.row(static_cast<Eigen::Index>(i)) = s.matrix().row(static_cast<Eigen::Index>(rows[i]));
        tags.push_back(s.tags()[rows[i]]);
    }
    return FeatureSet(std::move(m), std::move(tags));
}

inline FeatureSet concat(const FeatureSet& a, const FeatureSet& b) {
    RowMatrix m(a.matrix().rows() + b.matrix().rows(), a.matrix().cols());
    m << a.matrix(), b.matrix();
    std::vector<TokenTag> tags = a.tags();
    tags.insert(tags.end(), b.tags().begin(), b.tags().end());
    return FeatureSet(std::move(m), std::move(tags));
}

// Small shapes so finite differences stay cheap.
inline EncoderConfig tiny_config() {
    EncoderConfig c;
    c.dim = 4;
    c.text_dim = 6;
    c.image_dim = 5;
    c.num_patches = 3;
    c.heads = 2;
    c.attn_dim = 4;
    c.ffn_dim = 6;
    c.mm_tokens = 2;
    return c;
}

inline std::string pseudo_word(Rng& rng) {
    static const char* syll[] = {"ka", "lo", "mi", "ter", "su", "vo", "ran", "pe", "di", "xu", "bor", "na"};
    std::string w;
    const std::size_t n = 2 + rng.below(2);
    for (std::size_t i = 0; i < n; ++i) {
        w += syll[rng.below(std::size(syll))];
    }
    return w;
}

// An augmented document with n_t body tokens and r related entities, each
// mentioned once at a distinct token position. Requires r < n_t.
inline AugmentedDocument random_document(Rng& rng, std::size_t n_t, std::size_t r, const std::string& id = "doc") {
    AugmentedDocument d;
    d.raw.doc_id = id;
    d.raw.title = id;
    d.raw.main_image_key = image_key_for(id);
    for (std::size_t i = 0; i < n_t; ++i) {
        d.text_tokens.push_back(pseudo_word(rng));
    }
    d.raw.body = join(d.text_tokens, " ");
    d.main_span = {0};
    for (std::size_t k = 0; k < r; ++k) {
        RelatedEntity e;
        e.entity = id + "-rel" + std::to_string(k);
        e.span = {1 + k};
        e.image_key = image_key_for(e.entity);
        e.source_doc_id = e.entity;
        d.related.push_back(e);
    }
    return d;
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("mmr-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::remove_all(path_);
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

}  // namespace mmr::testing
