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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mmr/feature_set.hpp"
#include "mmr/scoring.hpp"

namespace mmr {

struct IndexConfig {
    /// 0 selects max(1, round(2 * sqrt(total vectors))).
    std::size_t k_centroids = 0;
    std::size_t kmeans_iters = 20;
    /// Bits per residual component, 1..8.
    unsigned nbits = 8;
    /// Store residuals as raw doubles instead of quantized codes.
    bool lossless = false;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct SearchParams {
    std::size_t nprobe = 4;
    std::size_t candidate_doc_cap = 256;
    std::size_t k = 10;

    /// Throws kConfig unless nprobe >= 1, k >= 1 and cap >= k.
    void validate() const;
};

/// Centroid-partitioned multi-vector index. Every document token is stored as
/// its nearest centroid (spherical k-means) plus a per-dimension uniformly
/// quantized residual. Search gathers candidate documents from the postings of
/// each query token's nearest centroids, keeps the best by a centroid-level
/// MaxSim approximation and re-ranks those exactly on the decoded vectors.
///
/// Immutable after build or load; concurrent searches are safe.
class RetrievalIndex {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    RetrievalIndex() = default;

    /// Throws kInput on an empty corpus and kConfig when k_centroids exceeds
    /// the number of vectors. `objective_trace`, when given, receives the mean
    /// cosine distance after every assignment step.
    static RetrievalIndex build(const Corpus& corpus, const IndexConfig& config,
                                std::vector<double>* objective_trace = nullptr);

    /// Throws kState on an unbuilt index and kShape on a dimension mismatch.
    std::vector<ScoredDoc> search(const FeatureSet& query, const SearchParams& params) const;

    void save(const std::filesystem::path& path) const;
    /// Throws kFormat on a bad magic, kUnsupportedVersion on a version
    /// mismatch and kCorruption on truncated or inconsistent content.
    static RetrievalIndex load(const std::filesystem::path& path);

    std::vector<std::uint8_t> serialize() const;
    static RetrievalIndex deserialize(const std::vector<std::uint8_t>& bytes);

    /// Decoded (centroid + dequantized residual, renormalized) feature sets:
    /// exactly what the re-ranking stage scores.
    Corpus reconstruct() const;
    /// centroid + dequantized residual, before renormalization.
    std::vector<double> decode_vector(std::size_t vector_id) const;

    bool built() const { return dim_ != 0; }
    std::size_t dim() const { return dim_; }
    std::size_t num_centroids() const { return num_centroids_; }
    std::size_t num_vectors() const { return assignments_.size(); }
    std::size_t num_docs() const { return doc_ids_.size(); }
    bool lossless() const { return lossless_; }
    unsigned nbits() const { return nbits_; }
    const std::vector<double>& centroids() const { return centroids_; }
    const std::vector<std::uint32_t>& assignments() const { return assignments_; }
    const std::vector<std::vector<std::uint32_t>>& postings() const { return postings_; }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    /// Owning document index for every vector.
    const std::vector<std::uint32_t>& vec_owner() const { return vec_owner_; }
    /// Per-dimension (min, max) of the quantized residuals.
    const std::vector<std::pair<double, double>>& codebook() const { return codebook_; }
    double bucket_width(std::size_t dim) const;

private:
    void finalize();

    std::size_t dim_ = 0;
    std::size_t num_centroids_ = 0;
    unsigned nbits_ = 8;
    bool lossless_ = false;
    std::vector<double> centroids_;
    std::vector<std::pair<double, double>> codebook_;
    std::vector<std::uint8_t> codes_;
    std::vector<double> raw_residuals_;
    std::vector<std::uint32_t> assignments_;
    std::vector<std::vector<std::uint32_t>> postings_;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint64_t> doc_offsets_;
    std::vector<std::uint32_t> vec_owner_;

    // Derived on build/load.
    std::vector<FeatureSet> decoded_docs_;
    std::vector<std::vector<std::uint32_t>> doc_centroids_;
};

/// Default centroid count for n vectors: max(1, round(2 sqrt(n))), capped at n.
std::size_t default_num_centroids(std::size_t num_vectors);

}  // namespace mmr
