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

#include "mmr/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>

#include "mmr/errors.hpp"
#include "mmr/parallel.hpp"
#include "mmr/rng.hpp"

namespace mmr {

static_assert(std::endian::native == std::endian::little, "index format assumes a little-endian host");

void SearchParams::validate() const {
    if (nprobe < 1) {
        fail(ErrorKind::kConfig, "search nprobe must be >= 1");
    }
    if (k < 1) {
        fail(ErrorKind::kConfig, "search k must be >= 1");
    }
    if (candidate_doc_cap < k) {
        fail(ErrorKind::kConfig, "candidate_doc_cap must be >= k");
    }
}

std::size_t default_num_centroids(std::size_t num_vectors) {
    const auto k = static_cast<std::size_t>(std::llround(2.0 * std::sqrt(static_cast<double>(num_vectors))));
    return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(1, num_vectors));
}

namespace {

constexpr char kMagic[4] = {'M', 'V', 'L', 'I'};

double dot_ptr(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += a[i] * b[i];
    }
    return s;
}

// Nearest centroid by inner product; ties go to the lowest centroid id.
std::uint32_t nearest(const double* v, const std::vector<double>& centroids, std::size_t k, std::size_t dim,
                      double* best_out) {
    std::uint32_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        const double s = dot_ptr(v, centroids.data() + c * dim, dim);
        if (s > best_score) {
            best_score = s;
            best = static_cast<std::uint32_t>(c);
        }
    }
    *best_out = best_score;
    return best;
}

class ByteWriter {
public:
    template <class T>
    void put(const T& v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    template <class T>
    void put_array(const std::vector<T>& v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
        bytes.insert(bytes.end(), p, p + v.size() * sizeof(T));
    }
    std::vector<std::uint8_t> bytes;
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& b) : bytes_(b) {}

    template <class T>
    T get() {
        T v;
        need(sizeof(T));
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    template <class T>
    std::vector<T> get_array(std::size_t n) {
        if (n > (bytes_.size() - pos_) / sizeof(T)) {
            fail(ErrorKind::kCorruption, "index file truncated");
        }
        std::vector<T> v(n);
        std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(T));
        pos_ += n * sizeof(T);
        return v;
    }
    std::string get_string(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            fail(ErrorKind::kCorruption, "index file truncated");
        }
    }
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

RetrievalIndex RetrievalIndex::build(const Corpus& corpus, const IndexConfig& config,
                                     std::vector<double>* objective_trace) {
    if (corpus.empty()) {
        fail(ErrorKind::kInput, "cannot index an empty corpus");
    }
    if (!config.lossless && (config.nbits < 1 || config.nbits > 8)) {
        fail(ErrorKind::kConfig, "index nbits must be in [1, 8]");
    }
    RetrievalIndex idx;
    idx.dim_ = corpus.begin()->second.dim();
    idx.nbits_ = config.nbits;
    idx.lossless_ = config.lossless;
    const std::size_t dim = idx.dim_;

    // Flatten document tokens; each document owns a contiguous vector range.
    std::vector<double> vectors;
    idx.doc_offsets_.push_back(0);
    for (const auto& [id, fs] : corpus) {
        if (fs.dim() != dim) {
            fail(ErrorKind::kShape, "document " + id + " has dimension " + std::to_string(fs.dim()));
        }
        idx.doc_ids_.push_back(id);
        const auto& m = fs.matrix();
        vectors.insert(vectors.end(), m.data(), m.data() + m.size());
        for (std::size_t i = 0; i < fs.size(); ++i) {
            idx.vec_owner_.push_back(static_cast<std::uint32_t>(idx.doc_ids_.size() - 1));
        }
        idx.doc_offsets_.push_back(idx.vec_owner_.size());
    }
    const std::size_t n = idx.vec_owner_.size();
    const std::size_t k = config.k_centroids == 0 ? default_num_centroids(n) : config.k_centroids;
    if (k > n) {
        fail(ErrorKind::kConfig, "k_centroids " + std::to_string(k) + " exceeds " + std::to_string(n) + " vectors");
    }
    idx.num_centroids_ = k;

    // Spherical k-means seeded by a shuffled sample of the vectors.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng(config.seed).fork("kmeans-init");
    rng.shuffle(order);
    std::vector<double>& centroids = idx.centroids_;
    centroids.resize(k * dim);
    for (std::size_t c = 0; c < k; ++c) {
        std::copy_n(vectors.data() + order[c] * dim, dim, centroids.data() + c * dim);
    }
    std::vector<std::uint32_t> assign(n, 0);
    std::vector<double> sims(n, 0.0);
    auto assign_step = [&] {
        parallel_for(n, config.threads, [&](std::size_t v) {
            assign[v] = nearest(vectors.data() + v * dim, centroids, k, dim, &sims[v]);
        });
        double objective = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            objective += 1.0 - sims[v];
        }
        if (objective_trace != nullptr) {
            objective_trace->push_back(objective / static_cast<double>(n));
        }
    };
    for (std::size_t iter = 0; iter < config.kmeans_iters; ++iter) {
        assign_step();
        std::vector<double> sums(k * dim, 0.0);
        std::vector<std::size_t> counts(k, 0);
        std::vector<std::size_t> sole(k, 0);
        for (std::size_t v = 0; v < n; ++v) {
            const std::size_t c = assign[v];
            ++counts[c];
            sole[c] = v;
            for (std::size_t d = 0; d < dim; ++d) {
                sums[c * dim + d] += vectors[v * dim + d];
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                continue;  // empty cluster keeps its centroid
            }
            double* dst = centroids.data() + c * dim;
            if (counts[c] == 1) {
                std::copy_n(vectors.data() + sole[c] * dim, dim, dst);
                continue;
            }
            const double norm = std::sqrt(dot_ptr(sums.data() + c * dim, sums.data() + c * dim, dim));
            if (norm == 0.0) {
                continue;
            }
            for (std::size_t d = 0; d < dim; ++d) {
                dst[d] = sums[c * dim + d] / norm;
            }
        }
    }
    assign_step();
    idx.assignments_ = assign;

    // Residuals and per-dimension uniform quantization.
    std::vector<double> residuals(n * dim);
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t d = 0; d < dim; ++d) {
            residuals[v * dim + d] = vectors[v * dim + d] - centroids[assign[v] * dim + d];
        }
    }
    if (config.lossless) {
        idx.raw_residuals_ = std::move(residuals);
    } else {
        idx.codebook_.assign(dim, {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
        for (std::size_t v = 0; v < n; ++v) {
            for (std::size_t d = 0; d < dim; ++d) {
                auto& [lo, hi] = idx.codebook_[d];
                lo = std::min(lo, residuals[v * dim + d]);
                hi = std::max(hi, residuals[v * dim + d]);
            }
        }
        const double levels = static_cast<double>((1u << config.nbits) - 1);
        idx.codes_.resize(n * dim);
        for (std::size_t v = 0; v < n; ++v) {
            for (std::size_t d = 0; d < dim; ++d) {
                const double width = idx.bucket_width(d);
                std::uint8_t code = 0;
                if (width > 0.0) {
                    const double q = std::round((residuals[v * dim + d] - idx.codebook_[d].first) / width);
                    code = static_cast<std::uint8_t>(std::clamp(q, 0.0, levels));
                }
                idx.codes_[v * dim + d] = code;
            }
        }
    }

    idx.postings_.assign(k, {});
    for (std::size_t v = 0; v < n; ++v) {
        idx.postings_[assign[v]].push_back(static_cast<std::uint32_t>(v));
    }
    idx.finalize();
    return idx;
}

double RetrievalIndex::bucket_width(std::size_t d) const {
    if (lossless_ || codebook_.empty()) {
        return 0.0;
    }
    const auto [lo, hi] = codebook_[d];
    return (hi - lo) / static_cast<double>((1u << nbits_) - 1);
}

std::vector<double> RetrievalIndex::decode_vector(std::size_t v) const {
    std::vector<double> out(dim_);
    const double* c = centroids_.data() + static_cast<std::size_t>(assignments_[v]) * dim_;
    for (std::size_t d = 0; d < dim_; ++d) {
        double r = 0.0;
        if (lossless_) {
            r = raw_residuals_[v * dim_ + d];
        } else {
            r = codebook_[d].first + static_cast<double>(codes_[v * dim_ + d]) * bucket_width(d);
        }
        out[d] = c[d] + r;
    }
    return out;
}

void RetrievalIndex::finalize() {
    decoded_docs_.clear();
    doc_centroids_.clear();
    for (std::size_t doc = 0; doc < doc_ids_.size(); ++doc) {
        const std::size_t b = doc_offsets_[doc];
        const std::size_t e = doc_offsets_[doc + 1];
        RowMatrix m(static_cast<Eigen::Index>(e - b), static_cast<Eigen::Index>(dim_));
        std::vector<TokenTag> tags;
        std::vector<std::uint32_t> cents;
        for (std::size_t v = b; v < e; ++v) {
            const auto dec = decode_vector(v);
            for (std::size_t d = 0; d < dim_; ++d) {
                m(static_cast<Eigen::Index>(v - b), static_cast<Eigen::Index>(d)) = dec[d];
            }
            tags.push_back(TokenTag::text(static_cast<std::int32_t>(v - b)));
            cents.push_back(assignments_[v]);
        }
        std::sort(cents.begin(), cents.end());
        cents.erase(std::unique(cents.begin(), cents.end()), cents.end());
        decoded_docs_.push_back(FeatureSet::normalized(std::move(m), std::move(tags)));
        doc_centroids_.push_back(std::move(cents));
    }
}

Corpus RetrievalIndex::reconstruct() const {
    Corpus out;
    for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
        out.emplace(doc_ids_[d], decoded_docs_[d]);
    }
    return out;
}

std::vector<ScoredDoc> RetrievalIndex::search(const FeatureSet& query, const SearchParams& params) const {
    if (!built() || decoded_docs_.size() != doc_ids_.size()) {
        fail(ErrorKind::kState, "search on an unbuilt index");
    }
    params.validate();
    if (query.dim() != dim_) {
        fail(ErrorKind::kShape, "query dim " + std::to_string(query.dim()) + " != index dim " + std::to_string(dim_));
    }
    const std::size_t m = query.size();
    const std::size_t k = num_centroids_;
    const std::size_t nprobe = std::min(params.nprobe, k);

    // Query-token x centroid similarities.
    std::vector<double> sim(m * k);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            sim[i * k + c] = dot_ptr(query.token(i).data(), centroids_.data() + c * dim_, dim_);
        }
    }

    // Stage 1: candidate documents from the probed postings.
    std::vector<char> is_candidate(doc_ids_.size(), 0);
    std::vector<std::uint32_t> order(k);
    for (std::size_t i = 0; i < m; ++i) {
        std::iota(order.begin(), order.end(), 0);
        const double* row = sim.data() + i * k;
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nprobe), order.end(),
                          [&](std::uint32_t a, std::uint32_t b) {
                              return row[a] != row[b] ? row[a] > row[b] : a < b;
                          });
        for (std::size_t p = 0; p < nprobe; ++p) {
            for (std::uint32_t v : postings_[order[p]]) {
                is_candidate[vec_owner_[v]] = 1;
            }
        }
    }
    std::vector<ScoredDoc> approx;
    std::vector<std::size_t> approx_doc;
    for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
        if (!is_candidate[d]) {
            continue;
        }
        double score = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::uint32_t c : doc_centroids_[d]) {
                best = std::max(best, sim[i * k + c]);
            }
            score += best;
        }
        approx.push_back({doc_ids_[d], score});
        approx_doc.push_back(d);
    }
    std::vector<std::size_t> idx(approx.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (approx[a].score != approx[b].score) {
            return approx[a].score > approx[b].score;
        }
        return approx[a].doc_id < approx[b].doc_id;
    });
    if (idx.size() > params.candidate_doc_cap) {
        idx.resize(params.candidate_doc_cap);
    }

    // Stage 2: exact late interaction on the decoded vectors.
    std::vector<ScoredDoc> ranking;
    ranking.reserve(idx.size());
    for (std::size_t i : idx) {
        const std::size_t d = approx_doc[i];
        ranking.push_back({doc_ids_[d], late_interaction_score(query, decoded_docs_[d])});
    }
    sort_ranking(ranking);
    if (ranking.size() > params.k) {
        ranking.resize(params.k);
    }
    return ranking;
}

std::vector<std::uint8_t> RetrievalIndex::serialize() const {
    if (!built()) {
        fail(ErrorKind::kState, "cannot serialize an unbuilt index");
    }
    ByteWriter w;
    for (char c : kMagic) {
        w.put(c);
    }
    w.put(kFormatVersion);
    w.put(static_cast<std::uint32_t>(dim_));
    w.put(static_cast<std::uint32_t>(nbits_));
    w.put(static_cast<std::uint32_t>(lossless_ ? 1 : 0));
    w.put(static_cast<std::uint64_t>(num_centroids_));
    w.put(static_cast<std::uint64_t>(assignments_.size()));
    w.put(static_cast<std::uint64_t>(doc_ids_.size()));
    w.put_array(centroids_);
    if (lossless_) {
        w.put_array(raw_residuals_);
    } else {
        for (const auto& [lo, hi] : codebook_) {
            w.put(lo);
            w.put(hi);
        }
        w.put_array(codes_);
    }
    w.put_array(assignments_);
    for (const auto& p : postings_) {
        w.put(static_cast<std::uint64_t>(p.size()));
        w.put_array(p);
    }
    for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
        w.put(static_cast<std::uint32_t>(doc_ids_[d].size()));
        w.bytes.insert(w.bytes.end(), doc_ids_[d].begin(), doc_ids_[d].end());
        w.put(static_cast<std::uint64_t>(doc_offsets_[d + 1] - doc_offsets_[d]));
    }
    return std::move(w.bytes);
}

RetrievalIndex RetrievalIndex::deserialize(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        fail(ErrorKind::kFormat, "not an MVLI index (bad magic)");
    }
    ByteReader r(bytes);
    r.get_string(4);
    const auto version = r.get<std::uint32_t>();
    if (version != kFormatVersion) {
        fail(ErrorKind::kUnsupportedVersion, "index format version " + std::to_string(version) +
                                                     " (this build reads version " + std::to_string(kFormatVersion) + ")");
    }
    RetrievalIndex idx;
    idx.dim_ = r.get<std::uint32_t>();
    idx.nbits_ = r.get<std::uint32_t>();
    const auto mode = r.get<std::uint32_t>();
    if (mode > 1 || idx.dim_ == 0 || (mode == 0 && (idx.nbits_ < 1 || idx.nbits_ > 8))) {
        fail(ErrorKind::kCorruption, "invalid index header");
    }
    idx.lossless_ = mode == 1;
    idx.num_centroids_ = r.get<std::uint64_t>();
    const auto n = r.get<std::uint64_t>();
    const auto num_docs = r.get<std::uint64_t>();
    const std::size_t dim = idx.dim_;
    if (idx.num_centroids_ == 0 || n == 0 || num_docs == 0 || idx.num_centroids_ > n) {
        fail(ErrorKind::kCorruption, "invalid index counts");
    }
    idx.centroids_ = r.get_array<double>(idx.num_centroids_ * dim);
    if (idx.lossless_) {
        idx.raw_residuals_ = r.get_array<double>(n * dim);
    } else {
        idx.codebook_.resize(dim);
        for (auto& [lo, hi] : idx.codebook_) {
            lo = r.get<double>();
            hi = r.get<double>();
        }
        idx.codes_ = r.get_array<std::uint8_t>(n * dim);
    }
    idx.assignments_ = r.get_array<std::uint32_t>(n);
    idx.postings_.resize(idx.num_centroids_);
    std::vector<char> seen(n, 0);
    for (std::size_t c = 0; c < idx.num_centroids_; ++c) {
        const auto count = r.get<std::uint64_t>();
        idx.postings_[c] = r.get_array<std::uint32_t>(count);
        for (std::uint32_t v : idx.postings_[c]) {
            if (v >= n || seen[v] || idx.assignments_[v] != c) {
                fail(ErrorKind::kCorruption, "postings do not partition the vectors");
            }
            seen[v] = 1;
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
        fail(ErrorKind::kCorruption, "postings do not partition the vectors");
    }
    idx.doc_offsets_.push_back(0);
    for (std::size_t d = 0; d < num_docs; ++d) {
        const auto len = r.get<std::uint32_t>();
        idx.doc_ids_.push_back(r.get_string(len));
        const auto count = r.get<std::uint64_t>();
        idx.doc_offsets_.push_back(idx.doc_offsets_.back() + count);
        for (std::uint64_t i = 0; i < count; ++i) {
            idx.vec_owner_.push_back(static_cast<std::uint32_t>(d));
        }
    }
    if (idx.vec_owner_.size() != n || !r.done()) {
        fail(ErrorKind::kCorruption, "document table does not match the vector count");
    }
    idx.finalize();
    return idx;
}

void RetrievalIndex::save(const std::filesystem::path& path) const {
    const auto bytes = serialize();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::kIo, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorKind::kIo, "write failed for " + path.string());
    }
}

RetrievalIndex RetrievalIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::kIo, "cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace mmr
