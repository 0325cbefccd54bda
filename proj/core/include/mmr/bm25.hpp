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
#include <unordered_map>
#include <vector>

#include "mmr/document.hpp"
#include "mmr/scoring.hpp"

namespace mmr {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Okapi BM25 over KB bodies, tokenized exactly like the text encoder input.
/// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)), which stays non-negative.
class Bm25Index {
public:
    Bm25Index() = default;
    explicit Bm25Index(const Kb& kb, Bm25Params params = {});
    /// Bodies keyed by doc id.
    explicit Bm25Index(const std::vector<std::pair<std::string, std::string>>& bodies, Bm25Params params = {});

    /// Repeated query terms count once. Throws kState on an empty index and
    /// kInput on an unknown doc id.
    double score(const std::vector<std::string>& query_terms, const std::string& doc_id) const;
    /// Documents sharing at least one term with the query, ranked by score
    /// with ties by doc id.
    std::vector<ScoredDoc> top_k(const std::string& query, std::size_t k) const;

    double idf(const std::string& term) const;
    std::size_t num_docs() const { return doc_ids_.size(); }
    double avgdl() const { return avgdl_; }

private:
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;
    };
    double term_score(double idf, double tf, double dl) const;
    std::vector<std::string> unique_terms(const std::vector<std::string>& terms) const;

    Bm25Params params_;
    std::vector<std::string> doc_ids_;
    std::unordered_map<std::string, std::uint32_t> doc_slot_;
    std::vector<double> doc_len_;
    double avgdl_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

/// Standalone scorer for one document given corpus statistics.
double bm25_score(const std::vector<std::string>& query_terms, const std::vector<std::string>& doc_terms,
                  const std::unordered_map<std::string, std::size_t>& df, std::size_t num_docs, double avgdl,
                  Bm25Params params = {});

}  // namespace mmr
