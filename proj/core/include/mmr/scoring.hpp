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

#include <map>
#include <string>
#include <vector>

#include "mmr/feature_set.hpp"

namespace mmr {

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

using Corpus = std::map<std::string, FeatureSet>;

/// Sum over query tokens of the best cosine against any document token. Both
/// sets hold unit vectors, so cosine is a dot product. Throws kShape on a
/// dimension mismatch.
double late_interaction_score(const FeatureSet& query, const FeatureSet& doc);

/// Index of the best-matching document token for every query token; ties go to
/// the lowest document-token index.
std::vector<std::size_t> maxsim_argmax(const FeatureSet& query, const FeatureSet& doc);

/// Descending score, ascending doc id on ties.
void sort_ranking(std::vector<ScoredDoc>& ranking);

/// Brute-force top-k over the whole corpus. k is clamped to the corpus size.
/// Throws kInput on an empty corpus or k == 0.
std::vector<ScoredDoc> rank_exact(const FeatureSet& query, const Corpus& corpus, std::size_t k,
                                  unsigned threads = 1);

}  // namespace mmr
