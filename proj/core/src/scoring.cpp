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

#include "mmr/scoring.hpp"

#include <algorithm>

#include "mmr/errors.hpp"
#include "mmr/parallel.hpp"

namespace mmr {

namespace {
void check_dims(const FeatureSet& q, const FeatureSet& d) {
    if (q.empty() || d.empty()) {
        fail(ErrorKind::kInput, "late interaction needs non-empty feature sets");
    }
    if (q.dim() != d.dim()) {
        fail(ErrorKind::kShape, "query dim " + std::to_string(q.dim()) + " != document dim " +
                                        std::to_string(d.dim()));
    }
}
}  // namespace

double late_interaction_score(const FeatureSet& query, const FeatureSet& doc) {
    check_dims(query, doc);
    const std::size_t dim = query.dim();
    double total = 0.0;
    for (std::size_t i = 0; i < query.size(); ++i) {
        const double* q = query.token(i).data();
        double best = -2.0;
        for (std::size_t j = 0; j < doc.size(); ++j) {
            const double* d = doc.token(j).data();
            double s = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                s += q[c] * d[c];
            }
            best = std::max(best, s);
        }
        total += best;
    }
    return total;
}

std::vector<std::size_t> maxsim_argmax(const FeatureSet& query, const FeatureSet& doc) {
    check_dims(query, doc);
    std::vector<std::size_t> out(query.size(), 0);
    const std::size_t dim = query.dim();
    for (std::size_t i = 0; i < query.size(); ++i) {
        const double* q = query.token(i).data();
        double best = -2.0;
        for (std::size_t j = 0; j < doc.size(); ++j) {
            const double* d = doc.token(j).data();
            double s = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                s += q[c] * d[c];
            }
            if (s > best) {
                best = s;
                out[i] = j;
            }
        }
    }
    return out;
}

void sort_ranking(std::vector<ScoredDoc>& ranking) {
    std::sort(ranking.begin(), ranking.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.doc_id < b.doc_id;
    });
}

std::vector<ScoredDoc> rank_exact(const FeatureSet& query, const Corpus& corpus, std::size_t k,
                                  unsigned threads) {
    if (corpus.empty()) {
        fail(ErrorKind::kInput, "rank_exact over an empty corpus");
    }
    if (k == 0) {
        fail(ErrorKind::kInput, "rank_exact needs k >= 1");
    }
    std::vector<const std::pair<const std::string, FeatureSet>*> entries;
    entries.reserve(corpus.size());
    for (const auto& entry : corpus) {
        entries.push_back(&entry);
    }
    std::vector<ScoredDoc> ranking(entries.size());
    parallel_for(entries.size(), threads, [&](std::size_t i) {
        ranking[i] = {entries[i]->first, late_interaction_score(query, entries[i]->second)};
    });
    sort_ranking(ranking);
    ranking.resize(std::min(k, ranking.size()));
    return ranking;
}

}  // namespace mmr
