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

#include "mmr/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "mmr/errors.hpp"
#include "mmr/text.hpp"

namespace mmr {

namespace {

double idf_value(std::size_t n, std::size_t df) {
    const double nd = static_cast<double>(n);
    const double dd = static_cast<double>(df);
    return std::log(1.0 + (nd - dd + 0.5) / (dd + 0.5));
}

std::vector<std::pair<std::string, std::string>> bodies_of(const Kb& kb) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [id, doc] : kb) {
        out.emplace_back(id, doc.body);
    }
    return out;
}

}  // namespace

Bm25Index::Bm25Index(const Kb& kb, Bm25Params params) : Bm25Index(bodies_of(kb), params) {}

Bm25Index::Bm25Index(const std::vector<std::pair<std::string, std::string>>& bodies, Bm25Params params)
    : params_(params) {
    double total = 0.0;
    for (const auto& [id, body] : bodies) {
        const auto slot = static_cast<std::uint32_t>(doc_ids_.size());
        if (!doc_slot_.emplace(id, slot).second) {
            fail(ErrorKind::kInput, "duplicate doc id " + id);
        }
        doc_ids_.push_back(id);
        const auto terms = tokenize(body);
        doc_len_.push_back(static_cast<double>(terms.size()));
        total += static_cast<double>(terms.size());
        std::map<std::string, std::uint32_t> tf;
        for (const auto& t : terms) {
            ++tf[t];
        }
        for (const auto& [t, c] : tf) {
            postings_[t].push_back({slot, c});
        }
    }
    avgdl_ = doc_ids_.empty() ? 0.0 : total / static_cast<double>(doc_ids_.size());
}

double Bm25Index::idf(const std::string& term) const {
    const auto it = postings_.find(term);
    return idf_value(doc_ids_.size(), it == postings_.end() ? 0 : it->second.size());
}

double Bm25Index::term_score(double idf, double tf, double dl) const {
    const double norm = avgdl_ > 0.0 ? dl / avgdl_ : 0.0;
    return idf * tf * (params_.k1 + 1.0) / (tf + params_.k1 * (1.0 - params_.b + params_.b * norm));
}

std::vector<std::string> Bm25Index::unique_terms(const std::vector<std::string>& terms) const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& t : terms) {
        if (seen.insert(t).second) {
            out.push_back(t);
        }
    }
    return out;
}

double Bm25Index::score(const std::vector<std::string>& query_terms, const std::string& doc_id) const {
    if (doc_ids_.empty()) {
        fail(ErrorKind::kState, "BM25 index is empty");
    }
    const auto slot = doc_slot_.find(doc_id);
    if (slot == doc_slot_.end()) {
        fail(ErrorKind::kInput, "unknown doc id " + doc_id);
    }
    double s = 0.0;
    for (const auto& t : unique_terms(query_terms)) {
        const auto it = postings_.find(t);
        if (it == postings_.end()) {
            continue;
        }
        const auto& list = it->second;
        const auto p = std::lower_bound(list.begin(), list.end(), slot->second,
                                        [](const Posting& a, std::uint32_t d) { return a.doc < d; });
        if (p != list.end() && p->doc == slot->second) {
            s += term_score(idf_value(doc_ids_.size(), list.size()), p->tf, doc_len_[slot->second]);
        }
    }
    return s;
}

std::vector<ScoredDoc> Bm25Index::top_k(const std::string& query, std::size_t k) const {
    if (doc_ids_.empty()) {
        fail(ErrorKind::kState, "BM25 index is empty");
    }
    std::vector<double> scores(doc_ids_.size(), 0.0);
    for (const auto& t : unique_terms(tokenize(query))) {
        const auto it = postings_.find(t);
        if (it == postings_.end()) {
            continue;
        }
        const double w = idf_value(doc_ids_.size(), it->second.size());
        for (const auto& p : it->second) {
            scores[p.doc] += term_score(w, p.tf, doc_len_[p.doc]);
        }
    }
    std::vector<ScoredDoc> ranking;
    ranking.reserve(doc_ids_.size());
    for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
        if (scores[d] > 0.0) {
            ranking.push_back({doc_ids_[d], scores[d]});
        }
    }
    sort_ranking(ranking);
    ranking.resize(std::min(k, ranking.size()));
    return ranking;
}

double bm25_score(const std::vector<std::string>& query_terms, const std::vector<std::string>& doc_terms,
                  const std::unordered_map<std::string, std::size_t>& df, std::size_t num_docs, double avgdl,
                  Bm25Params params) {
    if (num_docs == 0) {
        fail(ErrorKind::kState, "BM25 corpus statistics are empty");
    }
    std::map<std::string, double> tf;
    for (const auto& t : doc_terms) {
        tf[t] += 1.0;
    }
    const double dl = static_cast<double>(doc_terms.size());
    const double norm = avgdl > 0.0 ? dl / avgdl : 0.0;
    double s = 0.0;
    std::set<std::string> seen;
    for (const auto& t : query_terms) {
        if (!seen.insert(t).second) {
            continue;
        }
        const auto f = tf.find(t);
        if (f == tf.end()) {
            continue;
        }
        const auto d = df.find(t);
        const double w = idf_value(num_docs, d == df.end() ? 0 : d->second);
        s += w * f->second * (params.k1 + 1.0) / (f->second + params.k1 * (1.0 - params.b + params.b * norm));
    }
    return s;
}

}  // namespace mmr
