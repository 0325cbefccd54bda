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

#include "mmr/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "mmr/errors.hpp"
#include "mmr/parallel.hpp"
#include "mmr/text.hpp"

namespace mmr {

int recall_at_k(const std::vector<std::string>& ranked, const std::string& gt, std::size_t k) {
    if (ranked.empty()) {
        fail(ErrorKind::kInput, "recall on an empty ranking");
    }
    if (k == 0) {
        fail(ErrorKind::kConfig, "recall needs k >= 1");
    }
    const auto end = ranked.begin() + static_cast<std::ptrdiff_t>(std::min(k, ranked.size()));
    return std::find(ranked.begin(), end, gt) != end ? 1 : 0;
}

namespace {

DistractorMap distractors_by_title(const std::map<std::string, std::string>& titles,
                                   const std::vector<QaSample>& samples) {
    std::map<std::string, std::vector<std::string>> by_entity;
    for (const auto& [id, title] : titles) {
        by_entity[normalize_surface(title)].push_back(id);
    }
    DistractorMap out;
    for (const auto& s : samples) {
        const auto entity = entity_of_image_key(s.query_image_key);
        if (!entity) {
            fail(ErrorKind::kData, "sample " + s.sample_id + ": image key '" + s.query_image_key +
                                       "' does not name an entity");
        }
        auto& set = out[s.sample_id];
        if (auto it = by_entity.find(*entity); it != by_entity.end()) {
            for (const auto& id : it->second) {
                if (id != s.gt_doc_id) {
                    set.insert(id);
                }
            }
        }
    }
    return out;
}

}  // namespace

DistractorMap build_distractor_map(const Kb& kb, const std::vector<QaSample>& samples) {
    std::map<std::string, std::string> titles;
    for (const auto& [id, d] : kb) {
        titles.emplace(id, d.title);
    }
    return distractors_by_title(titles, samples);
}

DistractorMap build_distractor_map(const AugmentedKb& kb, const std::vector<QaSample>& samples) {
    std::map<std::string, std::string> titles;
    for (const auto& [id, d] : kb) {
        titles.emplace(id, d.raw.title);
    }
    return distractors_by_title(titles, samples);
}

namespace {

int has_distractor(const SampleRanking& r, const DistractorMap& distractors, std::size_t k) {
    const auto it = distractors.find(r.sample_id);
    if (it == distractors.end() || it->second.empty()) {
        return 0;
    }
    const std::size_t n = std::min(k, r.ranked.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (it->second.contains(r.ranked[i])) {
            return 1;
        }
    }
    return 0;
}

}  // namespace

double distractor_recall(const std::vector<SampleRanking>& rankings, const DistractorMap& distractors, std::size_t k) {
    if (rankings.empty()) {
        return 0.0;
    }
    long hits = 0;
    for (const auto& r : rankings) {
        hits += has_distractor(r, distractors, k);
    }
    return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

void EvalReport::append(const EvalReport& other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }

double EvalReport::value(const std::string& split, const std::string& config_flags, const std::string& metric,
                         std::size_t k) const {
    for (const auto& r : rows) {
        if (r.split == split && r.config_flags == config_flags && r.metric == metric && r.k == k) {
            return r.value;
        }
    }
    fail(ErrorKind::kInput, "report has no row " + split + "/" + config_flags + "/" + metric + "@" + std::to_string(k));
}

namespace {

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "benchmark,split,config_flags,metric,k,value\n";
    for (const auto& r : rows) {
        out << r.benchmark << ',' << r.split << ',' << r.config_flags << ',' << r.metric << ',' << r.k << ','
            << format_value(r.value) << '\n';
    }
    return out.str();
}

std::string EvalReport::to_table() const {
    std::vector<std::vector<std::string>> cells{{"benchmark", "split", "config_flags", "metric", "k", "value"}};
    for (const auto& r : rows) {
        cells.push_back({r.benchmark, r.split, r.config_flags, r.metric, std::to_string(r.k), format_value(r.value)});
    }
    std::vector<std::size_t> width(6, 0);
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            width[c] = std::max(width[c], row[c].size());
        }
    }
    std::ostringstream out;
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << row[c];
            if (c + 1 < row.size()) {
                out << std::string(width[c] - row[c].size() + 2, ' ');
            }
        }
        out << '\n';
    }
    return out.str();
}

std::vector<ScoredDoc> ExactRetriever::retrieve(const FeatureSet& query, std::size_t k) const {
    return rank_exact(query, corpus_, k, threads_);
}

std::vector<ScoredDoc> IndexRetriever::retrieve(const FeatureSet& query, std::size_t k) const {
    SearchParams p = params_;
    p.k = k;
    p.candidate_doc_cap = std::max(p.candidate_doc_cap, k);
    return index_.search(query, p);
}

Corpus encode_corpus(const AugmentedKb& kb, const EncoderParams& params, const EmbeddingProvider& provider,
                     DocFlags flags, unsigned threads) {
    std::vector<const AugmentedDocument*> docs;
    for (const auto& [id, d] : kb) {
        docs.push_back(&d);
    }
    std::vector<std::optional<FeatureSet>> encoded(docs.size());
    parallel_for(docs.size(), threads,
                 [&](std::size_t i) { encoded[i] = encode_document(*docs[i], params, provider, flags); });
    Corpus corpus;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        corpus.emplace(docs[i]->raw.doc_id, std::move(*encoded[i]));
    }
    return corpus;
}

std::vector<SampleRanking> rank_samples(const std::vector<QaSample>& samples, const EncoderParams& params,
                                        const EmbeddingProvider& provider, QueryMode mode, const Retriever& retriever,
                                        std::size_t depth, unsigned threads) {
    std::vector<SampleRanking> out(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) {
        const auto& s = samples[i];
        const auto q = encode_query({s.question, s.query_image_key}, params, provider, mode);
        auto& r = out[i];
        r.sample_id = s.sample_id;
        r.gt_doc_id = s.gt_doc_id;
        r.split = s.split;
        for (auto& d : retriever.retrieve(q, depth)) {
            r.ranked.push_back(std::move(d.doc_id));
        }
    });
    return out;
}

EvalReport evaluate_rankings(const std::vector<SampleRanking>& rankings, const EvalOptions& options) {
    std::map<std::string, std::vector<const SampleRanking*>> groups;
    for (const auto& r : rankings) {
        groups[to_string(r.split)].push_back(&r);
        groups["all"].push_back(&r);
    }
    EvalReport report;
    for (const char* split : {"train", "seen", "unseen", "all"}) {
        const auto it = groups.find(split);
        if (it == groups.end()) {
            continue;
        }
        const auto& members = it->second;
        const double n = static_cast<double>(members.size());
        for (std::size_t k : options.ks) {
            long hits = 0;
            for (const auto* r : members) {
                hits += r->ranked.empty() ? 0 : recall_at_k(r->ranked, r->gt_doc_id, k);
            }
            report.rows.push_back({options.benchmark, split, options.config_flags, "recall", k, hits / n});
            if (options.distractors != nullptr) {
                long dh = 0;
                for (const auto* r : members) {
                    dh += has_distractor(*r, *options.distractors, k);
                }
                report.rows.push_back({options.benchmark, split, options.config_flags, "distractor_recall", k, dh / n});
            }
        }
    }
    return report;
}

std::vector<DocFlags> default_ablation_rows() {
    return {DocFlags::none(), {true, false, false}, {true, true, false}, DocFlags::all()};
}

namespace {

std::size_t max_k(const std::vector<std::size_t>& ks) {
    if (ks.empty()) {
        fail(ErrorKind::kConfig, "evaluation needs at least one k");
    }
    return *std::max_element(ks.begin(), ks.end());
}

std::vector<SampleRanking> train_and_rank(const AugmentedKb& kb, const std::vector<QaSample>& train_samples,
                                          const std::vector<QaSample>& test_samples, DocFlags flags, QueryMode mode,
                                          const EmbeddingProvider& provider, const ExperimentConfig& config) {
    EncoderParams params = EncoderParams::init(config.encoder, config.init_seed);
    TrainConfig tc = config.train;
    tc.flags = flags;
    tc.query_mode = mode;
    tc.threads = config.threads;
    train(params, train_samples, kb, provider, tc);
    const ExactRetriever retriever(encode_corpus(kb, params, provider, flags, config.threads));
    return rank_samples(test_samples, params, provider, mode, retriever, max_k(config.ks), config.threads);
}

}  // namespace

EvalReport run_ablation(const AugmentedKb& kb, const std::vector<QaSample>& train_samples,
                        const std::vector<QaSample>& test_samples, const std::vector<DocFlags>& rows,
                        const EmbeddingProvider& provider, const ExperimentConfig& config) {
    EvalReport report;
    for (const auto& flags : rows) {
        const auto rankings =
            train_and_rank(kb, train_samples, test_samples, flags, QueryMode::kImageText, provider, config);
        report.append(evaluate_rankings(rankings, {config.ks, config.benchmark, flags.label(), nullptr}));
    }
    return report;
}

EvalReport run_shortcut_probe(const AugmentedKb& kb, const std::vector<QaSample>& train_samples,
                              const std::vector<QaSample>& test_samples, QueryMode mode,
                              const EmbeddingProvider& provider, const ExperimentConfig& config) {
    const auto flags = config.train.flags;
    const auto rankings = train_and_rank(kb, train_samples, test_samples, flags, mode, provider, config);
    return evaluate_rankings(rankings, {config.ks, config.benchmark, to_string(mode) + ":" + flags.label(), nullptr});
}

EvalReport run_shortcut_probe(const AugmentedKb& kb, const std::vector<QaSample>& train_samples,
                              const std::vector<QaSample>& test_samples, const std::string& mode,
                              const EmbeddingProvider& provider, const ExperimentConfig& config) {
    return run_shortcut_probe(kb, train_samples, test_samples, parse_query_mode(mode), provider, config);
}

EvalReport run_distractor_analysis(const AugmentedKb& kb, const std::vector<QaSample>& train_samples,
                                   const std::vector<QaSample>& test_samples, const std::vector<DocFlags>& rows,
                                   const EmbeddingProvider& provider, const ExperimentConfig& config) {
    const auto distractors = build_distractor_map(kb, test_samples);
    EvalReport report;
    for (const auto& flags : rows) {
        const auto rankings =
            train_and_rank(kb, train_samples, test_samples, flags, QueryMode::kImageText, provider, config);
        report.append(evaluate_rankings(rankings, {config.ks, config.benchmark, flags.label(), &distractors}));
    }
    return report;
}

}  // namespace mmr
