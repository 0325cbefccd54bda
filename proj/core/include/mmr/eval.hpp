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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mmr/document.hpp"
#include "mmr/embedding.hpp"
#include "mmr/encoder.hpp"
#include "mmr/index.hpp"
#include "mmr/scoring.hpp"
#include "mmr/train.hpp"

namespace mmr {

/// 1 iff gt is among the first k entries. Throws kInput on an empty ranking
/// and kConfig when k == 0.
int recall_at_k(const std::vector<std::string>& ranked, const std::string& gt, std::size_t k);

/// sample_id -> docs whose main entity is the entity shown in the query image,
/// minus the GT doc.
using DistractorMap = std::map<std::string, std::set<std::string>>;

/// Throws kData when a query image key does not name an entity.
DistractorMap build_distractor_map(const Kb& kb, const std::vector<QaSample>& samples);
DistractorMap build_distractor_map(const AugmentedKb& kb, const std::vector<QaSample>& samples);

struct SampleRanking {
    std::string sample_id;
    std::string gt_doc_id;
    Split split = Split::kTrain;
    std::vector<std::string> ranked;
};

/// Fraction of rankings with at least one distractor in the top k. Samples
/// missing from the map count as having no distractors.
double distractor_recall(const std::vector<SampleRanking>& rankings, const DistractorMap& distractors, std::size_t k);

struct ReportRow {
    std::string benchmark;
    std::string split;
    std::string config_flags;
    std::string metric;
    std::size_t k = 0;
    double value = 0.0;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct EvalReport {
    std::vector<ReportRow> rows;

    void append(const EvalReport& other);
    /// Value of the first matching row; throws kInput when absent.
    double value(const std::string& split, const std::string& config_flags, const std::string& metric,
                 std::size_t k) const;
    /// "benchmark,split,config_flags,metric,k,value" header plus one line per row.
    std::string to_csv() const;
    /// Space-aligned table of the same rows.
    std::string to_table() const;
};

class Retriever {
public:
    virtual ~Retriever() = default;
    virtual std::vector<ScoredDoc> retrieve(const FeatureSet& query, std::size_t k) const = 0;
};

class ExactRetriever final : public Retriever {
public:
    explicit ExactRetriever(Corpus corpus, unsigned threads = 1) : corpus_(std::move(corpus)), threads_(threads) {}
    std::vector<ScoredDoc> retrieve(const FeatureSet& query, std::size_t k) const override;
    const Corpus& corpus() const { return corpus_; }

private:
    Corpus corpus_;
    unsigned threads_;
};

class IndexRetriever final : public Retriever {
public:
    IndexRetriever(const RetrievalIndex& index, SearchParams params) : index_(index), params_(params) {}
    std::vector<ScoredDoc> retrieve(const FeatureSet& query, std::size_t k) const override;

private:
    const RetrievalIndex& index_;
    SearchParams params_;
};

/// Encodes every document of the KB under the given flags.
Corpus encode_corpus(const AugmentedKb& kb, const EncoderParams& params, const EmbeddingProvider& provider,
                     DocFlags flags, unsigned threads = 1);

/// One retrieval per sample, `depth` results deep.
std::vector<SampleRanking> rank_samples(const std::vector<QaSample>& samples, const EncoderParams& params,
                                        const EmbeddingProvider& provider, QueryMode mode, const Retriever& retriever,
                                        std::size_t depth, unsigned threads = 1);

struct EvalOptions {
    std::vector<std::size_t> ks{1, 5, 10};
    std::string benchmark = "synthetic";
    std::string config_flags;
    /// Adds distractor_recall rows when set.
    const DistractorMap* distractors = nullptr;
};

/// Recall (and optionally distractor recall) per split plus an "all" row, for
/// every k.
EvalReport evaluate_rankings(const std::vector<SampleRanking>& rankings, const EvalOptions& options);

struct ExperimentConfig {
    EncoderConfig encoder;
    TrainConfig train;
    /// Seed for parameter initialization, shared by every row.
    std::uint64_t init_seed = 0;
    std::vector<std::size_t> ks{5};
    std::string benchmark = "synthetic";
    unsigned threads = 1;
};

/// The four document configurations of the ablation table.
std::vector<DocFlags> default_ablation_rows();

/// Trains one model per row from the same initialization and reports recall
/// per test split.
EvalReport run_ablation(const AugmentedKb& kb, const std::vector<QaSample>& train_samples,
                        const std::vector<QaSample>& test_samples, const std::vector<DocFlags>& rows,
                        const EmbeddingProvider& provider, const ExperimentConfig& config);

/// Trains and evaluates with the query side restricted to `mode`, using the
/// document flags in config.train.flags. Rows are labelled "<mode>:<flags>".
EvalReport run_shortcut_probe(const AugmentedKb& kb, const std::vector<QaSample>& train_samples,
                              const std::vector<QaSample>& test_samples, QueryMode mode,
                              const EmbeddingProvider& provider, const ExperimentConfig& config);
/// Throws kConfig for an unknown mode string.
EvalReport run_shortcut_probe(const AugmentedKb& kb, const std::vector<QaSample>& train_samples,
                              const std::vector<QaSample>& test_samples, const std::string& mode,
                              const EmbeddingProvider& provider, const ExperimentConfig& config);

/// GT and distractor recall for one model per row, from one ranking pass.
EvalReport run_distractor_analysis(const AugmentedKb& kb, const std::vector<QaSample>& train_samples,
                                   const std::vector<QaSample>& test_samples, const std::vector<DocFlags>& rows,
                                   const EmbeddingProvider& provider, const ExperimentConfig& config);

}  // namespace mmr
