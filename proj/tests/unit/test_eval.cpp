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

#include <gtest/gtest.h>

#include <algorithm>

#include "mmr/errors.hpp"
#include "mmr/eval.hpp"
#include "mmr/synth.hpp"
#include "mmr_test/fixtures.hpp"

namespace mmr {
namespace {

using Ranked = std::vector<std::string>;

TEST(Recall, Examples) {
    const Ranked r{"a", "b", "gt", "c", "d"};
    EXPECT_EQ(recall_at_k(r, "gt", 5), 1);
    EXPECT_EQ(recall_at_k(r, "gt", 3), 1);
    EXPECT_EQ(recall_at_k(r, "gt", 2), 0);
    for (std::size_t k = 1; k <= 8; ++k) EXPECT_EQ(recall_at_k(r, "zz", k), 0);
    // k beyond the ranking length just sees the whole ranking.
    EXPECT_EQ(recall_at_k(r, "d", 50), 1);
}

TEST(Recall, Errors) {
    EXPECT_MMR_ERROR(recall_at_k({}, "gt", 5), ErrorKind::kInput);
    EXPECT_MMR_ERROR(recall_at_k({"gt"}, "gt", 0), ErrorKind::kConfig);
}

Ranked random_ranking(Rng& rng, std::size_t n, std::size_t pool) {
    Ranked out;
    while (out.size() < n) {
        const std::string id = "d" + std::to_string(rng.below(pool));
        if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    }
    return out;
}

TEST(Recall, MonotoneInK) {
    Rng rng(41);
    for (int c = 0; c < 1000; ++c) {
        const auto r = random_ranking(rng, 1 + rng.below(20), 40);
        const std::string gt = "d" + std::to_string(rng.below(40));
        int prev = 0;
        for (std::size_t k = 1; k <= 25; ++k) {
            const int v = recall_at_k(r, gt, k);
            ASSERT_GE(v, prev);
            prev = v;
        }
    }
}

RawDocument titled(const std::string& id, const std::string& title) { return {id, title, title + ".", image_key_for(title)}; }

QaSample sample(const std::string& id, const std::string& entity, const std::string& gt) {
    QaSample s;
    s.sample_id = id;
    s.query_image_key = image_key_for(entity);
    s.gt_doc_id = gt;
    s.question = "which one?";
    return s;
}

TEST(DistractorMap, Examples) {
    Kb kb;
    for (const auto& d : {titled("e", "Echo"), titled("f", "Foxtrot"), titled("g", "Golf")}) kb[d.doc_id] = d;
    const auto m = build_distractor_map(kb, {sample("s1", "Echo", "g"), sample("s2", "Kilo", "g"),
                                             sample("s3", "Golf", "g")});
    EXPECT_EQ(m.at("s1"), std::set<std::string>{"e"});
    EXPECT_TRUE(m.at("s2").empty());
    EXPECT_TRUE(m.at("s3").empty());
    QaSample bad = sample("s4", "Echo", "g");
    bad.query_image_key = "photo.jpg";
    EXPECT_MMR_ERROR(build_distractor_map(kb, {bad}), ErrorKind::kData);
}

SampleRanking ranking(const std::string& id, const std::string& gt, Ranked r, Split split = Split::kSeen) {
    return {id, gt, split, std::move(r)};
}

TEST(DistractorRecall, Examples) {
    const DistractorMap m{{"a", {"x"}}, {"b", {"y", "z"}}};
    const std::vector<SampleRanking> headed{ranking("a", "g", {"x", "g"}), ranking("b", "g", {"z", "g"})};
    EXPECT_DOUBLE_EQ(distractor_recall(headed, m, 1), 1.0);
    const DistractorMap empty{{"a", {}}, {"b", {}}};
    EXPECT_DOUBLE_EQ(distractor_recall(headed, empty, 5), 0.0);
    EXPECT_DOUBLE_EQ(distractor_recall(headed, {}, 5), 0.0);
    const std::vector<SampleRanking> mixed{ranking("a", "g", {"g", "x"}), ranking("b", "g", {"g", "q"})};
    EXPECT_DOUBLE_EQ(distractor_recall(mixed, m, 1), 0.0);
    EXPECT_DOUBLE_EQ(distractor_recall(mixed, m, 2), 0.5);
}

std::vector<SampleRanking> random_rankings(Rng& rng, std::size_t n, DistractorMap* map) {
    std::vector<SampleRanking> out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string id = "s" + std::to_string(i);
        const auto split = static_cast<Split>(rng.below(3));
        out.push_back(ranking(id, "d" + std::to_string(rng.below(30)), random_ranking(rng, 1 + rng.below(12), 30),
                              split));
        if (map != nullptr) {
            auto& set = (*map)[id];
            for (std::size_t j = rng.below(4); j > 0; --j) set.insert("d" + std::to_string(rng.below(30)));
        }
    }
    return out;
}

TEST(DistractorRecall, MonotoneInK) {
    Rng rng(42);
    for (int c = 0; c < 1000; ++c) {
        DistractorMap m;
        const auto rs = random_rankings(rng, 1 + rng.below(8), &m);
        double prev = 0.0;
        for (std::size_t k = 1; k <= 14; ++k) {
            const double v = distractor_recall(rs, m, k);
            ASSERT_GE(v, prev);
            ASSERT_LE(v, 1.0);
            prev = v;
        }
    }
}

TEST(EvaluateRankings, AggregateIsMeanOfIndicators) {
    Rng rng(43);
    for (int c = 0; c < 1000; ++c) {
        DistractorMap m;
        const auto rs = random_rankings(rng, 1 + rng.below(10), &m);
        EvalOptions opt;
        opt.ks = {1, 3, 5, 10};
        opt.distractors = &m;
        const auto report = evaluate_rankings(rs, opt);
        for (std::size_t k : opt.ks) {
            int hits = 0;
            for (const auto& r : rs) hits += recall_at_k(r.ranked, r.gt_doc_id, k);
            ASSERT_EQ(report.value("all", "", "recall", k), static_cast<double>(hits) / static_cast<double>(rs.size()));
            ASSERT_EQ(report.value("all", "", "distractor_recall", k), distractor_recall(rs, m, k));
        }
        for (const auto& row : report.rows) {
            ASSERT_GE(row.value, 0.0);
            ASSERT_LE(row.value, 1.0);
        }
        // Monotone in K within every split and metric.
        for (std::size_t i = 0; i + 1 < report.rows.size(); ++i) {
            for (std::size_t j = i + 1; j < report.rows.size(); ++j) {
                const auto& a = report.rows[i];
                const auto& b = report.rows[j];
                if (a.split == b.split && a.metric == b.metric && a.k < b.k) {
                    ASSERT_LE(a.value, b.value);
                }
            }
        }
    }
}

TEST(EvaluateRankings, SplitRows) {
    const std::vector<SampleRanking> rs{ranking("a", "g", {"g"}, Split::kSeen), ranking("b", "g", {"x"}, Split::kUnseen),
                                        ranking("c", "g", {"x", "g"}, Split::kUnseen)};
    EvalOptions opt;
    opt.ks = {1, 2};
    opt.config_flags = "MI";
    const auto report = evaluate_rankings(rs, opt);
    EXPECT_DOUBLE_EQ(report.value("seen", "MI", "recall", 1), 1.0);
    EXPECT_DOUBLE_EQ(report.value("unseen", "MI", "recall", 1), 0.0);
    EXPECT_DOUBLE_EQ(report.value("unseen", "MI", "recall", 2), 0.5);
    EXPECT_DOUBLE_EQ(report.value("all", "MI", "recall", 2), 2.0 / 3.0);
    EXPECT_MMR_ERROR(report.value("train", "MI", "recall", 1), ErrorKind::kInput);
    EXPECT_MMR_ERROR(report.value("all", "MI", "recall", 7), ErrorKind::kInput);
}

TEST(EvalReport, CsvAndTable) {
    EvalReport r;
    r.rows.push_back({"synthetic", "seen", "MI+MMF", "recall", 5, 0.25});
    EvalReport other;
    other.rows.push_back({"synthetic", "all", "none", "distractor_recall", 1, 1.0});
    r.append(other);
    const std::string csv = r.to_csv();
    EXPECT_EQ(csv.rfind("benchmark,split,config_flags,metric,k,value\n", 0), 0u);
    EXPECT_NE(csv.find("synthetic,seen,MI+MMF,recall,5,0.25"), std::string::npos);
    EXPECT_NE(csv.find("synthetic,all,none,distractor_recall,1,1"), std::string::npos);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    const std::string table = r.to_table();
    EXPECT_NE(table.find("distractor_recall"), std::string::npos);
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), std::count(csv.begin(), csv.end(), '\n'));
}

class EvalPipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        SynthConfig sc;
        sc.n_docs = 40;
        sc.n_train = 16;
        sc.n_test_seen = 8;
        sc.n_test_unseen = 8;
        sc.seed = 6;
        data_ = new SynthData(generate_synthetic(sc));
    }
    static void TearDownTestSuite() {
        delete data_;
        data_ = nullptr;
    }
    static ExperimentConfig small() {
        ExperimentConfig c;
        c.encoder = testing::tiny_config();
        c.train.epochs = 1;
        c.train.batch_size = 4;
        c.init_seed = 3;
        return c;
    }
    static SynthData* data_;
};

SynthData* EvalPipeline::data_ = nullptr;

TEST_F(EvalPipeline, RetrieversAgree) {
    const auto c = small();
    const SeededEmbeddingProvider provider(c.encoder.text_dim, c.encoder.image_dim, c.encoder.num_patches);
    const auto params = EncoderParams::init(c.encoder, 5);
    const Corpus corpus = encode_corpus(data_->augmented, params, provider, DocFlags::all());
    EXPECT_EQ(corpus.size(), data_->augmented.size());
    EXPECT_EQ(corpus, encode_corpus(data_->augmented, params, provider, DocFlags::all(), 4));

    IndexConfig ic;
    ic.lossless = true;
    std::size_t total = 0;
    for (const auto& [id, fs] : corpus) total += fs.size();
    ic.k_centroids = default_num_centroids(total);
    const auto index = RetrievalIndex::build(corpus, ic);
    SearchParams sp;
    sp.nprobe = index.num_centroids();
    sp.candidate_doc_cap = corpus.size();
    const ExactRetriever exact(corpus);
    const IndexRetriever via_index(index, sp);
    const auto test = data_->benchmark.test();
    const auto a = rank_samples(test, params, provider, QueryMode::kImageText, exact, 10);
    const auto b = rank_samples(test, params, provider, QueryMode::kImageText, via_index, 10);
    ASSERT_EQ(a.size(), test.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].ranked, b[i].ranked);
        EXPECT_EQ(a[i].sample_id, test[i].sample_id);
        EXPECT_EQ(a[i].split, test[i].split);
        EXPECT_EQ(a[i].ranked.size(), 10u);
    }
    const auto threaded = rank_samples(test, params, provider, QueryMode::kImageText, exact, 10, 4);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].ranked, threaded[i].ranked);
}

TEST_F(EvalPipeline, AblationIsDeterministic) {
    const auto c = small();
    const SeededEmbeddingProvider provider(c.encoder.text_dim, c.encoder.image_dim, c.encoder.num_patches);
    const auto test = data_->benchmark.test();
    const auto rows = std::vector<DocFlags>{DocFlags::none(), DocFlags::none()};
    const auto r = run_ablation(data_->augmented, data_->benchmark.train, test, rows, provider, c);
    ASSERT_EQ(r.rows.size(), 6u);  // seen, unseen, all per row
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(r.rows[i], r.rows[i + 3]);
        EXPECT_EQ(r.rows[i].config_flags, "none");
    }
    EXPECT_EQ(default_ablation_rows().size(), 4u);
    EXPECT_EQ(default_ablation_rows().front(), DocFlags::none());
    EXPECT_EQ(default_ablation_rows().back(), DocFlags::all());
}

TEST_F(EvalPipeline, ProbeModes) {
    const auto c = small();
    const SeededEmbeddingProvider provider(c.encoder.text_dim, c.encoder.image_dim, c.encoder.num_patches);
    const auto test = data_->benchmark.test();
    const auto r = run_shortcut_probe(data_->augmented, data_->benchmark.train, test, "image_only", provider, c);
    EXPECT_EQ(r.rows.front().config_flags, "image_only:" + c.train.flags.label());
    EXPECT_MMR_ERROR(run_shortcut_probe(data_->augmented, data_->benchmark.train, test, "text_only", provider, c),
                     ErrorKind::kConfig);
}

TEST_F(EvalPipeline, DistractorAnalysisRows) {
    const auto c = small();
    const SeededEmbeddingProvider provider(c.encoder.text_dim, c.encoder.image_dim, c.encoder.num_patches);
    const auto test = data_->benchmark.test();
    const auto r = run_distractor_analysis(data_->augmented, data_->benchmark.train, test,
                                           {DocFlags::none(), DocFlags::all()}, provider, c);
    for (const auto& flags : {DocFlags::none(), DocFlags::all()}) {
        for (std::size_t k : c.ks) {
            const double gt = r.value("unseen", flags.label(), "recall", k);
            const double dr = r.value("unseen", flags.label(), "distractor_recall", k);
            EXPECT_GE(gt, 0.0);
            EXPECT_LE(dr, 1.0);
        }
    }
}

}  // namespace
}  // namespace mmr
