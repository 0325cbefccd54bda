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
#include <cmath>
#include <numeric>

#include "mmr/embedding.hpp"
#include "mmr/errors.hpp"
#include "mmr/synth.hpp"
#include "mmr/train.hpp"
#include "mmr_test/fixtures.hpp"
#include "mmr_test/gradcheck.hpp"

namespace mmr {
namespace {

using testing::grad_check;
using testing::make_grad_batch;
using testing::tiny_config;

FeatureSet repeated(const std::vector<double>& row, std::size_t n) {
    return FeatureSet::from_rows(std::vector<std::vector<double>>(n, row));
}

TEST(ContrastiveLoss, UniformScoresGiveLogB) {
    for (std::size_t b : {2u, 3u, 8u}) {
        std::vector<FeatureSet> q(b, FeatureSet::from_rows({{1, 0}})), d(b, FeatureSet::from_rows({{0.6, 0.8}}));
        EXPECT_NEAR(contrastive_loss(q, d), std::log(static_cast<double>(b)), 1e-12);
    }
}

TEST(ContrastiveLoss, SymmetricPairGivesLog2) {
    const std::vector<FeatureSet> q{FeatureSet::from_rows({{1, 0}}), FeatureSet::from_rows({{0, 1}})};
    const std::vector<FeatureSet> d{FeatureSet::from_rows({{0.6, 0.8}}), FeatureSet::from_rows({{0.8, 0.6}})};
    // Docs equidistant from both queries.
    const std::vector<FeatureSet> e{FeatureSet::from_rows({{std::sqrt(0.5), std::sqrt(0.5)}}),
                                    FeatureSet::from_rows({{std::sqrt(0.5), std::sqrt(0.5)}})};
    EXPECT_NEAR(contrastive_loss(q, e), std::log(2.0), 1e-12);
    EXPECT_GT(contrastive_loss(q, d), 0.0);
}

TEST(ContrastiveLoss, DominantPositiveApproachesZero) {
    std::vector<FeatureSet> q, d;
    for (int i = 0; i < 3; ++i) {
        std::vector<double> e(3, 0.0);
        e[i] = 1.0;
        q.push_back(repeated(e, 60));
        d.push_back(FeatureSet::from_rows({e}));
    }
    EXPECT_LT(contrastive_loss(q, d), 1e-20);
}

TEST(ContrastiveLoss, Errors) {
    const std::vector<FeatureSet> one{FeatureSet::from_rows({{1, 0}})};
    const std::vector<FeatureSet> two(2, FeatureSet::from_rows({{1, 0}}));
    EXPECT_MMR_ERROR(contrastive_loss(one, one), ErrorKind::kConfig);
    EXPECT_MMR_ERROR(contrastive_loss(two, std::vector<FeatureSet>(3, two[0])), ErrorKind::kShape);
}

TEST(ContrastiveLoss, GradMatchesLossAndPermutes) {
    Rng rng(4);
    for (int c = 0; c < 200; ++c) {
        const std::size_t b = 2 + rng.below(5);
        std::vector<FeatureSet> q, d;
        for (std::size_t i = 0; i < b; ++i) {
            q.push_back(testing::random_set(rng, 1 + rng.below(4), 5));
            d.push_back(testing::random_set(rng, 1 + rng.below(4), 5));
        }
        const double loss = contrastive_loss(q, d);
        EXPECT_NEAR(contrastive_loss_grad(q, d).loss, loss, 1e-12);
        std::vector<std::size_t> perm(b);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        std::vector<FeatureSet> qp, dp;
        for (std::size_t i : perm) {
            qp.push_back(q[i]);
            dp.push_back(d[i]);
        }
        EXPECT_NEAR(contrastive_loss(qp, dp), loss, 1e-12);
    }
}

TEST(ContrastiveLoss, GroupMaskDropsDuplicatePositives) {
    const std::vector<FeatureSet> q{FeatureSet::from_rows({{1, 0}}), FeatureSet::from_rows({{1, 0}}),
                                    FeatureSet::from_rows({{0, 1}})};
    const std::vector<FeatureSet> d{FeatureSet::from_rows({{1, 0}}), FeatureSet::from_rows({{1, 0}}),
                                    FeatureSet::from_rows({{0, 1}})};
    const std::vector<std::string> groups{"a", "a", "b"};
    const double plain = contrastive_loss_grad(q, d).loss;
    const double masked = contrastive_loss_grad(q, d, &groups).loss;
    EXPECT_LT(masked, plain);
    // Rows 0 and 1 see only {self, doc 2}: -log(e / (e + 1)).
    const double row01 = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
    const double row2 = -std::log(std::exp(1.0) / (std::exp(1.0) + 2.0));
    EXPECT_NEAR(masked, (2 * row01 + row2) / 3, 1e-12);
}

class GradientCheck : public ::testing::TestWithParam<DocFlags> {};

TEST_P(GradientCheck, AnalyticMatchesCentralDifferences) {
    const EncoderConfig cfg = tiny_config();
    SeededEmbeddingProvider prov(cfg.text_dim, cfg.image_dim, cfg.num_patches);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        EncoderParams p = EncoderParams::init(cfg, seed);
        Rng rng(seed + 50);
        for (Eigen::Index i = 0; i < p.ete.size(); ++i) p.ete(i) = 0.3 * rng.normal();
        const auto batch = make_grad_batch(rng, 3);
        TrainConfig tc;
        tc.flags = GetParam();
        const auto r = grad_check(p, batch.examples, prov, tc);
        EXPECT_LT(r.max_rel_error, 1e-3) << "worst tensor " << r.worst_tensor << " seed " << seed;
        EXPECT_GT(r.checked, p.num_values() / 2);
        EXPECT_GT(r.nonzero, 0u);
    }
}

INSTANTIATE_TEST_SUITE_P(AllFlagSettings, GradientCheck,
                         ::testing::Values(DocFlags::none(), DocFlags{true, false, false}, DocFlags{true, true, false},
                                           DocFlags::all()),
                         [](const auto& info) {
                             std::string s = info.param.label();
                             std::replace(s.begin(), s.end(), '+', '_');
                             return s;
                         });

TEST(Gradients, ImageOnlyWithoutTextTrainsTheNullToken) {
    const EncoderConfig cfg = tiny_config();
    SeededEmbeddingProvider prov(cfg.text_dim, cfg.image_dim, cfg.num_patches);
    const EncoderParams p = EncoderParams::init(cfg, 9);
    Rng rng(9);
    const auto batch = make_grad_batch(rng, 3, true);
    TrainConfig tc;
    tc.query_mode = QueryMode::kImageOnly;
    const auto r = grad_check(p, batch.examples, prov, tc);
    EXPECT_LT(r.max_rel_error, 1e-3) << r.worst_tensor;
    const auto lg = loss_and_grad(p, batch.examples, prov, tc);
    EXPECT_GT(lg.grads.null_text.norm(), 0.0);
}

TEST(Gradients, EteOffGivesExactlyZeroThetaGradient) {
    const EncoderConfig cfg = tiny_config();
    SeededEmbeddingProvider prov(cfg.text_dim, cfg.image_dim, cfg.num_patches);
    const EncoderParams p = EncoderParams::init(cfg, 2);
    Rng rng(2);
    const auto batch = make_grad_batch(rng, 4);
    TrainConfig tc;
    tc.flags = {true, true, false};
    EXPECT_EQ(loss_and_grad(p, batch.examples, prov, tc).grads.ete, Vector::Zero(cfg.text_dim));
    tc.flags = DocFlags::all();
    EXPECT_GT(loss_and_grad(p, batch.examples, prov, tc).grads.ete.norm(), 0.0);
}

TEST(Gradients, MiOffIgnoresRelatedImages) {
    const EncoderConfig cfg = tiny_config();
    SeededEmbeddingProvider prov(cfg.text_dim, cfg.image_dim, cfg.num_patches);
    const EncoderParams p = EncoderParams::init(cfg, 3);
    Rng rng(3);
    auto batch = make_grad_batch(rng, 3);
    TrainConfig tc;
    tc.flags = {false, true, true};
    const auto with_related = loss_and_grad(p, batch.examples, prov, tc);
    auto bare_docs = batch.docs;
    for (auto& d : bare_docs) d.related.clear();
    auto bare = batch.examples;
    for (std::size_t i = 0; i < bare.size(); ++i) bare[i].doc = &bare_docs[i];
    const auto without = loss_and_grad(p, bare, prov, tc);
    EXPECT_EQ(with_related.loss, without.loss);
    EXPECT_TRUE(with_related.grads == without.grads);
}

TEST(Gradients, SmallStepAlongNegativeGradientDescends) {
    const EncoderConfig cfg = tiny_config();
    SeededEmbeddingProvider prov(cfg.text_dim, cfg.image_dim, cfg.num_patches);
    TrainConfig tc;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EncoderParams p = EncoderParams::init(cfg, seed);
        Rng rng(seed);
        const auto batch = make_grad_batch(rng, 4);
        const auto lg = loss_and_grad(p, batch.examples, prov, tc);
        p.add_scaled(lg.grads, -1e-4 / std::sqrt(lg.grads.squared_norm()));
        EXPECT_LE(batch_loss(p, batch.examples, prov, tc), lg.loss);
    }
}

TEST(Gradients, NonFiniteParamsRejected) {
    const EncoderConfig cfg = tiny_config();
    SeededEmbeddingProvider prov(cfg.text_dim, cfg.image_dim, cfg.num_patches);
    EncoderParams p = EncoderParams::init(cfg, 1);
    p.text_proj.w1(0, 0) = std::numeric_limits<double>::infinity();
    Rng rng(1);
    const auto batch = make_grad_batch(rng, 2);
    EXPECT_MMR_ERROR(loss_and_grad(p, batch.examples, prov, TrainConfig{}), ErrorKind::kNumeric);
}

struct TrainLoop : ::testing::Test {
    static void SetUpTestSuite() {
        SynthConfig sc;
        sc.seed = 12;
        data_ = new SynthData(generate_synthetic(sc));
    }
    static void TearDownTestSuite() { delete data_; }
    static SynthData* data_;
    EncoderConfig cfg;
    SeededEmbeddingProvider prov{cfg.text_dim, cfg.image_dim, cfg.num_patches};

    std::vector<QaSample> subset(std::size_t n) const {
        return {data_->benchmark.train.begin(), data_->benchmark.train.begin() + static_cast<std::ptrdiff_t>(n)};
    }
};
SynthData* TrainLoop::data_ = nullptr;

TEST_F(TrainLoop, ZeroEpochsLeavesParamsUnchanged) {
    EncoderParams p = EncoderParams::init(cfg, 1);
    const EncoderParams before = p;
    TrainConfig tc;
    tc.epochs = 0;
    const auto stats = train(p, subset(16), data_->augmented, prov, tc);
    EXPECT_EQ(stats.steps, 0u);
    EXPECT_TRUE(p == before);
    EXPECT_EQ(stats.checksum, before.checksum());
}

TEST_F(TrainLoop, SameSeedSameChecksumAnyThreadCount) {
    TrainConfig tc;
    tc.seed = 4;
    EncoderParams a = EncoderParams::init(cfg, 1);
    EncoderParams b = EncoderParams::init(cfg, 1);
    const auto sa = train(a, subset(40), data_->augmented, prov, tc);
    tc.threads = 4;
    const auto sb = train(b, subset(40), data_->augmented, prov, tc);
    EXPECT_EQ(sa.checksum, sb.checksum);
    EXPECT_EQ(sa.losses, sb.losses);
    EXPECT_EQ(sa.steps, 5u);
}

TEST_F(TrainLoop, InputOrderDoesNotMatter) {
    TrainConfig tc;
    tc.seed = 8;
    auto samples = subset(24);
    EncoderParams a = EncoderParams::init(cfg, 1);
    const auto sa = train(a, samples, data_->augmented, prov, tc);
    std::reverse(samples.begin(), samples.end());
    EncoderParams b = EncoderParams::init(cfg, 1);
    const auto sb = train(b, samples, data_->augmented, prov, tc);
    auto la = sa.losses, lb = sb.losses;
    std::sort(la.begin(), la.end());
    std::sort(lb.begin(), lb.end());
    EXPECT_EQ(la, lb);
    EXPECT_EQ(sa.checksum, sb.checksum);
}

TEST_F(TrainLoop, TrailingSingletonBatchSkipped) {
    TrainConfig tc;
    EncoderParams p = EncoderParams::init(cfg, 1);
    EXPECT_EQ(train(p, subset(17), data_->augmented, prov, tc).steps, 2u);
}

TEST_F(TrainLoop, DefaultsReduceLoss) {
    TrainConfig tc;
    tc.seed = 1;
    EncoderParams p = EncoderParams::init(cfg, 1);
    // A fixed probe set of batches, scored before and after training.
    std::vector<std::vector<TrainExample>> probes;
    const auto& test = data_->benchmark.test_seen;
    for (std::size_t s = 0; s + 8 <= test.size(); s += 8) {
        std::vector<TrainExample> b;
        for (std::size_t i = s; i < s + 8; ++i)
            b.push_back({{test[i].question, test[i].query_image_key}, &data_->augmented.at(test[i].gt_doc_id)});
        probes.push_back(b);
    }
    auto mean_loss = [&](const EncoderParams& params) {
        double total = 0;
        for (const auto& b : probes) total += batch_loss(params, b, prov, tc);
        return total / static_cast<double>(probes.size());
    };
    const double before = mean_loss(p);
    const auto stats = train(p, data_->benchmark.train, data_->augmented, prov, tc);
    EXPECT_EQ(stats.steps, data_->benchmark.train.size() / 8);
    EXPECT_LT(mean_loss(p), before);
}

TEST_F(TrainLoop, Errors) {
    EncoderParams p = EncoderParams::init(cfg, 1);
    auto samples = subset(4);
    samples[0].gt_doc_id = "missing";
    EXPECT_MMR_ERROR(train(p, samples, data_->augmented, prov, TrainConfig{}), ErrorKind::kData);
    TrainConfig bad;
    bad.batch_size = 1;
    EXPECT_MMR_ERROR(bad.validate(), ErrorKind::kConfig);
    bad = TrainConfig{};
    bad.learning_rate = 0;
    EXPECT_MMR_ERROR(bad.validate(), ErrorKind::kConfig);
    EXPECT_MMR_ERROR(parse_optimizer("rmsprop"), ErrorKind::kConfig);
    EXPECT_EQ(parse_optimizer("adam"), Optimizer::kAdam);
}

}  // namespace
}  // namespace mmr
