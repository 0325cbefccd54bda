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

#include <set>

#include "mmr/augment.hpp"
#include "mmr/datagen.hpp"
#include "mmr/errors.hpp"
#include "mmr/synth.hpp"
#include "mmr/text.hpp"
#include "mmr_test/fixtures.hpp"

namespace mmr {
namespace {

TEST(SynthKb, TwoDocsMentionEachOther) {
    SynthConfig c;
    c.n_docs = 2;
    c.mean_links = 1.0;
    c.seed = 9;
    const SynthKb skb = generate_kb(c);
    ASSERT_EQ(skb.kb.size(), 2u);
    const auto& a = skb.kb.begin()->second;
    const auto& b = std::next(skb.kb.begin())->second;
    EXPECT_NE(normalize_surface(a.body).find(normalize_surface(b.title)), std::string::npos);
    EXPECT_NE(normalize_surface(b.body).find(normalize_surface(a.title)), std::string::npos);
    const auto akb = augment_kb(skb.kb, DictionaryLinker());
    for (const auto& [id, d] : akb) {
        ASSERT_EQ(d.num_related(), 1u);
        EXPECT_NE(d.related[0].source_doc_id, id);
    }
}

TEST(SynthKb, SameSeedSameKb) {
    SynthConfig c;
    c.n_docs = 80;
    c.seed = 17;
    const SynthKb a = generate_kb(c);
    const SynthKb b = generate_kb(c);
    EXPECT_EQ(a.kb, b.kb);
    EXPECT_EQ(a.types, b.types);
    c.seed = 18;
    EXPECT_NE(generate_kb(c).kb, a.kb);
}

TEST(SynthKb, EveryDocHasTitleImageAndType) {
    SynthConfig c;
    c.n_docs = 150;
    c.seed = 2;
    const SynthKb skb = generate_kb(c);
    std::set<std::string> titles;
    for (const auto& [id, d] : skb.kb) {
        EXPECT_EQ(d.doc_id, id);
        EXPECT_EQ(d.main_image_key, image_key_for(d.title));
        EXPECT_TRUE(skb.types.contains(d.title)) << d.title;
        titles.insert(normalize_surface(d.title));
    }
    EXPECT_EQ(titles.size(), skb.kb.size());
}

TEST(SynthKb, MeanLinksMatchesConfig) {
    SynthConfig c;
    c.n_docs = 1000;
    c.seed = 23;
    const auto akb = augment_kb(generate_kb(c).kb, DictionaryLinker());
    double total = 0;
    for (const auto& [id, d] : akb) total += static_cast<double>(d.num_related());
    EXPECT_NEAR(total / static_cast<double>(akb.size()), c.mean_links, 0.5);
}

TEST(SynthKb, ConfigErrors) {
    SynthConfig c;
    c.n_docs = 1;
    EXPECT_MMR_ERROR(generate_kb(c), ErrorKind::kConfig);
    c = SynthConfig{};
    c.fraction_shortcut = 1.5;
    EXPECT_MMR_ERROR(c.validate(), ErrorKind::kConfig);
    c.fraction_shortcut = -0.1;
    EXPECT_MMR_ERROR(c.validate(), ErrorKind::kConfig);
}

SynthConfig bench_config(double fraction, std::uint64_t seed) {
    SynthConfig c;
    c.n_docs = 120;
    c.n_train = 120;
    c.n_test_seen = 30;
    c.n_test_unseen = 30;
    c.fraction_shortcut = fraction;
    c.seed = seed;
    return c;
}

std::vector<QaSample> all_samples(const Benchmark& b) {
    auto out = b.train;
    for (const auto& s : b.test()) out.push_back(s);
    return out;
}

TEST(SynthBenchmark, FullyShortcut) {
    const auto data = generate_synthetic(bench_config(1.0, 5));
    for (const auto& s : all_samples(data.benchmark)) {
        EXPECT_TRUE(s.shortcut);
        EXPECT_EQ(s.query_image_key, data.kb.kb.at(s.gt_doc_id).main_image_key);
    }
}

TEST(SynthBenchmark, ShortcutFree) {
    const auto data = generate_synthetic(bench_config(0.0, 5));
    for (const auto& s : all_samples(data.benchmark)) {
        EXPECT_FALSE(s.shortcut);
        EXPECT_NE(s.query_image_key, data.kb.kb.at(s.gt_doc_id).main_image_key);
    }
}

TEST(SynthBenchmark, MixedRatio) {
    const auto data = generate_synthetic(bench_config(0.5, 7));
    std::size_t shortcut = 0;
    for (const auto& s : data.benchmark.train) shortcut += s.shortcut ? 1 : 0;
    EXPECT_NEAR(static_cast<double>(shortcut) / static_cast<double>(data.benchmark.train.size()), 0.5, 0.05);
}

TEST(SynthBenchmark, CountsSplitsAndValidity) {
    for (double fraction : {0.0, 0.5, 1.0}) {
        const auto cfg = bench_config(fraction, 13);
        const auto data = generate_synthetic(cfg);
        const auto& b = data.benchmark;
        EXPECT_EQ(b.train.size(), cfg.n_train);
        EXPECT_EQ(b.test_seen.size(), cfg.n_test_seen);
        EXPECT_EQ(b.test_unseen.size(), cfg.n_test_unseen);
        std::set<std::string> train_gt, ids;
        for (const auto& s : b.train) {
            EXPECT_EQ(s.split, Split::kTrain);
            train_gt.insert(s.gt_doc_id);
        }
        for (const auto& s : b.test_seen) {
            EXPECT_EQ(s.split, Split::kSeen);
            EXPECT_TRUE(train_gt.contains(s.gt_doc_id));
        }
        for (const auto& s : b.test_unseen) {
            EXPECT_EQ(s.split, Split::kUnseen);
            EXPECT_FALSE(train_gt.contains(s.gt_doc_id));
        }
        for (const auto& s : all_samples(b)) {
            EXPECT_TRUE(ids.insert(s.sample_id).second) << s.sample_id;
            const auto rej = validate_sample(s, data.kb.kb.at(s.gt_doc_id).main_image_key);
            EXPECT_FALSE(rej.has_value()) << s.question;
        }
    }
}

TEST(SynthBenchmark, RegenerationIsByteIdentical) {
    testing::TempDir dir("synth");
    const auto cfg = bench_config(0.3, 31);
    const auto a = generate_synthetic(cfg);
    const auto b = generate_synthetic(cfg);
    write_kb(dir / "a.jsonl", a.kb.kb);
    write_kb(dir / "b.jsonl", b.kb.kb);
    write_samples(dir / "sa.jsonl", all_samples(a.benchmark));
    write_samples(dir / "sb.jsonl", all_samples(b.benchmark));
    EXPECT_EQ(testing::read_bytes(dir / "a.jsonl"), testing::read_bytes(dir / "b.jsonl"));
    EXPECT_EQ(testing::read_bytes(dir / "sa.jsonl"), testing::read_bytes(dir / "sb.jsonl"));
    EXPECT_EQ(a.augmented, b.augmented);
}

TEST(SynthBenchmark, TooFewDocsFails) {
    SynthConfig c;
    c.n_docs = 6;
    c.n_train = 400;
    c.seed = 1;
    EXPECT_MMR_ERROR(generate_synthetic(c), ErrorKind::kGeneration);
}

TEST(SynthBenchmark, ShortcutSamplesForOneDoc) {
    const auto data = generate_synthetic(bench_config(1.0, 5));
    const auto& doc = data.augmented.begin()->second;
    const auto samples = shortcut_samples(doc, data.kb.types, false);
    EXPECT_LE(samples.size(), doc.num_related());
    for (const auto& s : samples) {
        EXPECT_EQ(s.gt_doc_id, doc.raw.doc_id);
        EXPECT_EQ(s.query_image_key, doc.raw.main_image_key);
        EXPECT_TRUE(s.shortcut);
    }
    EXPECT_FALSE(relation_phrases().empty());
    EXPECT_FALSE(type_nouns().empty());
}

}  // namespace
}  // namespace mmr
