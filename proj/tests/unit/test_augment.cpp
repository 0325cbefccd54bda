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

#include "mmr/augment.hpp"
#include "mmr/errors.hpp"
#include "mmr/synth.hpp"
#include "mmr/text.hpp"
#include "mmr_test/fixtures.hpp"

namespace mmr {
namespace {

RawDocument doc(const std::string& id, const std::string& title, const std::string& body, bool image = true) {
    return {id, title, body, image ? image_key_for(title) : ""};
}

Kb kb_of(std::initializer_list<RawDocument> docs) {
    Kb kb;
    for (const auto& d : docs) kb[d.doc_id] = d;
    return kb;
}

TEST(DictionaryLinker, ExactHit) {
    const Kb kb = kb_of({doc("lema", "Lema daturaphila", "feeds on potato plants"),
                         doc("pot", "Potato", "Potato is a plant.")});
    const auto links = link_entities(kb.at("lema"), build_title_index(kb), DictionaryLinker());
    ASSERT_EQ(links.size(), 1u);
    EXPECT_EQ(links[0].entity, "Potato");
    EXPECT_EQ(links[0].source_doc_id, "pot");
    EXPECT_EQ(links[0].span, std::vector<std::size_t>{2});
}

TEST(DictionaryLinker, SelfMentionIsExcluded) {
    const Kb kb = kb_of({doc("pot", "Potato", "The potato is a potato."), doc("x", "Other", "Nothing.")});
    const auto titles = build_title_index(kb);
    EXPECT_TRUE(link_entities(kb.at("pot"), titles, DictionaryLinker()).empty());
    const auto res = DictionaryLinker().link(kb.at("pot"), tokenize(kb.at("pot").body), titles);
    EXPECT_EQ(res.self_span, (std::vector<std::size_t>{1, 4}));
}

TEST(DictionaryLinker, LongestMatchWins) {
    const Kb kb = kb_of({doc("a", "Alpha", "He moved to new york last year."), doc("ny", "New York", "City."),
                         doc("y", "York", "Town.")});
    const auto links = link_entities(kb.at("a"), build_title_index(kb), DictionaryLinker());
    ASSERT_EQ(links.size(), 1u);
    EXPECT_EQ(links[0].entity, "New York");
    EXPECT_EQ(links[0].span, (std::vector<std::size_t>{3, 4}));
}

TEST(DictionaryLinker, OrderedByFirstMentionAndMerged) {
    const Kb kb = kb_of({doc("a", "Alpha", "Gamma met Beta. Then Gamma left."), doc("b", "Beta", "B."),
                         doc("g", "Gamma", "G.")});
    const auto links = link_entities(kb.at("a"), build_title_index(kb), DictionaryLinker());
    ASSERT_EQ(links.size(), 2u);
    EXPECT_EQ(links[0].entity, "Gamma");
    EXPECT_EQ(links[0].span, (std::vector<std::size_t>{0, 4}));
    EXPECT_EQ(links[1].entity, "Beta");
}

TEST(DictionaryLinker, EmptyTitlesFail) {
    EXPECT_MMR_ERROR(link_entities(doc("a", "A", "text"), TitleIndex{}, DictionaryLinker()), ErrorKind::kInput);
}

TEST(Augment, NoMatchesMeansNoRelated) {
    const Kb kb = kb_of({doc("a", "Alpha", "Nothing relevant here."), doc("b", "Beta", "Alpha.")});
    const auto a = augment_document(kb.at("a"), kb, DictionaryLinker());
    EXPECT_EQ(a.num_related(), 0u);
    EXPECT_EQ(a.text_tokens, tokenize(kb.at("a").body));
}

TEST(Augment, CapKeepsFirstMentions) {
    const Kb kb = kb_of({doc("a", "Alpha", "Echo Delta Charlie Beta Foxtrot."), doc("b", "Beta", "."),
                         doc("c", "Charlie", "."), doc("d", "Delta", "."), doc("e", "Echo", "."),
                         doc("f", "Foxtrot", ".")});
    EXPECT_EQ(augment_document(kb.at("a"), kb, DictionaryLinker()).num_related(), 5u);
    const auto capped = augment_document(kb.at("a"), kb, DictionaryLinker(), 2);
    ASSERT_EQ(capped.num_related(), 2u);
    EXPECT_EQ(capped.related[0].entity, "Echo");
    EXPECT_EQ(capped.related[1].entity, "Delta");
}

TEST(Augment, LinksWithoutImageAreDroppedWithWarning) {
    const Kb kb = kb_of({doc("a", "Alpha", "Beta and Gamma."), doc("b", "Beta", ".", false), doc("g", "Gamma", ".")});
    const auto a = augment_document(kb.at("a"), kb, DictionaryLinker());
    ASSERT_EQ(a.num_related(), 1u);
    EXPECT_EQ(a.related[0].entity, "Gamma");
    EXPECT_EQ(a.related[0].image_key, image_key_for("Gamma"));
    ASSERT_EQ(a.warnings.size(), 1u);
    EXPECT_NE(a.warnings[0].find("Beta"), std::string::npos);
}

TEST(Augment, DocMustBeInKb) {
    const Kb kb = kb_of({doc("a", "Alpha", "Beta.")});
    EXPECT_MMR_ERROR(augment_document(doc("z", "Zed", "Alpha."), kb, DictionaryLinker()), ErrorKind::kInput);
}

TEST(Augment, KbInvariantsOnSyntheticKb) {
    SynthConfig cfg;
    cfg.n_docs = 120;
    cfg.seed = 4;
    const SynthKb skb = generate_kb(cfg);
    const AugmentedKb akb = augment_kb(skb.kb, DictionaryLinker());
    EXPECT_EQ(akb, augment_kb(skb.kb, DictionaryLinker(), std::nullopt, 4));
    EXPECT_EQ(akb, augment_kb(skb.kb, DictionaryLinker()));
    for (const auto& [id, a] : akb) {
        for (const auto& r : a.related) {
            // Image resolves to a KB document's main image.
            ASSERT_TRUE(skb.kb.contains(r.source_doc_id));
            EXPECT_EQ(r.image_key, skb.kb.at(r.source_doc_id).main_image_key);
            EXPECT_NE(r.source_doc_id, id);
            // Each mention re-detokenizes to the entity surface.
            const auto words = tokenize(r.entity);
            ASSERT_EQ(r.span.size() % words.size(), 0u);
            for (std::size_t m = 0; m < r.span.size(); m += words.size()) {
                std::vector<std::string> got;
                for (std::size_t w = 0; w < words.size(); ++w) got.push_back(a.text_tokens.at(r.span[m + w]));
                EXPECT_EQ(join(got, " "), normalize_surface(r.entity));
            }
        }
    }
}

class FixedExtractor : public MentionExtractor {
public:
    explicit FixedExtractor(std::vector<ExtractedMention> m) : mentions_(std::move(m)) {}
    std::vector<ExtractedMention> extract(const RawDocument&) const override { return mentions_; }

private:
    std::vector<ExtractedMention> mentions_;
};

TEST(ExtractorLinker, KeepsOnlyKbTitlesFoundInBody) {
    const Kb kb = kb_of({doc("a", "Alpha", "Alpha likes Beta and Delta."), doc("b", "Beta", "."),
                         doc("g", "Gamma", "."), doc("d", "Delta", ".")});
    auto ex = std::make_shared<FixedExtractor>(std::vector<ExtractedMention>{
        {"Delta", "thing", "Alpha likes Beta and Delta."},
        {"Gamma", "thing", "not in body"},
        {"Omega", "thing", "not in KB"},
        {"Alpha", "thing", "self"},
    });
    const ExtractorLinker linker(ex);
    const auto a = augment_document(kb.at("a"), kb, linker);
    ASSERT_EQ(a.num_related(), 1u);
    EXPECT_EQ(a.related[0].entity, "Delta");
    EXPECT_EQ(a.related[0].span, std::vector<std::size_t>{4});
    EXPECT_EQ(a.main_span, std::vector<std::size_t>{0});
    EXPECT_MMR_ERROR(ExtractorLinker(nullptr), ErrorKind::kConfig);
}

}  // namespace
}  // namespace mmr
