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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmr/document.hpp"

namespace mmr {

/// Raw KB title -> doc_id.
using TitleIndex = std::map<std::string, std::string>;

TitleIndex build_title_index(const Kb& kb);

struct LinkMatch {
    /// The KB title of the linked document.
    std::string entity;
    /// Token indices of every mention, ascending.
    std::vector<std::size_t> span;
    std::string source_doc_id;

    friend bool operator==(const LinkMatch&, const LinkMatch&) = default;
};

struct LinkResult {
    /// Related entities ordered by first mention.
    std::vector<LinkMatch> related;
    /// Token indices of mentions of the document's own title.
    std::vector<std::size_t> self_span;
};

class EntityLinker {
public:
    virtual ~EntityLinker() = default;
    virtual std::string tag() const = 0;
    virtual LinkResult link(const RawDocument& doc, const std::vector<std::string>& tokens,
                            const TitleIndex& titles) const = 0;
};

/// Case-insensitive longest-match scan of the body tokens against KB titles.
/// Overlaps are resolved longest-first, then leftmost.
class DictionaryLinker final : public EntityLinker {
public:
    std::string tag() const override { return "dictionary"; }
    LinkResult link(const RawDocument& doc, const std::vector<std::string>& tokens,
                    const TitleIndex& titles) const override;
};

/// One entity reported by an extraction model for a document.
struct ExtractedMention {
    std::string entity;
    std::string entity_type;
    std::string relation_sentence;
};

/// Model-backed extraction. Prompt per document:
///   "Identify all named entities mentioned in the document below. For each,
///    return the entity, its type and the sentence relating it to <title>."
/// followed by the body; the response is parsed into ExtractedMention records.
class MentionExtractor {
public:
    virtual ~MentionExtractor() = default;
    virtual std::vector<ExtractedMention> extract(const RawDocument& doc) const = 0;
};

/// Adapts a MentionExtractor to the linker interface. Mentions are kept only
/// when they name a KB title other than the document's own and occur in the
/// body as a token run, so the output obeys the same invariants as the
/// dictionary linker.
class ExtractorLinker final : public EntityLinker {
public:
    explicit ExtractorLinker(std::shared_ptr<const MentionExtractor> extractor);
    std::string tag() const override { return "extractor"; }
    LinkResult link(const RawDocument& doc, const std::vector<std::string>& tokens,
                    const TitleIndex& titles) const override;

private:
    std::shared_ptr<const MentionExtractor> extractor_;
};

/// Throws kInput when `titles` is empty.
std::vector<LinkMatch> link_entities(const RawDocument& doc, const TitleIndex& titles, const EntityLinker& linker);

/// Links `doc` and attaches each related entity's main image. Links to
/// documents without a main image are dropped with a warning. `cap` keeps the
/// first mentions. Throws kInput when `doc` is not in `kb`.
AugmentedDocument augment_document(const RawDocument& doc, const Kb& kb, const EntityLinker& linker,
                                   std::optional<std::size_t> cap = std::nullopt);
AugmentedDocument augment_document(const RawDocument& doc, const Kb& kb, const TitleIndex& titles,
                                   const EntityLinker& linker, std::optional<std::size_t> cap = std::nullopt);

AugmentedKb augment_kb(const Kb& kb, const EntityLinker& linker, std::optional<std::size_t> cap = std::nullopt,
                       unsigned threads = 1);

}  // namespace mmr
