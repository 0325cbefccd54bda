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

#include "mmr/augment.hpp"

#include <algorithm>
#include <unordered_map>

#include "mmr/errors.hpp"
#include "mmr/parallel.hpp"
#include "mmr/text.hpp"

namespace mmr {

TitleIndex build_title_index(const Kb& kb) {
    TitleIndex titles;
    for (const auto& [id, doc] : kb) {
        titles.emplace(doc.title, id);
    }
    return titles;
}

namespace {

struct Candidate {
    std::size_t begin;
    std::size_t length;
    const std::string* title;
    const std::string* doc_id;
};

// Groups accepted matches per entity, ordered by first mention.
LinkResult collect(const RawDocument& doc, std::vector<Candidate>& accepted) {
    std::sort(accepted.begin(), accepted.end(), [](const Candidate& a, const Candidate& b) { return a.begin < b.begin; });
    LinkResult out;
    std::map<std::string, std::size_t> slot;
    for (const auto& c : accepted) {
        std::vector<std::size_t>* span = nullptr;
        if (*c.doc_id == doc.doc_id) {
            span = &out.self_span;
        } else {
            auto [it, inserted] = slot.emplace(*c.doc_id, out.related.size());
            if (inserted) {
                out.related.push_back({*c.title, {}, *c.doc_id});
            }
            span = &out.related[it->second].span;
        }
        for (std::size_t i = 0; i < c.length; ++i) {
            span->push_back(c.begin + i);
        }
    }
    return out;
}

}  // namespace

LinkResult DictionaryLinker::link(const RawDocument& doc, const std::vector<std::string>& tokens,
                                  const TitleIndex& titles) const {
    // Normalized title -> (title, doc_id); the first title in map order wins a collision.
    std::unordered_map<std::string, std::pair<const std::string*, const std::string*>> lookup;
    std::size_t max_len = 0;
    for (const auto& [title, id] : titles) {
        const auto words = tokenize(title);
        if (words.empty()) {
            continue;
        }
        max_len = std::max(max_len, words.size());
        lookup.emplace(join(words, " "), std::make_pair(&title, &id));
    }

    std::vector<Candidate> candidates;
    for (std::size_t b = 0; b < tokens.size(); ++b) {
        std::string key;
        for (std::size_t len = 1; len <= max_len && b + len <= tokens.size(); ++len) {
            if (len > 1) {
                key += ' ';
            }
            key += tokens[b + len - 1];
            if (auto it = lookup.find(key); it != lookup.end()) {
                candidates.push_back({b, len, it->second.first, it->second.second});
            }
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return a.length != b.length ? a.length > b.length : a.begin < b.begin;
    });
    std::vector<char> taken(tokens.size(), 0);
    std::vector<Candidate> accepted;
    for (const auto& c : candidates) {
        if (std::any_of(taken.begin() + static_cast<std::ptrdiff_t>(c.begin),
                        taken.begin() + static_cast<std::ptrdiff_t>(c.begin + c.length), [](char t) { return t != 0; })) {
            continue;
        }
        std::fill_n(taken.begin() + static_cast<std::ptrdiff_t>(c.begin), c.length, 1);
        accepted.push_back(c);
    }
    return collect(doc, accepted);
}

ExtractorLinker::ExtractorLinker(std::shared_ptr<const MentionExtractor> extractor) : extractor_(std::move(extractor)) {
    if (!extractor_) {
        fail(ErrorKind::kConfig, "extractor linker needs an extractor");
    }
}

LinkResult ExtractorLinker::link(const RawDocument& doc, const std::vector<std::string>& tokens,
                                 const TitleIndex& titles) const {
    std::unordered_map<std::string, std::pair<const std::string*, const std::string*>> lookup;
    for (const auto& [title, id] : titles) {
        lookup.emplace(normalize_surface(title), std::make_pair(&title, &id));
    }
    std::vector<Candidate> accepted;
    std::vector<char> taken(tokens.size(), 0);
    auto add_runs = [&](const std::string* title, const std::string* id) {
        const auto words = tokenize(*title);
        if (words.empty() || words.size() > tokens.size()) {
            return;
        }
        for (std::size_t b = 0; b + words.size() <= tokens.size(); ++b) {
            if (!std::equal(words.begin(), words.end(), tokens.begin() + static_cast<std::ptrdiff_t>(b))) {
                continue;
            }
            const auto first = taken.begin() + static_cast<std::ptrdiff_t>(b);
            if (std::any_of(first, first + static_cast<std::ptrdiff_t>(words.size()), [](char t) { return t != 0; })) {
                continue;
            }
            std::fill_n(first, words.size(), 1);
            accepted.push_back({b, words.size(), title, id});
        }
    };
    if (auto self = lookup.find(normalize_surface(doc.title)); self != lookup.end()) {
        add_runs(self->second.first, self->second.second);
    }
    for (const auto& m : extractor_->extract(doc)) {
        auto it = lookup.find(normalize_surface(m.entity));
        if (it != lookup.end() && *it->second.second != doc.doc_id) {
            add_runs(it->second.first, it->second.second);
        }
    }
    return collect(doc, accepted);
}

std::vector<LinkMatch> link_entities(const RawDocument& doc, const TitleIndex& titles, const EntityLinker& linker) {
    if (titles.empty()) {
        fail(ErrorKind::kInput, "entity linking needs a non-empty title index");
    }
    return linker.link(doc, tokenize(doc.body), titles).related;
}

AugmentedDocument augment_document(const RawDocument& doc, const Kb& kb, const EntityLinker& linker,
                                   std::optional<std::size_t> cap) {
    return augment_document(doc, kb, build_title_index(kb), linker, cap);
}

AugmentedDocument augment_document(const RawDocument& doc, const Kb& kb, const TitleIndex& titles,
                                   const EntityLinker& linker, std::optional<std::size_t> cap) {
    if (!kb.contains(doc.doc_id)) {
        fail(ErrorKind::kInput, "document " + doc.doc_id + " is not in the KB");
    }
    if (titles.empty()) {
        fail(ErrorKind::kInput, "entity linking needs a non-empty title index");
    }
    AugmentedDocument out;
    out.raw = doc;
    out.text_tokens = tokenize(doc.body);
    auto links = linker.link(doc, out.text_tokens, titles);
    out.main_span = std::move(links.self_span);
    for (auto& m : links.related) {
        if (cap && out.related.size() >= *cap) {
            break;
        }
        const auto source = kb.find(m.source_doc_id);
        if (source == kb.end()) {
            out.warnings.push_back("linked document " + m.source_doc_id + " is not in the KB");
            continue;
        }
        if (source->second.main_image_key.empty()) {
            out.warnings.push_back("skipped " + m.entity + ": document " + m.source_doc_id + " has no main image");
            continue;
        }
        out.related.push_back({std::move(m.entity), std::move(m.span), source->second.main_image_key, m.source_doc_id});
    }
    return out;
}

AugmentedKb augment_kb(const Kb& kb, const EntityLinker& linker, std::optional<std::size_t> cap, unsigned threads) {
    const auto titles = build_title_index(kb);
    std::vector<const RawDocument*> docs;
    for (const auto& [id, doc] : kb) {
        docs.push_back(&doc);
    }
    std::vector<AugmentedDocument> out(docs.size());
    parallel_for(docs.size(), threads,
                 [&](std::size_t i) { out[i] = augment_document(*docs[i], kb, titles, linker, cap); });
    AugmentedKb result;
    for (auto& a : out) {
        auto id = a.raw.doc_id;
        result.emplace(std::move(id), std::move(a));
    }
    return result;
}

}  // namespace mmr
