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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mmr {

/// A knowledge-base entry: a text body about one main entity plus the key of
/// an image depicting that entity.
struct RawDocument {
    std::string doc_id;
    std::string title;
    std::string body;
    std::string main_image_key;

    friend bool operator==(const RawDocument&, const RawDocument&) = default;
};

struct RelatedEntity {
    std::string entity;
    /// Token indices (into AugmentedDocument::text_tokens) of every mention.
    std::vector<std::size_t> span;
    std::string image_key;
    std::string source_doc_id;

    friend bool operator==(const RelatedEntity&, const RelatedEntity&) = default;
};

struct AugmentedDocument {
    RawDocument raw;
    std::vector<std::string> text_tokens;
    /// Mentions of the document's own title in its body.
    std::vector<std::size_t> main_span;
    std::vector<RelatedEntity> related;
    /// Links dropped during augmentation, e.g. a linked document without an image.
    std::vector<std::string> warnings;

    std::size_t num_related() const { return related.size(); }
    friend bool operator==(const AugmentedDocument&, const AugmentedDocument&) = default;
};

using Kb = std::map<std::string, RawDocument>;
using AugmentedKb = std::map<std::string, AugmentedDocument>;

enum class Split { kTrain, kSeen, kUnseen };

std::string to_string(Split split);
Split parse_split(const std::string& s);

struct QaSample {
    std::string sample_id;
    std::string question;
    std::string query_image_key;
    std::string answer;
    std::string gt_doc_id;
    Split split = Split::kTrain;
    std::string query_entity;
    /// Empty for shortcut-style samples, which have no qualifying clause.
    std::string qualifying_entity;
    bool shortcut = false;

    friend bool operator==(const QaSample&, const QaSample&) = default;
};

/// Symbolic image keys encode the entity they depict: "img:<normalized title>".
std::string image_key_for(const std::string& entity);
/// Inverse of image_key_for; std::nullopt when the key has another form.
std::optional<std::string> entity_of_image_key(const std::string& key);

// JSON Lines readers and writers. Each record is one line; the writers emit
// keys in a fixed order so the files are byte-reproducible.
Kb read_kb(const std::filesystem::path& path);
void write_kb(const std::filesystem::path& path, const Kb& kb);
AugmentedKb read_augmented_kb(const std::filesystem::path& path);
void write_augmented_kb(const std::filesystem::path& path, const AugmentedKb& kb);
std::vector<QaSample> read_samples(const std::filesystem::path& path);
void write_samples(const std::filesystem::path& path, const std::vector<QaSample>& samples);

using TypeMap = std::map<std::string, std::string>;
TypeMap read_typemap(const std::filesystem::path& path);
void write_typemap(const std::filesystem::path& path, const TypeMap& types);

/// Writes one line per entry, '\n'-terminated; throws kIo on failure.
void write_text_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

std::string to_jsonl(const RawDocument& doc);
std::string to_jsonl(const AugmentedDocument& doc);
std::string to_jsonl(const QaSample& sample);

}  // namespace mmr
