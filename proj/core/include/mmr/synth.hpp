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
#include <cstdint>
#include <string>
#include <vector>

#include "mmr/document.hpp"

namespace mmr {

struct SynthConfig {
    std::size_t n_docs = 200;
    /// Mean number of entities each body mentions (at least one per doc).
    double mean_links = 4.3;
    /// Share of samples whose query image shows the answer document's own entity.
    double fraction_shortcut = 0.0;
    std::size_t n_types = 12;
    /// Distinct relation phrases used in bodies.
    std::size_t n_relations = 36;
    /// Zipf exponent of entity popularity; 0 makes every entity equally likely
    /// to be mentioned.
    double hub_exponent = 1.3;
    /// Share of documents reserved as unseen-split answers.
    double unseen_fraction = 0.25;
    std::size_t n_train = 400;
    std::size_t n_test_seen = 50;
    std::size_t n_test_unseen = 50;
    /// Subgraph draws per document when building shortcut-free samples.
    std::size_t datagen_rounds = 16;
    bool paraphrase = true;
    std::uint64_t seed = 0;

    /// Throws kConfig on out-of-range fields.
    void validate() const;
};

struct SynthKb {
    Kb kb;
    TypeMap types;
};

/// Pseudo-word entities, one document each. Every body is a run of sentences
/// "<title> <relation> <other title>." over the document's sampled neighbors.
SynthKb generate_kb(const SynthConfig& config);

struct Benchmark {
    std::vector<QaSample> train;
    std::vector<QaSample> test_seen;
    std::vector<QaSample> test_unseen;

    std::vector<QaSample> test() const;
};

/// Shortcut samples ask about a neighbor of the answer entity while showing
/// the answer entity's own image ("This beetle feeds on which plant?").
/// Shortcut-free samples come from the datagen pipeline. Throws kGeneration
/// when the KB cannot supply the requested counts.
Benchmark generate_benchmark(const AugmentedKb& kb, const TypeMap& types, const SynthConfig& config);

/// Shortcut-style candidates for one document: one per related entity that
/// passes validation.
std::vector<QaSample> shortcut_samples(const AugmentedDocument& doc, const TypeMap& types, bool paraphrase);

/// Relation phrases available to the generator, in order of use.
const std::vector<std::string>& relation_phrases();
/// Type nouns available to the generator.
const std::vector<std::string>& type_nouns();

struct SynthData {
    SynthKb kb;
    AugmentedKb augmented;
    Benchmark benchmark;
};

/// generate_kb, dictionary augmentation and generate_benchmark in one call.
SynthData generate_synthetic(const SynthConfig& config);

}  // namespace mmr
