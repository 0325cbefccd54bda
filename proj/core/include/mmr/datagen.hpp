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

#include "mmr/bm25.hpp"
#include "mmr/document.hpp"
#include "mmr/rng.hpp"

namespace mmr {

struct GraphNeighbor {
    std::string entity;
    /// The body sentence holding the entity's first mention.
    std::string relation_sentence;
    bool has_image = false;
    std::string image_key;
    std::string source_doc_id;

    friend bool operator==(const GraphNeighbor&, const GraphNeighbor&) = default;
};

struct OneHopGraph {
    std::string doc_id;
    std::string main_entity;
    std::string main_image_key;
    std::vector<GraphNeighbor> neighbors;

    friend bool operator==(const OneHopGraph&, const OneHopGraph&) = default;
};

using GraphMap = std::map<std::string, OneHopGraph>;

OneHopGraph build_onehop_graph(const AugmentedDocument& doc);
GraphMap build_graphs(const AugmentedKb& kb);

/// Drops the edge A -> B whenever B's graph lists A's main entity. Decided on
/// the input graphs, so both directions of a mutual pair go.
GraphMap enforce_unique_gt(const GraphMap& graphs);

struct TargetSubgraph {
    std::string answer_entity;
    std::string answer_doc_id;
    std::string query_entity;
    std::string query_image_key;
    std::string qualifying_entity;
    std::string relation_q;
    std::string relation_k;
};

/// Query entity uniform over image-bearing neighbors, qualifying entity
/// uniform over the rest. std::nullopt with fewer than two neighbors or no
/// image-bearing one.
std::optional<TargetSubgraph> extract_target_subgraph(const OneHopGraph& graph, Rng& rng);

class QuestionGenerator {
public:
    virtual ~QuestionGenerator() = default;
    /// Throws kGeneration when no question can be formed.
    virtual std::string generate(const TargetSubgraph& sg, const TypeMap& types) const = 0;
};

/// "Which <answer type> <relation_q predicate>, given that it <relation_k predicate>?"
/// The relation_q predicate drops the leading answer surface and turns the
/// query surface into "this <query type>"; a following word equal to the
/// type (or its plural) is absorbed. The relation_k predicate drops the
/// leading answer surface only.
class TemplateQuestionGenerator final : public QuestionGenerator {
public:
    std::string generate(const TargetSubgraph& sg, const TypeMap& types) const override;
};

/// Type noun of an entity; throws kData when the typemap lacks it.
std::string type_of(const TypeMap& types, const std::string& entity);

/// Turns a subgraph into a draft sample (no id or split yet).
QaSample generate_question(const TargetSubgraph& sg, const TypeMap& types, const QuestionGenerator& generator);

class Paraphraser {
public:
    virtual ~Paraphraser() = default;
    virtual std::string paraphrase(const std::string& question) const = 0;
};

struct ParaphraseRules {
    /// Lowercase word -> replacement. Replacements are never keys themselves.
    std::map<std::string, std::string> synonyms;
    bool reorder_clauses = true;
};

/// The fixed 50-entry synonym table plus clause reordering.
ParaphraseRules default_paraphrase_rules();

class RuleParaphraser final : public Paraphraser {
public:
    explicit RuleParaphraser(ParaphraseRules rules = default_paraphrase_rules());
    std::string paraphrase(const std::string& question) const override;
    const ParaphraseRules& rules() const { return rules_; }

private:
    ParaphraseRules rules_;
};

/// Whole-word substitution keeping the original capitalization and punctuation.
std::string substitute_synonyms(const std::string& text, const std::map<std::string, std::string>& synonyms);
/// "Which X, given that Y?" <-> "Given that Y, which X?". Anything else is
/// returned unchanged.
std::string reorder_clauses(const std::string& question);

/// Throws kInput on an empty question.
std::string paraphrase(const std::string& question, const Paraphraser& paraphraser);

enum class RejectReason { kLeak, kNoQualifier, kSurfaceViolation, kStripFailure };
std::string to_string(RejectReason reason);

struct Rejection {
    std::string doc_id;
    RejectReason reason = RejectReason::kSurfaceViolation;
    std::string detail;
    std::string question;
};

/// Checks the sample invariants. `gt_main_image_key` is only consulted for
/// samples not flagged as shortcut. std::nullopt when the sample is valid.
std::optional<Rejection> validate_sample(const QaSample& sample, const std::string& gt_main_image_key);

struct LeakFilterResult {
    std::vector<QaSample> kept;
    std::vector<Rejection> rejected;
};

/// Rejects a sample when its GT doc is in the BM25 top-k for its question.
/// Shortcut samples are passed through: their query image already names the
/// answer, so a lexical leak adds nothing.
LeakFilterResult bm25_leak_filter(const std::vector<QaSample>& samples, const Bm25Index& bm25, std::size_t k = 5);

/// split = kSeen iff the GT doc is a training GT doc, else kUnseen.
std::vector<QaSample> split_seen_unseen(std::vector<QaSample> samples, const std::vector<std::string>& train_gt_ids);

struct DatagenConfig {
    std::uint64_t seed = 0;
    std::size_t bm25_k = 5;
    bool paraphrase = true;
    unsigned threads = 1;
    /// Subgraph draws per document. Round 0 uses the document's own stream;
    /// later rounds fork it and repeat pairs are dropped.
    std::size_t rounds = 1;
    /// Restricts generation to these docs; empty means every doc.
    std::vector<std::string> doc_ids;
};

struct DatagenResult {
    std::vector<QaSample> samples;
    std::vector<Rejection> rejected;
    std::size_t drafted = 0;
};

/// Graphs -> unique-GT filter -> subgraph -> question -> paraphrase ->
/// validation -> BM25 leak filter. Samples are ordered by doc id then round;
/// ids are "q-<doc_id>" for round 0 and "q-<doc_id>-<round>" after. The BM25
/// corpus is every body in `akb`.
DatagenResult run_datagen(const AugmentedKb& akb, const TypeMap& types, const DatagenConfig& config,
                          const QuestionGenerator& generator, const Paraphraser& paraphraser);

std::string to_jsonl(const Rejection& rejection);
void write_rejections(const std::filesystem::path& path, const std::vector<Rejection>& rejected);

}  // namespace mmr
