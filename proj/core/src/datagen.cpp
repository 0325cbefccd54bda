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

#include "mmr/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <nlohmann/json.hpp>

#include "mmr/errors.hpp"
#include "mmr/parallel.hpp"
#include "mmr/text.hpp"

namespace mmr {

OneHopGraph build_onehop_graph(const AugmentedDocument& doc) {
    OneHopGraph g;
    g.doc_id = doc.raw.doc_id;
    g.main_entity = doc.raw.title;
    g.main_image_key = doc.raw.main_image_key;
    const auto tokens = tokenize_with_offsets(doc.raw.body);
    const auto sentences = split_sentences(doc.raw.body);
    for (const auto& r : doc.related) {
        if (r.span.empty() || r.span.front() >= tokens.size()) {
            continue;
        }
        const std::size_t at = tokens[r.span.front()].begin;
        std::string sentence;
        for (const auto& s : sentences) {
            if (at >= s.begin && at < s.end) {
                sentence = doc.raw.body.substr(s.begin, s.end - s.begin);
                break;
            }
        }
        if (sentence.empty()) {
            continue;
        }
        g.neighbors.push_back({r.entity, std::move(sentence), !r.image_key.empty(), r.image_key, r.source_doc_id});
    }
    return g;
}

GraphMap build_graphs(const AugmentedKb& kb) {
    GraphMap out;
    for (const auto& [id, doc] : kb) {
        out.emplace(id, build_onehop_graph(doc));
    }
    return out;
}

GraphMap enforce_unique_gt(const GraphMap& graphs) {
    // Neighbor sets keyed by normalized entity surface.
    std::map<std::string, std::set<std::string>> mentions;
    std::map<std::string, std::vector<const OneHopGraph*>> by_entity;
    for (const auto& [id, g] : graphs) {
        auto& m = mentions[id];
        for (const auto& n : g.neighbors) {
            m.insert(normalize_surface(n.entity));
        }
        by_entity[normalize_surface(g.main_entity)].push_back(&g);
    }
    GraphMap out;
    for (const auto& [id, g] : graphs) {
        OneHopGraph kept = g;
        kept.neighbors.clear();
        const auto self = normalize_surface(g.main_entity);
        for (const auto& n : g.neighbors) {
            bool mutual = false;
            if (auto it = by_entity.find(normalize_surface(n.entity)); it != by_entity.end()) {
                for (const OneHopGraph* other : it->second) {
                    if (mentions.at(other->doc_id).contains(self)) {
                        mutual = true;
                    }
                }
            }
            if (!mutual) {
                kept.neighbors.push_back(n);
            }
        }
        out.emplace(id, std::move(kept));
    }
    return out;
}

std::optional<TargetSubgraph> extract_target_subgraph(const OneHopGraph& graph, Rng& rng) {
    if (graph.neighbors.size() < 2) {
        return std::nullopt;
    }
    std::vector<std::size_t> with_image;
    for (std::size_t i = 0; i < graph.neighbors.size(); ++i) {
        if (graph.neighbors[i].has_image) {
            with_image.push_back(i);
        }
    }
    if (with_image.empty()) {
        return std::nullopt;
    }
    const std::size_t q = with_image[rng.below(with_image.size())];
    std::size_t k = rng.below(graph.neighbors.size() - 1);
    if (k >= q) {
        ++k;
    }
    const auto& nq = graph.neighbors[q];
    const auto& nk = graph.neighbors[k];
    return TargetSubgraph{graph.main_entity, graph.doc_id,          nq.entity,           nq.image_key,
                          nk.entity,         nq.relation_sentence, nk.relation_sentence};
}

namespace {

struct Word {
    std::string text;
    std::string norm;
};

std::vector<Word> words_of(const std::string& sentence) {
    std::vector<Word> out;
    std::size_t i = 0;
    while (i < sentence.size()) {
        while (i < sentence.size() && std::isspace(static_cast<unsigned char>(sentence[i]))) {
            ++i;
        }
        const std::size_t b = i;
        while (i < sentence.size() && !std::isspace(static_cast<unsigned char>(sentence[i]))) {
            ++i;
        }
        if (i > b) {
            const std::string w = sentence.substr(b, i - b);
            out.push_back({w, normalize_surface(w)});
        }
    }
    // Drop terminal punctuation.
    while (!out.empty()) {
        auto& last = out.back().text;
        while (!last.empty() && (last.back() == '.' || last.back() == '!' || last.back() == '?')) {
            last.pop_back();
        }
        if (!last.empty()) {
            break;
        }
        out.pop_back();
    }
    return out;
}

std::optional<std::size_t> find_run(const std::vector<Word>& words, const std::vector<std::string>& run,
                                    std::size_t from) {
    if (run.empty()) {
        return std::nullopt;
    }
    for (std::size_t b = from; b + run.size() <= words.size(); ++b) {
        bool ok = true;
        for (std::size_t j = 0; j < run.size() && ok; ++j) {
            ok = words[b + j].norm == run[j];
        }
        if (ok) {
            return b;
        }
    }
    return std::nullopt;
}

std::vector<Word> strip_leading(const std::string& sentence, const std::string& answer) {
    auto words = words_of(sentence);
    const auto run = tokenize(answer);
    if (find_run(words, run, 0) != std::optional<std::size_t>(0)) {
        fail(ErrorKind::kGeneration, "'" + sentence + "' does not start with '" + answer + "'");
    }
    words.erase(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(run.size()));
    return words;
}

std::string join_words(const std::vector<Word>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) {
            out += ' ';
        }
        out += w.text;
    }
    return out;
}

}  // namespace

std::string type_of(const TypeMap& types, const std::string& entity) {
    if (auto it = types.find(entity); it != types.end()) {
        return it->second;
    }
    // Fall back to a case-insensitive lookup.
    const auto norm = normalize_surface(entity);
    for (const auto& [k, v] : types) {
        if (normalize_surface(k) == norm) {
            return v;
        }
    }
    fail(ErrorKind::kData, "typemap has no entry for '" + entity + "'");
}

std::string TemplateQuestionGenerator::generate(const TargetSubgraph& sg, const TypeMap& types) const {
    const std::string answer_type = type_of(types, sg.answer_entity);
    const std::string query_type = type_of(types, sg.query_entity);

    auto pred_q = strip_leading(sg.relation_q, sg.answer_entity);
    const auto query_run = tokenize(sg.query_entity);
    const auto at = find_run(pred_q, query_run, 0);
    if (!at) {
        fail(ErrorKind::kGeneration, "'" + sg.relation_q + "' does not mention '" + sg.query_entity + "'");
    }
    std::size_t end = *at + query_run.size();
    const auto qt = normalize_surface(query_type);
    if (end < pred_q.size()) {
        const auto& next = pred_q[end].norm;
        if (next == qt || next == qt + "s" || next == qt + "es") {
            ++end;
        }
    }
    pred_q.erase(pred_q.begin() + static_cast<std::ptrdiff_t>(*at), pred_q.begin() + static_cast<std::ptrdiff_t>(end));
    pred_q.insert(pred_q.begin() + static_cast<std::ptrdiff_t>(*at), {Word{"this", "this"}, Word{query_type, qt}});

    const auto pred_k = strip_leading(sg.relation_k, sg.answer_entity);
    if (!find_run(pred_k, tokenize(sg.qualifying_entity), 0)) {
        fail(ErrorKind::kGeneration, "'" + sg.relation_k + "' does not mention '" + sg.qualifying_entity + "'");
    }
    if (pred_k.empty()) {
        fail(ErrorKind::kGeneration, "empty predicate in '" + sg.relation_k + "'");
    }
    return "Which " + answer_type + " " + join_words(pred_q) + ", given that it " + join_words(pred_k) + "?";
}

QaSample generate_question(const TargetSubgraph& sg, const TypeMap& types, const QuestionGenerator& generator) {
    QaSample s;
    s.question = generator.generate(sg, types);
    s.query_image_key = sg.query_image_key;
    s.answer = sg.answer_entity;
    s.gt_doc_id = sg.answer_doc_id;
    s.query_entity = sg.query_entity;
    s.qualifying_entity = sg.qualifying_entity;
    return s;
}

ParaphraseRules default_paraphrase_rules() {
    ParaphraseRules rules;
    rules.synonyms = {
        {"admires", "respects"},      {"attacks", "assails"},       {"begins", "commences"},
        {"borders", "adjoins"},       {"built", "constructed"},     {"buys", "purchases"},
        {"carries", "transports"},    {"connects", "joins"},        {"contains", "encloses"},
        {"created", "fashioned"},     {"designed", "devised"},      {"famous", "renowned"},
        {"feeds", "grazes"},          {"follows", "trails"},        {"found", "discovered"},
        {"founded", "established"},   {"grows", "thrives"},         {"guards", "defends"},
        {"helps", "assists"},         {"hosts", "accommodates"},    {"hunts", "stalks"},
        {"influenced", "shaped"},     {"inhabits", "occupies"},     {"known", "recognized"},
        {"large", "sizable"},         {"lives", "dwells"},          {"located", "situated"},
        {"named", "dubbed"},          {"native", "indigenous"},     {"near", "beside"},
        {"old", "ancient"},           {"owns", "possesses"},        {"painted", "portrayed"},
        {"pollinates", "fertilizes"}, {"produces", "yields"},       {"protects", "shields"},
        {"resembles", "mirrors"},     {"rules", "governs"},         {"sells", "vends"},
        {"serves", "aids"},           {"shelters", "harbors"},      {"small", "tiny"},
        {"studied", "examined"},      {"supplies", "furnishes"},    {"supports", "backs"},
        {"teaches", "instructs"},     {"trades", "barters"},        {"visited", "toured"},
        {"watches", "observes"},      {"wrote", "authored"},
    };
    return rules;
}

std::string substitute_synonyms(const std::string& text, const std::map<std::string, std::string>& synonyms) {
    if (synonyms.empty()) {
        return text;
    }
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!std::isalpha(static_cast<unsigned char>(text[i]))) {
            out += text[i++];
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) {
            ++j;
        }
        std::string word = text.substr(i, j - i);
        // Only whole words: a letter run glued to digits or apostrophes is left alone.
        const bool glued = (i > 0 && !std::isspace(static_cast<unsigned char>(text[i - 1])) &&
                            !std::ispunct(static_cast<unsigned char>(text[i - 1]))) ||
                           (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '\''));
        std::string lower = word;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        if (auto it = synonyms.find(lower); !glued && it != synonyms.end()) {
            std::string rep = it->second;
            if (std::isupper(static_cast<unsigned char>(word[0])) && !rep.empty()) {
                rep[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(rep[0])));
            }
            word = rep;
        }
        out += word;
        i = j;
    }
    return out;
}

namespace {

constexpr std::string_view kWhich = "Which ";
constexpr std::string_view kGivenSep = ", given that ";
constexpr std::string_view kGiven = "Given that ";
constexpr std::string_view kWhichSep = ", which ";

std::size_t count_of(std::string_view s, std::string_view needle) {
    std::size_t n = 0;
    for (auto p = s.find(needle); p != std::string_view::npos; p = s.find(needle, p + 1)) {
        ++n;
    }
    return n;
}

bool clean_clause(std::string_view clause) {
    return !clause.empty() && count_of(clause, kGivenSep) == 0 && count_of(clause, kWhichSep) == 0 &&
           clause.find('?') == std::string_view::npos;
}

}  // namespace

std::string reorder_clauses(const std::string& question) {
    std::string_view q = question;
    if (q.size() < 2 || q.back() != '?') {
        return question;
    }
    q.remove_suffix(1);
    if (q.starts_with(kWhich) && count_of(q, kGivenSep) == 1) {
        const auto sep = q.find(kGivenSep);
        const auto x = q.substr(kWhich.size(), sep - kWhich.size());
        const auto y = q.substr(sep + kGivenSep.size());
        if (clean_clause(x) && clean_clause(y)) {
            return std::string(kGiven) + std::string(y) + std::string(kWhichSep) + std::string(x) + "?";
        }
    } else if (q.starts_with(kGiven) && count_of(q, kWhichSep) == 1) {
        const auto sep = q.find(kWhichSep);
        const auto y = q.substr(kGiven.size(), sep - kGiven.size());
        const auto x = q.substr(sep + kWhichSep.size());
        if (clean_clause(x) && clean_clause(y)) {
            return std::string(kWhich) + std::string(x) + std::string(kGivenSep) + std::string(y) + "?";
        }
    }
    return question;
}

RuleParaphraser::RuleParaphraser(ParaphraseRules rules) : rules_(std::move(rules)) {
    for (const auto& [k, v] : rules_.synonyms) {
        if (rules_.synonyms.contains(v)) {
            fail(ErrorKind::kConfig, "synonym '" + v + "' is also a key");
        }
    }
}

std::string RuleParaphraser::paraphrase(const std::string& question) const {
    std::string out = substitute_synonyms(question, rules_.synonyms);
    return rules_.reorder_clauses ? reorder_clauses(out) : out;
}

std::string paraphrase(const std::string& question, const Paraphraser& paraphraser) {
    if (question.empty()) {
        fail(ErrorKind::kInput, "cannot paraphrase an empty question");
    }
    return paraphraser.paraphrase(question);
}

std::string to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::kLeak: return "leak";
        case RejectReason::kNoQualifier: return "no_qualifier";
        case RejectReason::kSurfaceViolation: return "surface_violation";
        case RejectReason::kStripFailure: return "strip_failure";
    }
    return "surface_violation";
}

std::optional<Rejection> validate_sample(const QaSample& sample, const std::string& gt_main_image_key) {
    auto reject = [&](RejectReason r, std::string detail) {
        return Rejection{sample.gt_doc_id, r, std::move(detail), sample.question};
    };
    const auto tokens = tokenize(sample.question);
    if (tokens.empty()) {
        return reject(RejectReason::kSurfaceViolation, "empty question");
    }
    if (!sample.query_entity.empty() && contains_token_run(tokens, tokenize(sample.query_entity))) {
        return reject(RejectReason::kSurfaceViolation, "question names the query entity");
    }
    if (contains_token_run(tokens, tokenize(sample.answer))) {
        return reject(RejectReason::kSurfaceViolation, "question names the answer");
    }
    std::size_t demonstratives = 0;
    bool followed = true;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == "this") {
            ++demonstratives;
            followed = followed && i + 1 < tokens.size();
        }
    }
    if (demonstratives != 1 || !followed) {
        return reject(RejectReason::kSurfaceViolation, "question needs exactly one 'this <type>' phrase");
    }
    if (!sample.shortcut && sample.query_image_key == gt_main_image_key) {
        return reject(RejectReason::kLeak, "query image depicts the answer entity");
    }
    return std::nullopt;
}

LeakFilterResult bm25_leak_filter(const std::vector<QaSample>& samples, const Bm25Index& bm25, std::size_t k) {
    LeakFilterResult out;
    for (const auto& s : samples) {
        if (!s.shortcut) {
            const auto top = bm25.top_k(s.question, k);
            const auto hit = std::find_if(top.begin(), top.end(), [&](const ScoredDoc& d) { return d.doc_id == s.gt_doc_id; });
            if (hit != top.end()) {
                out.rejected.push_back({s.gt_doc_id, RejectReason::kLeak,
                                        "BM25 rank " + std::to_string(hit - top.begin() + 1), s.question});
                continue;
            }
        }
        out.kept.push_back(s);
    }
    return out;
}

std::vector<QaSample> split_seen_unseen(std::vector<QaSample> samples, const std::vector<std::string>& train_gt_ids) {
    const std::set<std::string> train(train_gt_ids.begin(), train_gt_ids.end());
    for (auto& s : samples) {
        s.split = train.contains(s.gt_doc_id) ? Split::kSeen : Split::kUnseen;
    }
    return samples;
}

DatagenResult run_datagen(const AugmentedKb& akb, const TypeMap& types, const DatagenConfig& config,
                          const QuestionGenerator& generator, const Paraphraser& paraphraser) {
    const auto graphs = enforce_unique_gt(build_graphs(akb));
    std::vector<const OneHopGraph*> todo;
    if (config.doc_ids.empty()) {
        for (const auto& [id, g] : graphs) {
            todo.push_back(&g);
        }
    } else {
        std::set<std::string> wanted(config.doc_ids.begin(), config.doc_ids.end());
        for (const auto& id : wanted) {
            const auto it = graphs.find(id);
            if (it == graphs.end()) {
                fail(ErrorKind::kData, "datagen: unknown doc id " + id);
            }
            todo.push_back(&it->second);
        }
    }

    struct Outcome {
        std::vector<QaSample> samples;
        std::vector<Rejection> rejections;
    };
    std::vector<Outcome> outcomes(todo.size());
    const Rng base(config.seed);
    parallel_for(todo.size(), config.threads, [&](std::size_t i) {
        const OneHopGraph& g = *todo[i];
        const Rng stream = base.fork(g.doc_id);
        std::set<std::pair<std::string, std::string>> seen_pairs;
        for (std::size_t round = 0; round < std::max<std::size_t>(1, config.rounds); ++round) {
            Rng rng = round == 0 ? stream : stream.fork(static_cast<std::uint64_t>(round));
            const auto sg = extract_target_subgraph(g, rng);
            if (!sg) {
                outcomes[i].rejections.push_back({g.doc_id, RejectReason::kNoQualifier,
                                                  std::to_string(g.neighbors.size()) + " eligible neighbors", ""});
                return;
            }
            if (!seen_pairs.emplace(sg->query_entity, sg->qualifying_entity).second) {
                continue;
            }
            QaSample s;
            try {
                s = generate_question(*sg, types, generator);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::kGeneration) {
                    throw;
                }
                outcomes[i].rejections.push_back({g.doc_id, RejectReason::kStripFailure, e.what(), ""});
                continue;
            }
            if (config.paraphrase) {
                s.question = paraphrase(s.question, paraphraser);
            }
            s.sample_id = round == 0 ? "q-" + g.doc_id : "q-" + g.doc_id + "-" + std::to_string(round);
            if (auto bad = validate_sample(s, g.main_image_key)) {
                outcomes[i].rejections.push_back(std::move(*bad));
                continue;
            }
            outcomes[i].samples.push_back(std::move(s));
        }
    });

    DatagenResult result;
    std::vector<QaSample> drafts;
    for (auto& o : outcomes) {
        for (auto& s : o.samples) {
            drafts.push_back(std::move(s));
        }
        for (auto& r : o.rejections) {
            result.rejected.push_back(std::move(r));
        }
    }
    result.drafted = drafts.size();
    std::vector<std::pair<std::string, std::string>> bodies;
    for (const auto& [id, d] : akb) {
        bodies.emplace_back(id, d.raw.body);
    }
    auto filtered = bm25_leak_filter(drafts, Bm25Index(bodies), config.bm25_k);
    result.samples = std::move(filtered.kept);
    for (auto& r : filtered.rejected) {
        result.rejected.push_back(std::move(r));
    }
    return result;
}

std::string to_jsonl(const Rejection& r) {
    nlohmann::ordered_json j;
    j["doc_id"] = r.doc_id;
    j["reason"] = to_string(r.reason);
    j["detail"] = r.detail;
    j["question"] = r.question;
    return j.dump();
}

void write_rejections(const std::filesystem::path& path, const std::vector<Rejection>& rejected) {
    std::vector<std::string> lines;
    lines.reserve(rejected.size());
    for (const auto& r : rejected) {
        lines.push_back(to_jsonl(r));
    }
    write_text_lines(path, lines);
}

}  // namespace mmr
