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

#include "mmr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mmr/augment.hpp"
#include "mmr/datagen.hpp"
#include "mmr/errors.hpp"
#include "mmr/rng.hpp"
#include "mmr/text.hpp"

namespace mmr {

const std::vector<std::string>& relation_phrases() {
    // Content words are all synonym-table keys, so paraphrased questions
    // share no relation vocabulary with the bodies.
    static const std::vector<std::string> phrases = {
        "feeds on",          "is native to",   "is located near", "was founded by", "was built by",
        "was designed by",   "owns",           "borders",         "hosts",          "inhabits",
        "produces",          "supplies",       "was visited by",  "was studied by", "was painted by",
        "wrote about",       "created",        "was named after", "is famous for",  "is known for",
        "lives near",        "grows near",     "contains",        "follows",        "supports",
        "attacks",           "protects",       "connects to",     "resembles",      "trades with",
        "rules",             "admires",        "guards",          "serves",         "hunts",
        "carries",           "teaches",        "sells",           "buys",           "helps",
        "watches",           "shelters",       "pollinates",      "influenced",
    };
    return phrases;
}

const std::vector<std::string>& type_nouns() {
    static const std::vector<std::string> nouns = {
        "beetle", "plant",   "city",  "river",    "painter", "museum", "bird",   "mountain",
        "company", "festival", "ship", "language", "temple", "island", "poet",   "bridge",
    };
    return nouns;
}

void SynthConfig::validate() const {
    if (n_docs < 2) {
        fail(ErrorKind::kConfig, "synth n_docs must be >= 2");
    }
    if (!(fraction_shortcut >= 0.0 && fraction_shortcut <= 1.0)) {
        fail(ErrorKind::kConfig, "synth fraction_shortcut must be in [0, 1]");
    }
    if (!(mean_links >= 1.0) || !std::isfinite(mean_links)) {
        fail(ErrorKind::kConfig, "synth mean_links must be >= 1");
    }
    if (n_types < 1 || n_types > type_nouns().size()) {
        fail(ErrorKind::kConfig, "synth n_types must be in [1, " + std::to_string(type_nouns().size()) + "]");
    }
    if (n_relations < 1 || n_relations > relation_phrases().size()) {
        fail(ErrorKind::kConfig,
             "synth n_relations must be in [1, " + std::to_string(relation_phrases().size()) + "]");
    }
    if (!(hub_exponent >= 0.0) || !std::isfinite(hub_exponent)) {
        fail(ErrorKind::kConfig, "synth hub_exponent must be >= 0");
    }
    if (!(unseen_fraction >= 0.0 && unseen_fraction < 1.0)) {
        fail(ErrorKind::kConfig, "synth unseen_fraction must be in [0, 1)");
    }
}

namespace {

std::string make_name(Rng& rng) {
    static const char* onsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
                                   "br", "dr", "kr", "tr", "st", "gl", "sh", "th"};
    static const char* vowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ea"};
    static const char* codas[] = {"", "", "", "n", "r", "l", "s", "th", "x"};
    const std::size_t syllables = 2 + rng.below(2);
    std::string name;
    for (std::size_t s = 0; s < syllables; ++s) {
        name += onsets[rng.below(std::size(onsets))];
        name += vowels[rng.below(std::size(vowels))];
        if (s + 1 == syllables || rng.below(3) == 0) {
            name += codas[rng.below(std::size(codas))];
        }
    }
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    return name;
}

std::set<std::string> reserved_words() {
    std::set<std::string> words;
    for (const auto& p : relation_phrases()) {
        for (const auto& w : tokenize(p)) {
            words.insert(w);
        }
    }
    for (const auto& t : type_nouns()) {
        words.insert(t);
        words.insert(t + "s");
        words.insert(t + "es");
    }
    for (const auto& [k, v] : default_paraphrase_rules().synonyms) {
        words.insert(k);
        words.insert(v);
    }
    for (const char* w : {"which", "this", "given", "that", "it", "a", "an", "the"}) {
        words.insert(w);
    }
    return words;
}

std::string doc_id_for(std::size_t i, std::size_t n) {
    std::string digits = std::to_string(i);
    const std::size_t width = std::max<std::size_t>(4, std::to_string(n - 1).size());
    return "d" + std::string(width - digits.size(), '0') + digits;
}

}  // namespace

SynthKb generate_kb(const SynthConfig& config) {
    config.validate();
    const std::size_t n = config.n_docs;
    const Rng root(config.seed);

    Rng name_rng = root.fork("names");
    const auto reserved = reserved_words();
    std::set<std::string> used;
    std::vector<std::string> names;
    while (names.size() < n) {
        auto name = make_name(name_rng);
        const auto norm = normalize_surface(name);
        if (reserved.contains(norm) || !used.insert(norm).second) {
            continue;
        }
        names.push_back(std::move(name));
    }

    SynthKb out;
    Rng type_rng = root.fork("types");
    for (const auto& name : names) {
        out.types[name] = type_nouns()[type_rng.below(config.n_types)];
    }

    // Popularity follows a Zipf law over a random ordering of the entities.
    std::vector<std::size_t> rank(n);
    std::iota(rank.begin(), rank.end(), 0);
    root.fork("popularity").shuffle(rank);
    std::vector<double> weight(n);
    for (std::size_t i = 0; i < n; ++i) {
        weight[i] = std::pow(static_cast<double>(rank[i] + 1), -config.hub_exponent);
    }

    const Rng doc_root = root.fork("docs");
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = doc_root.fork(static_cast<std::uint64_t>(i));
        const auto extra = rng.poisson(config.mean_links - 1.0);
        const std::size_t k = std::min<std::size_t>(n - 1, 1 + static_cast<std::size_t>(extra));
        std::vector<double> w = weight;
        w[i] = 0.0;
        std::vector<std::string> sentences;
        for (std::size_t m = 0; m < k; ++m) {
            const double total = std::accumulate(w.begin(), w.end(), 0.0);
            const double u = rng.uniform() * total;
            std::size_t pick = n;
            double cum = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                if (w[c] == 0.0) {
                    continue;
                }
                pick = c;
                cum += w[c];
                if (u < cum) {
                    break;
                }
            }
            w[pick] = 0.0;
            const auto& phrase = relation_phrases()[rng.below(config.n_relations)];
            sentences.push_back(names[i] + " " + phrase + " " + names[pick] + ".");
        }
        RawDocument doc;
        doc.doc_id = doc_id_for(i, n);
        doc.title = names[i];
        doc.body = join(sentences, " ");
        doc.main_image_key = image_key_for(names[i]);
        out.kb.emplace(doc.doc_id, std::move(doc));
    }
    return out;
}

std::vector<QaSample> Benchmark::test() const {
    std::vector<QaSample> out = test_seen;
    out.insert(out.end(), test_unseen.begin(), test_unseen.end());
    return out;
}

std::vector<QaSample> shortcut_samples(const AugmentedDocument& doc, const TypeMap& types, bool paraphrase_on) {
    const RuleParaphraser paraphraser;
    const auto graph = build_onehop_graph(doc);
    std::vector<QaSample> out;
    for (std::size_t j = 0; j < graph.neighbors.size(); ++j) {
        const auto& nb = graph.neighbors[j];
        auto words = tokenize(nb.relation_sentence);
        const auto lead = tokenize(graph.main_entity);
        const auto tail = tokenize(nb.entity);
        // Sentences have the form "<title> <relation> <neighbor>."
        if (words.size() < lead.size() + tail.size() + 1 ||
            !std::equal(lead.begin(), lead.end(), words.begin()) ||
            !std::equal(tail.rbegin(), tail.rend(), words.rbegin())) {
            continue;
        }
        const std::vector<std::string> relation(words.begin() + static_cast<std::ptrdiff_t>(lead.size()),
                                                words.end() - static_cast<std::ptrdiff_t>(tail.size()));
        QaSample s;
        s.sample_id = "s-" + doc.raw.doc_id + "-" + std::to_string(j);
        s.question = "This " + type_of(types, graph.main_entity) + " " + join(relation, " ") + " which " +
                     type_of(types, nb.entity) + "?";
        if (paraphrase_on) {
            s.question = paraphrase(s.question, paraphraser);
        }
        s.query_image_key = doc.raw.main_image_key;
        s.answer = nb.entity;
        s.gt_doc_id = doc.raw.doc_id;
        s.query_entity = graph.main_entity;
        s.shortcut = true;
        if (!validate_sample(s, doc.raw.main_image_key)) {
            out.push_back(std::move(s));
        }
    }
    return out;
}

namespace {

std::vector<QaSample> take(std::vector<QaSample>& pool, std::size_t count, const std::set<std::string>* allowed_gt,
                           const char* what) {
    std::vector<QaSample> out;
    std::vector<QaSample> rest;
    for (auto& s : pool) {
        if (out.size() < count && (allowed_gt == nullptr || allowed_gt->contains(s.gt_doc_id))) {
            out.push_back(std::move(s));
        } else {
            rest.push_back(std::move(s));
        }
    }
    if (out.size() < count) {
        fail(ErrorKind::kGeneration, std::string("synthetic KB yields only ") + std::to_string(out.size()) + " " +
                                         what + " samples, " + std::to_string(count) + " requested");
    }
    pool = std::move(rest);
    return out;
}

std::size_t shortcut_count(std::size_t n, double fraction) {
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

void sort_by_id(std::vector<QaSample>& samples) {
    std::sort(samples.begin(), samples.end(),
              [](const QaSample& a, const QaSample& b) { return a.sample_id < b.sample_id; });
}

}  // namespace

Benchmark generate_benchmark(const AugmentedKb& kb, const TypeMap& types, const SynthConfig& config) {
    config.validate();
    const Rng root = Rng(config.seed).fork("benchmark");

    std::vector<std::string> ids;
    for (const auto& [id, d] : kb) {
        ids.push_back(id);
    }
    root.fork("unseen").shuffle(ids);
    const auto n_unseen = static_cast<std::size_t>(std::llround(config.unseen_fraction * static_cast<double>(ids.size())));
    const std::set<std::string> unseen(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_unseen));

    DatagenConfig dc;
    dc.seed = config.seed;
    dc.paraphrase = config.paraphrase;
    dc.rounds = config.datagen_rounds;
    const RuleParaphraser paraphraser;
    const TemplateQuestionGenerator generator;
    const auto free = run_datagen(kb, types, dc, generator, paraphraser).samples;

    std::vector<QaSample> free_seen_pool, free_unseen_pool, sc_seen_pool, sc_unseen_pool;
    for (const auto& s : free) {
        (unseen.contains(s.gt_doc_id) ? free_unseen_pool : free_seen_pool).push_back(s);
    }
    for (const auto& [id, d] : kb) {
        for (auto& s : shortcut_samples(d, types, config.paraphrase)) {
            (unseen.contains(id) ? sc_unseen_pool : sc_seen_pool).push_back(std::move(s));
        }
    }
    root.fork("free-seen").shuffle(free_seen_pool);
    root.fork("free-unseen").shuffle(free_unseen_pool);
    root.fork("sc-seen").shuffle(sc_seen_pool);
    root.fork("sc-unseen").shuffle(sc_unseen_pool);

    const double f = config.fraction_shortcut;
    Benchmark b;
    {
        const std::size_t sc = shortcut_count(config.n_train, f);
        b.train = take(sc_seen_pool, sc, nullptr, "shortcut training");
        auto fr = take(free_seen_pool, config.n_train - sc, nullptr, "shortcut-free training");
        b.train.insert(b.train.end(), fr.begin(), fr.end());
    }
    std::set<std::string> train_gt;
    std::vector<std::string> train_gt_list;
    for (const auto& s : b.train) {
        if (train_gt.insert(s.gt_doc_id).second) {
            train_gt_list.push_back(s.gt_doc_id);
        }
    }
    {
        const std::size_t sc = shortcut_count(config.n_test_seen, f);
        b.test_seen = take(sc_seen_pool, sc, &train_gt, "shortcut seen-test");
        auto fr = take(free_seen_pool, config.n_test_seen - sc, &train_gt, "shortcut-free seen-test");
        b.test_seen.insert(b.test_seen.end(), fr.begin(), fr.end());
    }
    {
        const std::size_t sc = shortcut_count(config.n_test_unseen, f);
        b.test_unseen = take(sc_unseen_pool, sc, nullptr, "shortcut unseen-test");
        auto fr = take(free_unseen_pool, config.n_test_unseen - sc, nullptr, "shortcut-free unseen-test");
        b.test_unseen.insert(b.test_unseen.end(), fr.begin(), fr.end());
    }
    for (auto& s : b.train) {
        s.split = Split::kTrain;
    }
    b.test_seen = split_seen_unseen(std::move(b.test_seen), train_gt_list);
    b.test_unseen = split_seen_unseen(std::move(b.test_unseen), train_gt_list);
    sort_by_id(b.train);
    sort_by_id(b.test_seen);
    sort_by_id(b.test_unseen);
    return b;
}

SynthData generate_synthetic(const SynthConfig& config) {
    SynthData out;
    out.kb = generate_kb(config);
    out.augmented = augment_kb(out.kb.kb, DictionaryLinker());
    out.benchmark = generate_benchmark(out.augmented, out.kb.types, config);
    return out;
}

}  // namespace mmr
