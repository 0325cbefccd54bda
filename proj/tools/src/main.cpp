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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mmr/augment.hpp"
#include "mmr/checkpoint.hpp"
#include "mmr/cli/run_config.hpp"
#include "mmr/datagen.hpp"
#include "mmr/errors.hpp"
#include "mmr/eval.hpp"
#include "mmr/index.hpp"
#include "mmr/synth.hpp"
#include "mmr/train.hpp"

namespace fs = std::filesystem;
using namespace mmr;
using mmr::cli::RunConfig;

namespace {

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

RunConfig load_config(const Common& common) {
    RunConfig cfg;
    std::string path = common.config;
    if (path.empty()) {
        if (const char* env = std::getenv("MMR_CONFIG")) {
            path = env;
        }
    }
    if (!path.empty()) {
        cfg = cli::load_run_config(path);
    }
    for (const auto& s : common.sets) {
        cli::apply_override(cfg, s);
    }
    if (common.seed) cfg.seed = *common.seed;
    if (common.threads) cfg.threads = *common.threads;
    cfg.resolve();
    return cfg;
}

std::unique_ptr<EmbeddingProvider> make_provider(const RunConfig& cfg, const EncoderConfig& enc) {
    if (const auto it = cfg.paths.find("embeddings"); it != cfg.paths.end()) {
        cli::require_inputs({it->second});
        auto p = std::make_unique<FileEmbeddingProvider>(it->second, enc.num_patches);
        if (p->text_dim() != enc.text_dim || p->image_dim() != enc.image_dim) {
            fail(ErrorKind::kConfig, "embedding file dimensions do not match the encoder config");
        }
        return p;
    }
    return std::make_unique<SeededEmbeddingProvider>(enc.text_dim, enc.image_dim, enc.num_patches);
}

// Resolves a path from its flag, then the [paths] entry, then a default.
fs::path pick(const std::string& flag, const RunConfig& cfg, const std::string& name, const fs::path& fallback = {}) {
    return flag.empty() ? cli::path_or(cfg, name, fallback) : fs::path(flag);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::kIo, "cannot write " + path.string());
    }
    out << text;
}

std::vector<std::size_t> parse_ks(const std::string& s) {
    std::vector<std::size_t> ks;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            const long v = std::stol(item);
            if (v < 1) throw std::invalid_argument("k");
            ks.push_back(static_cast<std::size_t>(v));
        } catch (const std::logic_error&) {
            fail(ErrorKind::kConfig, "invalid k list '" + s + "'");
        }
    }
    if (ks.empty()) {
        fail(ErrorKind::kConfig, "empty k list");
    }
    return ks;
}

std::vector<DocFlags> parse_rows(const std::string& s) {
    std::vector<DocFlags> rows;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ';')) {
        rows.push_back(DocFlags::parse(item));
    }
    return rows;
}

void emit_report(const EvalReport& report, const fs::path& out) {
    std::cout << report.to_table();
    if (!out.empty()) {
        write_text(out, report.to_csv());
        std::cout << "report written to " << out.string() << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-image late-interaction retrieval toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("-c,--config", common.config, "INI config file (default: $MMR_CONFIG)");
    app.add_option("--set", common.sets, "Override a config value, e.g. --set train.epochs=3")->type_name("SECTION.KEY=VALUE")->allow_extra_args(false);
    app.add_option("--seed", common.seed, "Master seed for every random choice");
    app.add_option("--threads", common.threads, "Worker threads (0 = hardware concurrency)");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic KB and benchmark");
    std::string synth_out;
    std::optional<std::size_t> synth_docs;
    std::optional<double> synth_fraction;
    synth->add_option("-o,--out-dir", synth_out, "Output directory (paths.out_dir)");
    synth->add_option("--docs", synth_docs, "Number of KB documents");
    synth->add_option("--fraction-shortcut", synth_fraction, "Share of shortcut samples in [0, 1]");

    // augment
    auto* augment = app.add_subcommand("augment", "Link related entities and attach their images");
    std::string aug_kb, aug_out;
    std::optional<std::size_t> aug_cap;
    augment->add_option("--kb", aug_kb, "Input KB JSONL (paths.kb)");
    augment->add_option("-o,--out", aug_out, "Augmented KB JSONL (paths.augmented)");
    augment->add_option("--cap", aug_cap, "Keep at most this many related entities per document");

    // datagen
    auto* datagen = app.add_subcommand("datagen", "Generate shortcut-free QA samples from an augmented KB");
    std::string dg_aug, dg_types, dg_out, dg_rejected;
    std::size_t dg_rounds = 1;
    bool dg_no_paraphrase = false;
    datagen->add_option("--augmented", dg_aug, "Augmented KB JSONL (paths.augmented)");
    datagen->add_option("--typemap", dg_types, "Entity type JSON (paths.typemap)");
    datagen->add_option("-o,--out", dg_out, "Sample JSONL (paths.samples)");
    datagen->add_option("--rejected", dg_rejected, "Rejected-sample JSONL (paths.rejected; default <out>.rejected.jsonl)");
    datagen->add_option("--rounds", dg_rounds, "Subgraph draws per document")->check(CLI::PositiveNumber);
    datagen->add_flag("--no-paraphrase", dg_no_paraphrase, "Keep template questions as generated");

    // train
    auto* trainc = app.add_subcommand("train", "Train encoder parameters with in-batch negatives");
    std::string tr_aug, tr_samples, tr_flags, tr_out, tr_stats, tr_init, tr_mode, tr_opt;
    std::optional<std::size_t> tr_epochs;
    std::optional<double> tr_lr;
    trainc->add_option("--augmented", tr_aug, "Augmented KB JSONL (paths.augmented)");
    trainc->add_option("--samples", tr_samples, "Training samples (paths.train_samples)");
    trainc->add_option("--flags", tr_flags, "Document flags: none, all or a list such as MI,MMF (train.flags)");
    trainc->add_option("-o,--out", tr_out, "Checkpoint to write (paths.params)");
    trainc->add_option("--stats", tr_stats, "Training statistics JSON (default <out>.stats.json)");
    trainc->add_option("--init", tr_init, "Start from this checkpoint instead of a fresh initialization");
    trainc->add_option("--query-mode", tr_mode, "image_text or image_only (train.query_mode)");
    trainc->add_option("--optimizer", tr_opt, "sgd or adam (train.optimizer)");
    trainc->add_option("--epochs", tr_epochs, "Epochs (train.epochs)");
    trainc->add_option("--lr", tr_lr, "Learning rate (train.learning_rate)");

    // index
    auto* indexc = app.add_subcommand("index", "Encode documents and build a retrieval index");
    std::string ix_aug, ix_params, ix_flags, ix_out;
    std::optional<std::size_t> ix_centroids;
    bool ix_lossless = false;
    indexc->add_option("--augmented", ix_aug, "Augmented KB JSONL (paths.augmented)");
    indexc->add_option("--params", ix_params, "Checkpoint (paths.params)");
    indexc->add_option("--flags", ix_flags, "Document flags (train.flags)");
    indexc->add_option("-o,--out", ix_out, "Index file (paths.index)");
    indexc->add_option("--centroids", ix_centroids, "Number of centroids (index.k_centroids; 0 = automatic)");
    indexc->add_flag("--lossless", ix_lossless, "Store raw residuals (index.lossless)");

    // search
    auto* search = app.add_subcommand("search", "Retrieve documents for one query");
    std::string se_index, se_aug, se_params, se_text, se_image, se_flags, se_mode;
    std::optional<std::size_t> se_k, se_nprobe;
    search->add_option("--index", se_index, "Index file (paths.index); without it the KB is scored exhaustively");
    search->add_option("--augmented", se_aug, "Augmented KB for exhaustive scoring (paths.augmented)");
    search->add_option("--params", se_params, "Checkpoint (paths.params)");
    search->add_option("--text", se_text, "Question text")->required();
    search->add_option("--image", se_image, "Query image key")->required();
    search->add_option("--flags", se_flags, "Document flags for exhaustive scoring (train.flags)");
    search->add_option("--query-mode", se_mode, "image_text or image_only (train.query_mode)");
    search->add_option("-k,--k", se_k, "Results to print (index.k)");
    search->add_option("--nprobe", se_nprobe, "Centroids probed per query token (index.nprobe)");

    // eval
    auto* evalc = app.add_subcommand("eval", "Recall@K over a sample file");
    std::string ev_index, ev_aug, ev_params, ev_samples, ev_flags, ev_report, ev_ks = "1,5,10", ev_mode;
    bool ev_distractors = false;
    evalc->add_option("--index", ev_index, "Index file; without it the KB is scored exhaustively");
    evalc->add_option("--augmented", ev_aug, "Augmented KB JSONL (paths.augmented)");
    evalc->add_option("--params", ev_params, "Checkpoint (paths.params)");
    evalc->add_option("--samples", ev_samples, "Test samples (paths.test_samples)");
    evalc->add_option("--flags", ev_flags, "Document flags for exhaustive scoring (train.flags)");
    evalc->add_option("--query-mode", ev_mode, "image_text or image_only (train.query_mode)");
    evalc->add_option("--report", ev_report, "CSV report (paths.report)");
    evalc->add_option("--ks", ev_ks, "Comma-separated cutoffs");
    evalc->add_flag("--distractors", ev_distractors, "Also report distractor recall (needs --augmented)");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Train and evaluate one model per document-flag row");
    std::string ab_aug, ab_train, ab_test, ab_report, ab_rows = "none;MI;MI,MMF;MI,MMF,ETE", ab_ks = "5";
    ablate->add_option("--augmented", ab_aug, "Augmented KB JSONL (paths.augmented)");
    ablate->add_option("--train", ab_train, "Training samples (paths.train_samples)");
    ablate->add_option("--test", ab_test, "Test samples (paths.test_samples)");
    ablate->add_option("--report", ab_report, "CSV report (paths.report)");
    ablate->add_option("--rows", ab_rows, "Semicolon-separated flag sets");
    ablate->add_option("--ks", ab_ks, "Comma-separated cutoffs");

    // probe
    auto* probe = app.add_subcommand("probe", "Train and evaluate with a restricted query mode");
    std::string pr_aug, pr_train, pr_test, pr_report, pr_mode, pr_flags = "none", pr_ks = "1,5";
    probe->add_option("--mode", pr_mode, "image_only or image_text")->required();
    probe->add_option("--augmented", pr_aug, "Augmented KB JSONL (paths.augmented)");
    probe->add_option("--train", pr_train, "Training samples (paths.train_samples)");
    probe->add_option("--test", pr_test, "Test samples (paths.test_samples)");
    probe->add_option("--report", pr_report, "CSV report (paths.report)");
    probe->add_option("--flags", pr_flags, "Document flags of the probed model");
    probe->add_option("--ks", pr_ks, "Comma-separated cutoffs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        RunConfig cfg = load_config(common);
        auto flags_or = [&](const std::string& f) { return f.empty() ? cfg.train.flags : DocFlags::parse(f); };
        auto mode_or = [&](const std::string& m) { return m.empty() ? cfg.train.query_mode : parse_query_mode(m); };

        if (*synth) {
            if (synth_docs) cfg.synth.n_docs = *synth_docs;
            if (synth_fraction) cfg.synth.fraction_shortcut = *synth_fraction;
            cfg.validate();
            const fs::path dir = pick(synth_out, cfg, "out_dir");
            if (dir.empty()) {
                fail(ErrorKind::kConfig, "synth needs --out-dir or paths.out_dir");
            }
            fs::create_directories(dir);
            const auto data = generate_synthetic(cfg.synth);
            write_kb(dir / "kb.jsonl", data.kb.kb);
            write_typemap(dir / "typemap.json", data.kb.types);
            write_augmented_kb(dir / "augmented.jsonl", data.augmented);
            write_samples(dir / "train.jsonl", data.benchmark.train);
            write_samples(dir / "test_seen.jsonl", data.benchmark.test_seen);
            write_samples(dir / "test_unseen.jsonl", data.benchmark.test_unseen);
            write_samples(dir / "test.jsonl", data.benchmark.test());
            std::cout << "wrote " << data.kb.kb.size() << " documents, " << data.benchmark.train.size() << " train / "
                      << data.benchmark.test_seen.size() << " seen / " << data.benchmark.test_unseen.size()
                      << " unseen samples to " << dir.string() << '\n';
        } else if (*augment) {
            cfg.validate();
            const auto in = pick(aug_kb, cfg, "kb");
            const auto out = pick(aug_out, cfg, "augmented");
            cli::require_inputs({in});
            cli::require_outputs({out});
            const auto akb = augment_kb(read_kb(in), DictionaryLinker(), aug_cap, cfg.threads);
            std::size_t related = 0, warnings = 0;
            for (const auto& [id, d] : akb) {
                related += d.related.size();
                warnings += d.warnings.size();
                for (const auto& w : d.warnings) {
                    std::cerr << "warning: " << id << ": " << w << '\n';
                }
            }
            write_augmented_kb(out, akb);
            std::cout << "augmented " << akb.size() << " documents, mean related entities "
                      << (akb.empty() ? 0.0 : static_cast<double>(related) / static_cast<double>(akb.size()))
                      << ", " << warnings << " warnings\n";
        } else if (*datagen) {
            cfg.validate();
            const auto in = pick(dg_aug, cfg, "augmented");
            const auto types = pick(dg_types, cfg, "typemap");
            const auto out = pick(dg_out, cfg, "samples");
            cli::require_inputs({in, types});
            const auto rejected = pick(dg_rejected, cfg, "rejected", fs::path(out.string() + ".rejected.jsonl"));
            cli::require_outputs({out, rejected});
            DatagenConfig dc;
            dc.seed = cfg.seed;
            dc.threads = cfg.threads;
            dc.rounds = dg_rounds;
            dc.paraphrase = !dg_no_paraphrase;
            const auto result = run_datagen(read_augmented_kb(in), read_typemap(types), dc,
                                            TemplateQuestionGenerator(), RuleParaphraser());
            write_samples(out, result.samples);
            write_rejections(rejected, result.rejected);
            std::cout << "kept " << result.samples.size() << " samples, rejected " << result.rejected.size() << '\n';
        } else if (*trainc) {
            if (!tr_mode.empty()) cfg.train.query_mode = parse_query_mode(tr_mode);
            if (!tr_opt.empty()) cfg.train.optimizer = parse_optimizer(tr_opt);
            if (!tr_flags.empty()) cfg.train.flags = DocFlags::parse(tr_flags);
            if (tr_epochs) cfg.train.epochs = *tr_epochs;
            if (tr_lr) cfg.train.learning_rate = *tr_lr;
            cfg.validate();
            const auto in = pick(tr_aug, cfg, "augmented");
            const auto samples = pick(tr_samples, cfg, "train_samples", cli::path_or(cfg, "samples", {}));
            const auto out = pick(tr_out, cfg, "params");
            const fs::path stats_path = tr_stats.empty() ? fs::path(out.string() + ".stats.json") : fs::path(tr_stats);
            cli::require_inputs({in, samples});
            if (!tr_init.empty()) cli::require_inputs({tr_init});
            cli::require_outputs({out, stats_path});
            EncoderParams params =
                tr_init.empty() ? EncoderParams::init(cfg.encoder, cfg.seed) : load_params(tr_init);
            const auto provider = make_provider(cfg, params.config);
            const auto stats = train(params, read_samples(samples), read_augmented_kb(in), *provider, cfg.train);
            save_params(out, params);
            nlohmann::ordered_json j;
            j["steps"] = stats.steps;
            j["checksum"] = stats.checksum;
            j["losses"] = stats.losses;
            j["grad_norms"] = stats.grad_norms;
            write_text(stats_path, j.dump(1) + "\n");
            std::cout << "trained " << stats.steps << " steps";
            if (!stats.losses.empty()) {
                std::cout << ", loss " << stats.losses.front() << " -> " << stats.losses.back();
            }
            std::cout << "; checkpoint " << out.string() << '\n';
        } else if (*indexc) {
            if (ix_centroids) cfg.index.k_centroids = *ix_centroids;
            if (ix_lossless) cfg.index.lossless = true;
            cfg.validate();
            const auto in = pick(ix_aug, cfg, "augmented");
            const auto params_path = pick(ix_params, cfg, "params");
            const auto out = pick(ix_out, cfg, "index");
            cli::require_inputs({in, params_path});
            cli::require_outputs({out});
            const auto params = load_params(params_path);
            const auto provider = make_provider(cfg, params.config);
            const auto corpus = encode_corpus(read_augmented_kb(in), params, *provider, flags_or(ix_flags), cfg.threads);
            const auto index = RetrievalIndex::build(corpus, cfg.index);
            index.save(out);
            std::cout << "indexed " << index.num_docs() << " documents (" << index.num_vectors() << " vectors, "
                      << index.num_centroids() << " centroids) to " << out.string() << '\n';
        } else if (*search) {
            if (se_k) cfg.search.k = *se_k;
            if (se_nprobe) cfg.search.nprobe = *se_nprobe;
            cfg.search.candidate_doc_cap = std::max(cfg.search.candidate_doc_cap, cfg.search.k);
            cfg.validate();
            const auto params_path = pick(se_params, cfg, "params");
            cli::require_inputs({params_path});
            const auto params = load_params(params_path);
            const auto provider = make_provider(cfg, params.config);
            const auto query = encode_query({se_text, se_image}, params, *provider, mode_or(se_mode));
            std::vector<ScoredDoc> results;
            const auto index_path = pick(se_index, cfg, "index");
            if (!index_path.empty() && se_aug.empty()) {
                cli::require_inputs({index_path});
                results = RetrievalIndex::load(index_path).search(query, cfg.search);
            } else {
                const auto in = pick(se_aug, cfg, "augmented");
                cli::require_inputs({in});
                const auto corpus = encode_corpus(read_augmented_kb(in), params, *provider, flags_or(se_flags), cfg.threads);
                results = rank_exact(query, corpus, cfg.search.k, cfg.threads);
            }
            for (std::size_t i = 0; i < results.size(); ++i) {
                std::cout << (i + 1) << '\t' << results[i].doc_id << '\t' << results[i].score << '\n';
            }
        } else if (*evalc) {
            cfg.validate();
            const auto params_path = pick(ev_params, cfg, "params");
            const auto samples_path = pick(ev_samples, cfg, "test_samples", cli::path_or(cfg, "samples", {}));
            const auto report_path = pick(ev_report, cfg, "report");
            cli::require_inputs({params_path, samples_path});
            if (!report_path.empty()) cli::require_outputs({report_path});
            const auto params = load_params(params_path);
            const auto provider = make_provider(cfg, params.config);
            const auto samples = read_samples(samples_path);
            const auto ks = parse_ks(ev_ks);
            const std::size_t depth = *std::max_element(ks.begin(), ks.end());
            const auto flags = flags_or(ev_flags);
            std::optional<AugmentedKb> akb;
            if (!ev_aug.empty() || ev_index.empty()) {
                const auto in = pick(ev_aug, cfg, "augmented");
                cli::require_inputs({in});
                akb = read_augmented_kb(in);
            }
            std::vector<SampleRanking> rankings;
            std::string label = flags.label();
            if (!ev_index.empty()) {
                cli::require_inputs({ev_index});
                const auto index = RetrievalIndex::load(ev_index);
                rankings = rank_samples(samples, params, *provider, mode_or(ev_mode),
                                        IndexRetriever(index, cfg.search), depth, cfg.threads);
                label += "@index";
            } else {
                const ExactRetriever retriever(encode_corpus(*akb, params, *provider, flags, cfg.threads));
                rankings = rank_samples(samples, params, *provider, mode_or(ev_mode), retriever, depth, cfg.threads);
            }
            std::optional<DistractorMap> distractors;
            if (ev_distractors) {
                if (!akb) fail(ErrorKind::kConfig, "--distractors needs --augmented");
                distractors = build_distractor_map(*akb, samples);
            }
            emit_report(evaluate_rankings(rankings, {ks, "synthetic", label, distractors ? &*distractors : nullptr}),
                        report_path);
        } else if (*ablate || *probe) {
            cfg.validate();
            const bool is_probe = probe->parsed();
            const auto in = pick(is_probe ? pr_aug : ab_aug, cfg, "augmented");
            const auto train_path = pick(is_probe ? pr_train : ab_train, cfg, "train_samples");
            const auto test_path = pick(is_probe ? pr_test : ab_test, cfg, "test_samples");
            const auto report_path = pick(is_probe ? pr_report : ab_report, cfg, "report");
            cli::require_inputs({in, train_path, test_path});
            if (!report_path.empty()) cli::require_outputs({report_path});
            ExperimentConfig ec;
            ec.encoder = cfg.encoder;
            ec.train = cfg.train;
            ec.init_seed = cfg.seed;
            ec.threads = cfg.threads;
            ec.ks = parse_ks(is_probe ? pr_ks : ab_ks);
            const auto provider = make_provider(cfg, cfg.encoder);
            const auto akb = read_augmented_kb(in);
            const auto train_samples = read_samples(train_path);
            const auto test_samples = read_samples(test_path);
            EvalReport report;
            if (is_probe) {
                ec.train.flags = DocFlags::parse(pr_flags);
                report = run_shortcut_probe(akb, train_samples, test_samples, pr_mode, *provider, ec);
            } else {
                report = run_ablation(akb, train_samples, test_samples, parse_rows(ab_rows), *provider, ec);
            }
            emit_report(report, report_path);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
