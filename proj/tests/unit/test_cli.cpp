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

#include <array>
#include <cstdio>
#include <fstream>
#include <sys/wait.h>

#include "mmr/cli/run_config.hpp"
#include "mmr/errors.hpp"
#include "mmr_test/fixtures.hpp"

namespace mmr {
namespace {

using cli::RunConfig;
namespace fs = std::filesystem;

TEST(RunConfig, ParsesSections) {
    const RunConfig c = cli::parse_run_config(
        "[run]\nseed = 7\nthreads = 3\n"
        "[encoder]\ndim = 8\n"
        "[index]\nnprobe = 2\nlossless = true\n"
        "[train]\nflags = MI,MMF\nquery_mode = image_only\nlearning_rate = 0.01\n"
        "[synth]\nn_docs = 40\nfraction_shortcut = 0.5\n"
        "[paths]\nkb = /tmp/kb.jsonl\n");
    EXPECT_EQ(c.seed, 7u);
    EXPECT_EQ(c.threads, 3u);
    EXPECT_EQ(c.encoder.dim, 8u);
    EXPECT_EQ(c.search.nprobe, 2u);
    EXPECT_TRUE(c.index.lossless);
    EXPECT_EQ(c.train.flags, (DocFlags{true, true, false}));
    EXPECT_EQ(c.train.query_mode, QueryMode::kImageOnly);
    EXPECT_DOUBLE_EQ(c.train.learning_rate, 0.01);
    EXPECT_EQ(c.synth.n_docs, 40u);
    EXPECT_DOUBLE_EQ(c.synth.fraction_shortcut, 0.5);
    EXPECT_EQ(cli::path_or(c, "kb", "x"), fs::path("/tmp/kb.jsonl"));
    EXPECT_EQ(cli::path_or(c, "index", "x"), fs::path("x"));
}

TEST(RunConfig, ResolvePropagatesSeedAndThreads) {
    RunConfig c = cli::parse_run_config("[run]\nseed = 11\nthreads = 2\n");
    c.resolve();
    EXPECT_EQ(c.train.seed, 11u);
    EXPECT_EQ(c.synth.seed, 11u);
    EXPECT_EQ(c.index.seed, 11u);
    EXPECT_EQ(c.train.threads, 2u);
}

TEST(RunConfig, Errors) {
    EXPECT_MMR_ERROR(cli::parse_run_config("[run]\nsead = 1\n"), ErrorKind::kConfig);
    EXPECT_MMR_ERROR(cli::parse_run_config("[nope]\nx = 1\n"), ErrorKind::kConfig);
    EXPECT_MMR_ERROR(cli::parse_run_config("[run]\nseed = -1\n"), ErrorKind::kConfig);
    EXPECT_MMR_ERROR(cli::parse_run_config("[train]\nlearning_rate = fast\n"), ErrorKind::kConfig);
    EXPECT_MMR_ERROR(cli::parse_run_config("[index]\nlossless = maybe\n"), ErrorKind::kConfig);
    EXPECT_MMR_ERROR(cli::parse_run_config("[train]\nflags = XYZ\n"), ErrorKind::kConfig);
    EXPECT_MMR_ERROR(cli::parse_run_config("seed = 1\n"), ErrorKind::kConfig);
    EXPECT_MMR_ERROR(cli::load_run_config("/nonexistent/run.ini"), ErrorKind::kConfig);
    RunConfig c;
    c.index.nbits = 9;
    EXPECT_MMR_ERROR(c.validate(), ErrorKind::kConfig);
}

TEST(RunConfig, Overrides) {
    RunConfig c;
    cli::apply_override(c, "train.epochs=4");
    cli::apply_override(c, "encoder.preset=full");
    EXPECT_EQ(c.train.epochs, 4u);
    EXPECT_EQ(c.encoder, EncoderConfig::full_scale());
    EXPECT_MMR_ERROR(cli::apply_override(c, "epochs=4"), ErrorKind::kConfig);
    EXPECT_MMR_ERROR(cli::apply_override(c, "train.epochs"), ErrorKind::kConfig);
    EXPECT_MMR_ERROR(cli::apply_override(c, "train.epoch=4"), ErrorKind::kConfig);
    EXPECT_MMR_ERROR(cli::apply_override(c, "encoder.preset=huge"), ErrorKind::kConfig);
}

TEST(RunConfig, EveryKnownKeyIsSettable) {
    const auto keys = cli::known_keys();
    EXPECT_GT(keys.size(), 30u);
    for (const auto& k : keys) {
        RunConfig c;
        const auto dot = k.find('.');
        const std::string section = k.substr(0, dot);
        const std::string key = k.substr(dot + 1);
        std::string value = "1";
        if (k == "train.flags") value = "MI";
        if (k == "train.query_mode") value = "image_text";
        if (k == "train.optimizer") value = "adam";
        if (k == "encoder.preset") value = "small";
        if (section == "paths") value = "/tmp/x";
        EXPECT_NO_THROW(cli::set_value(c, section, key, value)) << k;
    }
}

TEST(RunConfig, PathChecks) {
    testing::TempDir dir("cli-paths");
    std::ofstream(dir / "in.txt") << "x";
    EXPECT_NO_THROW(cli::require_inputs({dir / "in.txt"}));
    EXPECT_MMR_ERROR(cli::require_inputs({dir / "missing.txt"}), ErrorKind::kConfig);
    EXPECT_MMR_ERROR(cli::require_inputs({fs::path()}), ErrorKind::kConfig);
    EXPECT_NO_THROW(cli::require_outputs({dir / "out.txt"}));
    EXPECT_MMR_ERROR(cli::require_outputs({dir / "no" / "out.txt"}), ErrorKind::kConfig);
}

struct RunResult {
    int code = -1;
    std::string output;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(MMR_CLI_PATH) + " " + args + " 2>&1";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

TEST(CliBinary, HelpForEveryCommand) {
    const auto top = run("--help");
    EXPECT_EQ(top.code, 0);
    for (const char* sub : {"synth", "augment", "datagen", "train", "index", "search", "eval", "ablate", "probe"}) {
        EXPECT_NE(top.output.find(sub), std::string::npos) << sub;
        const auto r = run(std::string(sub) + " --help");
        EXPECT_EQ(r.code, 0) << sub;
        EXPECT_NE(r.output.find("--"), std::string::npos) << sub;
    }
}

TEST(CliBinary, UsageAndConfigErrorsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("synth --docs notanumber").code, 2);
    EXPECT_EQ(run("synth").code, 2);  // no output directory
    EXPECT_EQ(run("augment --kb /nonexistent/kb.jsonl --out /tmp/a.jsonl").code, 2);
    EXPECT_EQ(run("--set train.nope=1 synth -o /tmp").code, 2);
    EXPECT_EQ(run("-c /nonexistent.ini synth -o /tmp").code, 2);
}

TEST(CliBinary, DataErrorsExitThree) {
    testing::TempDir dir("cli-data");
    std::ofstream(dir / "kb.jsonl") << "{not json\n";
    EXPECT_EQ(run("augment --kb " + (dir / "kb.jsonl").string() + " --out " + (dir / "a.jsonl").string()).code, 3);
    std::ofstream(dir / "p.mprm") << "garbage bytes";
    std::ofstream(dir / "aug.jsonl") << "";
    EXPECT_EQ(run("index --augmented " + (dir / "aug.jsonl").string() + " --params " + (dir / "p.mprm").string() +
                  " -o " + (dir / "i.mvli").string())
                  .code,
              3);
}

// synth -> augment -> datagen -> train -> index -> eval in `dir`.
void run_pipeline(const fs::path& dir, const std::string& common) {
    const std::string d = dir.string();
    ASSERT_EQ(run(common + " synth -o " + d + " --docs 60").code, 0);
    ASSERT_EQ(run(common + " augment --kb " + d + "/kb.jsonl -o " + d + "/re_aug.jsonl").code, 0);
    ASSERT_EQ(run(common + " datagen --augmented " + d + "/augmented.jsonl --typemap " + d + "/typemap.json -o " + d +
                  "/dg.jsonl --rounds 2")
                  .code,
              0);
    ASSERT_EQ(run(common + " train --augmented " + d + "/augmented.jsonl --samples " + d + "/train.jsonl -o " + d +
                  "/p.mprm --epochs 1")
                  .code,
              0);
    ASSERT_EQ(run(common + " index --augmented " + d + "/augmented.jsonl --params " + d + "/p.mprm -o " + d +
                  "/i.mvli --lossless")
                  .code,
              0);
    ASSERT_EQ(run(common + " eval --augmented " + d + "/augmented.jsonl --params " + d + "/p.mprm --samples " + d +
                  "/test.jsonl --report " + d + "/exact.csv --ks 1,5")
                  .code,
              0);
    ASSERT_EQ(run(common + " --set index.nprobe=100000 --set index.candidate_doc_cap=100000 eval --index " + d +
                  "/i.mvli --params " + d + "/p.mprm --samples " + d + "/test.jsonl --report " + d +
                  "/index.csv --ks 1,5")
                  .code,
              0);
}

std::vector<std::string> csv_values(const fs::path& p) {
    std::vector<std::string> out;
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) out.push_back(line.substr(line.rfind(',') + 1));
    return out;
}

const std::string kSmall =
    "--seed 5 --set synth.n_train=24 --set synth.n_test_seen=8 --set synth.n_test_unseen=8 "
    "--set encoder.dim=8 --set encoder.text_dim=12 --set encoder.image_dim=12 --set encoder.attn_dim=8 "
    "--set encoder.ffn_dim=16 --set encoder.heads=2";

TEST(CliBinary, PipelineIsReproducible) {
    testing::TempDir a("cli-a");
    testing::TempDir b("cli-b");
    run_pipeline(a.path(), kSmall);
    run_pipeline(b.path(), kSmall + " --threads 3");
    for (const char* f : {"kb.jsonl", "augmented.jsonl", "re_aug.jsonl", "typemap.json", "train.jsonl", "test.jsonl",
                          "dg.jsonl", "dg.jsonl.rejected.jsonl", "p.mprm", "p.mprm.stats.json", "i.mvli", "exact.csv",
                          "index.csv"}) {
        EXPECT_EQ(testing::read_bytes(a / f), testing::read_bytes(b / f)) << f;
    }
    // Re-augmenting the KB reproduces the synth output.
    EXPECT_EQ(testing::read_bytes(a / "augmented.jsonl"), testing::read_bytes(a / "re_aug.jsonl"));
    // An exhaustive lossless index scores like the exact path.
    EXPECT_EQ(csv_values(a / "exact.csv"), csv_values(a / "index.csv"));
    EXPECT_FALSE(csv_values(a / "exact.csv").empty());
}

TEST(CliBinary, SearchOneDocKb) {
    testing::TempDir dir("cli-one");
    const std::string d = dir.path().string();
    ASSERT_EQ(run(kSmall + " synth -o " + d + " --docs 60").code, 0);
    {
        std::ifstream in(dir / "augmented.jsonl");
        std::string first;
        std::getline(in, first);
        std::ofstream(dir / "one.jsonl") << first << '\n';
    }
    ASSERT_EQ(run(kSmall + " train --augmented " + d + "/augmented.jsonl --samples " + d + "/train.jsonl -o " + d +
                  "/p.mprm --epochs 0")
                  .code,
              0);
    const auto r = run(kSmall + " search --augmented " + d + "/one.jsonl --params " + d +
                       "/p.mprm --text 'which one' --image img:anything -k 5");
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_EQ(std::count(r.output.begin(), r.output.end(), '\n'), 1);
    EXPECT_EQ(r.output.rfind("1\t", 0), 0u);
}

}  // namespace
}  // namespace mmr
