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

#include <benchmark/benchmark.h>

#include "mmr/augment.hpp"
#include "mmr/bm25.hpp"
#include "mmr/encoder.hpp"
#include "mmr/synth.hpp"

namespace {

struct Fixture {
    mmr::SynthData data;
    mmr::EncoderParams params;
    mmr::SeededEmbeddingProvider provider;

    explicit Fixture(const mmr::EncoderConfig& cfg)
        : data([] {
              mmr::SynthConfig sc;
              sc.n_docs = 100;
              sc.n_train = 40;
              sc.n_test_seen = 10;
              sc.n_test_unseen = 10;
              sc.seed = 1;
              return mmr::generate_synthetic(sc);
          }()),
          params(mmr::EncoderParams::init(cfg, 1)),
          provider(cfg.text_dim, cfg.image_dim, cfg.num_patches) {}
};

mmr::EncoderConfig config_for(int preset) { return preset == 0 ? mmr::EncoderConfig{} : mmr::EncoderConfig::full_scale(); }

void BM_EncodeDocument(benchmark::State& state) {
    const Fixture f(config_for(static_cast<int>(state.range(0))));
    const auto& doc = f.data.augmented.begin()->second;
    for (auto _ : state) benchmark::DoNotOptimize(mmr::encode_document(doc, f.params, f.provider, mmr::DocFlags::all()));
}
BENCHMARK(BM_EncodeDocument)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_EncodeQuery(benchmark::State& state) {
    const Fixture f(config_for(static_cast<int>(state.range(0))));
    const auto& s = f.data.benchmark.train.front();
    for (auto _ : state) {
        benchmark::DoNotOptimize(mmr::encode_query({s.question, s.query_image_key}, f.params, f.provider));
    }
}
BENCHMARK(BM_EncodeQuery)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_Bm25TopK(benchmark::State& state) {
    const Fixture f(mmr::EncoderConfig{});
    std::vector<std::pair<std::string, std::string>> bodies;
    for (const auto& [id, d] : f.data.augmented) bodies.emplace_back(id, d.raw.body);
    const mmr::Bm25Index bm25(bodies);
    const auto& q = f.data.benchmark.train.front().question;
    for (auto _ : state) benchmark::DoNotOptimize(bm25.top_k(q, 5));
}
BENCHMARK(BM_Bm25TopK)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
