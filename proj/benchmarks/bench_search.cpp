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

#include "mmr/index.hpp"
#include "mmr/rng.hpp"
#include "mmr/vec.hpp"

namespace {

// Tokens scattered around shared topic directions.
mmr::Corpus clustered(mmr::Rng& rng, std::size_t docs, std::size_t dim) {
    std::vector<std::vector<double>> centers(32, std::vector<double>(dim));
    for (auto& c : centers)
        for (auto& x : c) x = rng.normal();
    mmr::Corpus corpus;
    for (std::size_t i = 0; i < docs; ++i) {
        std::vector<std::vector<double>> rows;
        for (std::size_t t = 0; t < 60; ++t) {
            auto r = centers[rng.below(centers.size())];
            for (auto& x : r) x += 0.3 * rng.normal();
            rows.push_back(mmr::l2_normalize(r));
        }
        corpus["doc" + std::to_string(i)] = mmr::FeatureSet::from_rows(rows);
    }
    return corpus;
}

void BM_IndexBuild(benchmark::State& state) {
    mmr::Rng rng(3);
    const auto corpus = clustered(rng, static_cast<std::size_t>(state.range(0)), 16);
    mmr::IndexConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(mmr::RetrievalIndex::build(corpus, cfg));
}
BENCHMARK(BM_IndexBuild)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_IndexSearch(benchmark::State& state) {
    mmr::Rng rng(4);
    const auto corpus = clustered(rng, static_cast<std::size_t>(state.range(0)), 16);
    const auto index = mmr::RetrievalIndex::build(corpus, {});
    const auto& query = corpus.begin()->second;
    mmr::SearchParams sp;
    sp.nprobe = static_cast<std::size_t>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(index.search(query, sp));
}
BENCHMARK(BM_IndexSearch)->Args({1000, 1})->Args({1000, 4})->Args({1000, 16})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
