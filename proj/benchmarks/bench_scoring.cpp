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

#include "mmr/rng.hpp"
#include "mmr/scoring.hpp"
#include "mmr/vec.hpp"

namespace {

mmr::FeatureSet random_set(mmr::Rng& rng, std::size_t n, std::size_t dim) {
    std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
    for (auto& r : rows) {
        for (auto& x : r) x = rng.normal();
        r = mmr::l2_normalize(r);
    }
    return mmr::FeatureSet::from_rows(rows);
}

void BM_LateInteraction(benchmark::State& state) {
    mmr::Rng rng(1);
    const auto dim = static_cast<std::size_t>(state.range(1));
    const auto q = random_set(rng, 40, dim);
    const auto d = random_set(rng, static_cast<std::size_t>(state.range(0)), dim);
    for (auto _ : state) benchmark::DoNotOptimize(mmr::late_interaction_score(q, d));
    state.SetItemsProcessed(state.iterations() * state.range(0) * 40);
}
BENCHMARK(BM_LateInteraction)->Args({32, 16})->Args({128, 16})->Args({128, 128})->Args({512, 128});

void BM_RankExact(benchmark::State& state) {
    mmr::Rng rng(2);
    mmr::Corpus corpus;
    for (int i = 0; i < state.range(0); ++i) corpus["doc" + std::to_string(i)] = random_set(rng, 60, 16);
    const auto q = random_set(rng, 40, 16);
    const auto threads = static_cast<unsigned>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(mmr::rank_exact(q, corpus, 10, threads));
}
BENCHMARK(BM_RankExact)->Args({200, 1})->Args({1000, 1})->Args({1000, 4})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
