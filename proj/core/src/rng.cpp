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

#include "mmr/rng.hpp"

#include <cmath>
#include <numbers>

namespace mmr {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stable_hash(std::string_view bytes, std::uint64_t salt) {
    std::uint64_t h = kFnvOffset ^ mix64(salt);
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return mix64(h ^ bytes.size());
}

std::uint64_t Rng::next_u64() {
    return mix64(key_ + (counter_++) * kGolden);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 < 1e-300) {
        u1 = 1e-300;
    }
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection keeps the draw unbiased for any n.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) {
        x = next_u64();
    }
    return x % n;
}

std::uint64_t Rng::poisson(double mean) {
    if (mean <= 0.0) {
        return 0;
    }
    const double threshold = std::exp(-mean);
    std::uint64_t k = 0;
    double p = uniform();
    while (p > threshold) {
        ++k;
        p *= uniform();
    }
    return k;
}

Rng Rng::fork(std::string_view label) const {
    return Rng(FromKey{}, mix64(key_ ^ stable_hash(label, 0x5bd1e995ULL)));
}

Rng Rng::fork(std::uint64_t index) const {
    return Rng(FromKey{}, mix64(key_ ^ mix64(index * kGolden + 0x2545f4914f6cdd1dULL)));
}

}  // namespace mmr
