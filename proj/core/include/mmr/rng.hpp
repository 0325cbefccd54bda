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

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace mmr {

/// FNV-1a over the bytes, finished with a SplitMix64 avalanche. Stable across
/// platforms and compilers, unlike std::hash.
std::uint64_t stable_hash(std::string_view bytes, std::uint64_t salt = 0);

std::uint64_t mix64(std::uint64_t x);

/// Counter-based generator: the i-th draw is mix64(key + i * golden). Streams
/// are split by hashing a label or an index into a new key, so a stream's
/// contents never depend on how many values other streams consumed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(mix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double uniform();
    /// Standard normal via Box-Muller; consumes two draws.
    double normal();
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);
    /// Poisson variate (Knuth's method; fine for small means).
    std::uint64_t poisson(double mean);

    Rng fork(std::string_view label) const;
    Rng fork(std::uint64_t index) const;

    template <class T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[below(i)]);
        }
    }

    std::uint64_t key() const { return key_; }

private:
    struct FromKey {};
    Rng(FromKey, std::uint64_t key) : key_(key) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace mmr
