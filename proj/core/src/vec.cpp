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

#include "mmr/vec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmr/errors.hpp"
#include "mmr/rng.hpp"

namespace mmr {

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        fail(ErrorKind::kShape, "dot: dimension mismatch " + std::to_string(a.size()) + " vs " +
                                        std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        fail(ErrorKind::kShape, "cosine: dimension mismatch " + std::to_string(a.size()) + " vs " +
                                        std::to_string(b.size()));
    }
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        fail(ErrorKind::kDomain, "cosine of a zero vector");
    }
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

Vec l2_normalize(std::span<const double> v) {
    const double n = l2_norm(v);
    if (n == 0.0 || !std::isfinite(n)) {
        fail(ErrorKind::kDomain, "cannot normalize a zero or non-finite vector");
    }
    Vec out(v.begin(), v.end());
    for (double& x : out) {
        x /= n;
    }
    return out;
}

Vec seeded_unit_vector(std::string_view key, std::size_t dim, std::string_view domain) {
    if (dim < 2) {
        fail(ErrorKind::kConfig, "seeded_unit_vector needs dim >= 2, got " + std::to_string(dim));
    }
    Rng rng(stable_hash(key, stable_hash(domain) ^ dim));
    Vec v(dim);
    for (double& x : v) {
        x = rng.normal();
    }
    return l2_normalize(v);
}

}  // namespace mmr
