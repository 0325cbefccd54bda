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

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace mmr {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// dot(a, b) / (|a| |b|), clamped to [-1, 1]. Throws kShape on a dimension
/// mismatch and kDomain on a zero vector.
double cosine(std::span<const double> a, std::span<const double> b);

/// Throws kDomain for the zero vector.
Vec l2_normalize(std::span<const double> v);

/// Deterministic unit vector keyed by (domain, key, dim). Stands in for a
/// frozen backbone feature: the same key always maps to the same direction and
/// distinct keys map to nearly independent Gaussian directions.
Vec seeded_unit_vector(std::string_view key, std::size_t dim, std::string_view domain);

}  // namespace mmr
