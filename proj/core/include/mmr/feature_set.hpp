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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mmr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Where a token of a feature set came from.
struct TokenTag {
    enum class Kind : std::uint8_t { kText, kGlobalImage, kMultimodal };

    Kind kind = Kind::kText;
    /// Image slot r (0 = main image) for image-derived tokens, -1 for text.
    std::int32_t image = -1;
    /// Position within its block (text token index or multimodal token index).
    std::int32_t index = 0;

    static TokenTag text(std::int32_t i) { return {Kind::kText, -1, i}; }
    static TokenTag global(std::int32_t r) { return {Kind::kGlobalImage, r, 0}; }
    static TokenTag multimodal(std::int32_t r, std::int32_t i) { return {Kind::kMultimodal, r, i}; }

    std::string to_string() const;
    friend bool operator==(const TokenTag&, const TokenTag&) = default;
};

/// A non-empty set of unit-norm token vectors of one dimension: the
/// representation of one query or one document for late-interaction scoring.
class FeatureSet {
public:
    static constexpr double kUnitTolerance = 1e-6;

    FeatureSet() = default;

    /// Validates shape and unit norms; throws kInput when empty, kShape on a
    /// tag count mismatch and kDomain when a row is not unit-norm.
    FeatureSet(RowMatrix tokens, std::vector<TokenTag> tags);

    /// Same, but L2-normalizes each row first.
    static FeatureSet normalized(RowMatrix tokens, std::vector<TokenTag> tags);

    /// Untagged convenience constructor (all tokens tagged as text).
    static FeatureSet from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t size() const { return static_cast<std::size_t>(tokens_.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(tokens_.cols()); }
    bool empty() const { return tokens_.rows() == 0; }

    std::span<const double> token(std::size_t i) const {
        return {tokens_.data() + i * dim(), dim()};
    }
    const RowMatrix& matrix() const { return tokens_; }
    const std::vector<TokenTag>& tags() const { return tags_; }

    /// Bit-exact equality of values and tags.
    friend bool operator==(const FeatureSet& a, const FeatureSet& b);

private:
    RowMatrix tokens_;
    std::vector<TokenTag> tags_;
};

}  // namespace mmr
