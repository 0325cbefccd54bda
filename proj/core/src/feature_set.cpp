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

#include "mmr/feature_set.hpp"

#include <cmath>
#include <cstring>

#include "mmr/errors.hpp"

namespace mmr {

std::string TokenTag::to_string() const {
    switch (kind) {
        case Kind::kText:
            return "text:" + std::to_string(index);
        case Kind::kGlobalImage:
            return "global:" + std::to_string(image);
        case Kind::kMultimodal:
            return "multimodal:" + std::to_string(image) + "," + std::to_string(index);
    }
    return "?";
}

FeatureSet::FeatureSet(RowMatrix tokens, std::vector<TokenTag> tags)
        : tokens_(std::move(tokens)), tags_(std::move(tags)) {
    if (tokens_.rows() == 0 || tokens_.cols() == 0) {
        fail(ErrorKind::kInput, "feature set must be non-empty");
    }
    if (tags_.size() != static_cast<std::size_t>(tokens_.rows())) {
        fail(ErrorKind::kShape, "feature set has " + std::to_string(tokens_.rows()) +
                                        " tokens but " + std::to_string(tags_.size()) + " tags");
    }
    for (Eigen::Index i = 0; i < tokens_.rows(); ++i) {
        const double n = tokens_.row(i).norm();
        if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitTolerance) {
            fail(ErrorKind::kDomain,
                 "feature set token " + std::to_string(i) + " is not unit-norm (" + std::to_string(n) + ")");
        }
    }
}

FeatureSet FeatureSet::normalized(RowMatrix tokens, std::vector<TokenTag> tags) {
    for (Eigen::Index i = 0; i < tokens.rows(); ++i) {
        const double n = tokens.row(i).norm();
        if (n == 0.0 || !std::isfinite(n)) {
            fail(ErrorKind::kDomain, "cannot normalize token " + std::to_string(i));
        }
        tokens.row(i) /= n;
    }
    return FeatureSet(std::move(tokens), std::move(tags));
}

FeatureSet FeatureSet::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) {
        fail(ErrorKind::kInput, "feature set must be non-empty");
    }
    RowMatrix m(rows.size(), rows.front().size());
    std::vector<TokenTag> tags;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) {
            fail(ErrorKind::kShape, "feature set rows differ in dimension");
        }
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
        tags.push_back(TokenTag::text(static_cast<std::int32_t>(i)));
    }
    return FeatureSet(std::move(m), std::move(tags));
}

bool operator==(const FeatureSet& a, const FeatureSet& b) {
    if (a.tokens_.rows() != b.tokens_.rows() || a.tokens_.cols() != b.tokens_.cols() ||
        a.tags_ != b.tags_) {
        return false;
    }
    return std::memcmp(a.tokens_.data(), b.tokens_.data(),
                       sizeof(double) * static_cast<std::size_t>(a.tokens_.size())) == 0;
}

}  // namespace mmr
