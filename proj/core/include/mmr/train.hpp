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
#include <cstdint>
#include <string>
#include <vector>

#include "mmr/document.hpp"
#include "mmr/embedding.hpp"
#include "mmr/encoder.hpp"
#include "mmr/feature_set.hpp"
#include "mmr/params.hpp"

namespace mmr {

enum class Optimizer { kSgd, kAdam };
std::string to_string(Optimizer opt);
/// "sgd" or "adam"; anything else is a kConfig error.
Optimizer parse_optimizer(const std::string& s);

struct TrainConfig {
    std::size_t batch_size = 8;
    double learning_rate = 1e-3;
    std::size_t epochs = 1;
    std::uint64_t seed = 0;
    DocFlags flags;
    QueryMode query_mode = QueryMode::kImageText;
    Optimizer optimizer = Optimizer::kSgd;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    unsigned threads = 1;

    /// Throws kConfig unless batch_size >= 2 and learning_rate > 0.
    void validate() const;
};

struct TrainStats {
    std::vector<double> losses;
    std::vector<double> grad_norms;
    std::size_t steps = 0;
    std::uint64_t checksum = 0;
};

/// Mean over i of -log softmax_j(s(Q_i, D_j))[i]. Throws kConfig for fewer
/// than two pairs and kShape when the batches differ in size.
double contrastive_loss(const std::vector<FeatureSet>& queries, const std::vector<FeatureSet>& docs);

struct ContrastiveGrad {
    double loss = 0.0;
    /// Row-aligned with each feature set's tokens.
    std::vector<RowMatrix> d_queries;
    std::vector<RowMatrix> d_docs;
};

/// Loss and its gradient w.r.t. every token. The max in each MaxSim passes
/// gradient to one document token, the lowest index on ties. When `groups` is
/// given, D_j with groups[j] == groups[i] (j != i) is left out of row i's
/// softmax, so duplicate positives are not treated as negatives.
ContrastiveGrad contrastive_loss_grad(const std::vector<FeatureSet>& queries, const std::vector<FeatureSet>& docs,
                                      const std::vector<std::string>* groups = nullptr);

struct TrainExample {
    QueryInput query;
    const AugmentedDocument* doc = nullptr;
};

struct LossAndGrad {
    double loss = 0.0;
    EncoderParams grads;
};

/// Encodes the batch, evaluates the (group-masked) contrastive loss and
/// back-propagates into every trainable tensor. Throws kNumeric naming the
/// tensor if a gradient is not finite.
LossAndGrad loss_and_grad(const EncoderParams& params, const std::vector<TrainExample>& batch,
                          const EmbeddingProvider& provider, const TrainConfig& config);
double batch_loss(const EncoderParams& params, const std::vector<TrainExample>& batch,
                  const EmbeddingProvider& provider, const TrainConfig& config);

/// In-batch contrastive training. Samples are put in sample_id order before
/// each epoch's seeded shuffle; a trailing batch smaller than two is skipped.
/// Throws kData when a GT doc is missing from `kb`.
TrainStats train(EncoderParams& params, const std::vector<QaSample>& samples, const AugmentedKb& kb,
                 const EmbeddingProvider& provider, const TrainConfig& config);

}  // namespace mmr
