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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mmr/embedding.hpp"
#include "mmr/encoder.hpp"
#include "mmr/scoring.hpp"
#include "mmr/train.hpp"
#include "mmr_test/fixtures.hpp"

namespace mmr::testing {

// A batch of distinct documents, each queried through one of its related
// images, so every document-side path carries gradient.
struct GradBatch {
    std::vector<AugmentedDocument> docs;
    std::vector<TrainExample> examples;
};

inline GradBatch make_grad_batch(Rng& rng, std::size_t size, bool empty_query_text = false) {
    GradBatch b;
    for (std::size_t i = 0; i < size; ++i) {
        const std::size_t nt = 3 + rng.below(3);
        b.docs.push_back(random_document(rng, nt, 1 + rng.below(2), "gdoc" + std::to_string(i)));
    }
    for (const auto& d : b.docs) {
        QueryInput q;
        q.image_key = d.related[0].image_key;
        if (!empty_query_text) {
            q.text = pseudo_word(rng) + " " + pseudo_word(rng) + " " + d.text_tokens.back();
        }
        b.examples.push_back({q, &d});
    }
    return b;
}

// Which document token wins every MaxSim in the batch. Finite differences are
// only meaningful when this does not change across the probe.
inline std::vector<std::size_t> argmax_signature(const EncoderParams& p, const std::vector<TrainExample>& batch,
                                                 const EmbeddingProvider& provider, const TrainConfig& config) {
    std::vector<FeatureSet> qs, ds;
    for (const auto& ex : batch) {
        qs.push_back(encode_query(ex.query, p, provider, config.query_mode));
        ds.push_back(encode_document(*ex.doc, p, provider, config.flags));
    }
    std::vector<std::size_t> sig;
    for (const auto& q : qs)
        for (const auto& d : ds) {
            const auto a = maxsim_argmax(q, d);
            sig.insert(sig.end(), a.begin(), a.end());
        }
    return sig;
}

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    std::size_t worst_tensor_pos = 0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    std::size_t checked = 0;
    std::size_t skipped_kinks = 0;
    std::size_t nonzero = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor); the floor keeps entries whose
// true gradient is essentially zero from dividing noise by noise.
inline double relative_error(double analytic, double numeric, double floor) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline constexpr double kGradFloor = 1e-6;

// Central differences over every value of every tensor.
inline GradCheckResult grad_check(const EncoderParams& params, const std::vector<TrainExample>& batch,
                                  const EmbeddingProvider& provider, const TrainConfig& config, double eps = 1e-4) {
    const LossAndGrad lg = loss_and_grad(params, batch, provider, config);
    std::vector<std::pair<std::string, std::vector<double>>> analytic;
    lg.grads.for_each_tensor([&](std::string_view name, const double* data, std::size_t rows, std::size_t cols) {
        analytic.emplace_back(std::string(name), std::vector<double>(data, data + rows * cols));
    });
    const auto base_sig = argmax_signature(params, batch, provider, config);

    GradCheckResult out;
    EncoderParams probe = params;
    std::size_t t = 0;
    std::vector<std::pair<double*, std::size_t>> tensors;
    probe.for_each_tensor([&](std::string_view, double* data, std::size_t rows, std::size_t cols) {
        tensors.emplace_back(data, rows * cols);
    });
    for (auto [data, n] : tensors) {
        for (std::size_t i = 0; i < n; ++i) {
            const double saved = data[i];
            data[i] = saved + eps;
            const double up = batch_loss(probe, batch, provider, config);
            const bool kink_up = argmax_signature(probe, batch, provider, config) != base_sig;
            data[i] = saved - eps;
            const double down = batch_loss(probe, batch, provider, config);
            const bool kink_down = argmax_signature(probe, batch, provider, config) != base_sig;
            data[i] = saved;
            if (kink_up || kink_down) {
                ++out.skipped_kinks;
                continue;
            }
            const double numeric = (up - down) / (2 * eps);
            const double a = analytic[t].second[i];
            const double err = relative_error(a, numeric, kGradFloor);
            ++out.checked;
            if (a != 0.0) ++out.nonzero;
            if (err > out.max_rel_error) {
                out.max_rel_error = err;
                out.worst_tensor = analytic[t].first;
                out.worst_tensor_pos = t;
                out.worst_index = i;
                out.worst_analytic = a;
            }
        }
        ++t;
    }
    return out;
}

// Central difference for one value, addressed as in GradCheckResult.
inline double numeric_grad(const EncoderParams& params, const std::vector<TrainExample>& batch,
                           const EmbeddingProvider& provider, const TrainConfig& config, std::size_t tensor,
                           std::size_t index, double eps) {
    EncoderParams probe = params;
    double* value = nullptr;
    std::size_t t = 0;
    probe.for_each_tensor([&](std::string_view, double* data, std::size_t, std::size_t) {
        if (t++ == tensor) value = data + index;
    });
    const double saved = *value;
    *value = saved + eps;
    const double up = batch_loss(probe, batch, provider, config);
    *value = saved - eps;
    const double down = batch_loss(probe, batch, provider, config);
    return (up - down) / (2 * eps);
}

}  // namespace mmr::testing
