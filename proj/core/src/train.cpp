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

#include "mmr/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "mmr/errors.hpp"
#include "mmr/parallel.hpp"
#include "mmr/rng.hpp"
#include "mmr/scoring.hpp"

namespace mmr {

std::string to_string(Optimizer opt) { return opt == Optimizer::kAdam ? "adam" : "sgd"; }

Optimizer parse_optimizer(const std::string& s) {
    if (s == "sgd") return Optimizer::kSgd;
    if (s == "adam") return Optimizer::kAdam;
    fail(ErrorKind::kConfig, "unknown optimizer '" + s + "' (expected sgd or adam)");
}

void TrainConfig::validate() const {
    if (batch_size < 2) {
        fail(ErrorKind::kConfig, "batch_size must be >= 2");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        fail(ErrorKind::kConfig, "learning_rate must be positive");
    }
    if (optimizer == Optimizer::kAdam &&
        !(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_eps > 0.0)) {
        fail(ErrorKind::kConfig, "invalid Adam hyperparameters");
    }
}

namespace {

void check_batch(const std::vector<FeatureSet>& queries, const std::vector<FeatureSet>& docs) {
    if (queries.size() != docs.size()) {
        fail(ErrorKind::kShape, "batch has " + std::to_string(queries.size()) + " queries and " +
                                    std::to_string(docs.size()) + " documents");
    }
    if (queries.size() < 2) {
        fail(ErrorKind::kConfig, "contrastive loss needs a batch of at least 2");
    }
}

}  // namespace

double contrastive_loss(const std::vector<FeatureSet>& queries, const std::vector<FeatureSet>& docs) {
    check_batch(queries, docs);
    const std::size_t b = queries.size();
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        std::vector<double> s(b);
        for (std::size_t j = 0; j < b; ++j) {
            s[j] = late_interaction_score(queries[i], docs[j]);
        }
        const double mx = *std::max_element(s.begin(), s.end());
        double z = 0.0;
        for (double v : s) {
            z += std::exp(v - mx);
        }
        total += mx + std::log(z) - s[i];
    }
    return total / static_cast<double>(b);
}

ContrastiveGrad contrastive_loss_grad(const std::vector<FeatureSet>& queries, const std::vector<FeatureSet>& docs,
                                      const std::vector<std::string>* groups) {
    check_batch(queries, docs);
    const std::size_t b = queries.size();
    if (groups != nullptr && groups->size() != b) {
        fail(ErrorKind::kShape, "group labels do not match the batch");
    }
    ContrastiveGrad out;
    out.d_queries.reserve(b);
    out.d_docs.reserve(b);
    for (std::size_t i = 0; i < b; ++i) {
        out.d_queries.push_back(RowMatrix::Zero(static_cast<Eigen::Index>(queries[i].size()),
                                                static_cast<Eigen::Index>(queries[i].dim())));
        out.d_docs.push_back(RowMatrix::Zero(static_cast<Eigen::Index>(docs[i].size()),
                                             static_cast<Eigen::Index>(docs[i].dim())));
    }
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        std::vector<double> s(b, 0.0);
        std::vector<char> active(b, 1);
        std::vector<std::vector<std::size_t>> argmax(b);
        for (std::size_t j = 0; j < b; ++j) {
            if (groups != nullptr && j != i && (*groups)[j] == (*groups)[i]) {
                active[j] = 0;
                continue;
            }
            argmax[j] = maxsim_argmax(queries[i], docs[j]);
            for (std::size_t a = 0; a < argmax[j].size(); ++a) {
                s[j] += queries[i].matrix().row(static_cast<Eigen::Index>(a)).dot(
                    docs[j].matrix().row(static_cast<Eigen::Index>(argmax[j][a])));
            }
        }
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < b; ++j) {
            if (active[j]) {
                mx = std::max(mx, s[j]);
            }
        }
        double z = 0.0;
        for (std::size_t j = 0; j < b; ++j) {
            if (active[j]) {
                z += std::exp(s[j] - mx);
            }
        }
        out.loss += (mx + std::log(z) - s[i]) * inv_b;
        for (std::size_t j = 0; j < b; ++j) {
            if (!active[j]) {
                continue;
            }
            const double g = (std::exp(s[j] - mx) / z - (i == j ? 1.0 : 0.0)) * inv_b;
            if (g == 0.0) {
                continue;
            }
            const auto& qm = queries[i].matrix();
            const auto& dm = docs[j].matrix();
            for (std::size_t a = 0; a < argmax[j].size(); ++a) {
                const auto ai = static_cast<Eigen::Index>(a);
                const auto bi = static_cast<Eigen::Index>(argmax[j][a]);
                out.d_queries[i].row(ai) += g * dm.row(bi);
                out.d_docs[j].row(bi) += g * qm.row(ai);
            }
        }
    }
    return out;
}

namespace {

struct EncodedBatch {
    std::vector<FeatureSet> queries;
    std::vector<FeatureSet> docs;
    std::vector<EncodeTrace> query_traces;
    std::vector<EncodeTrace> doc_traces;
    std::vector<std::string> groups;
};

EncodedBatch encode_batch(const EncoderParams& params, const std::vector<TrainExample>& batch,
                          const EmbeddingProvider& provider, const TrainConfig& config, bool traces) {
    const std::size_t b = batch.size();
    std::vector<std::optional<FeatureSet>> q(b);
    std::vector<std::optional<FeatureSet>> d(b);
    EncodedBatch out;
    out.query_traces.resize(traces ? b : 0);
    out.doc_traces.resize(traces ? b : 0);
    parallel_for(2 * b, config.threads, [&](std::size_t t) {
        const std::size_t i = t / 2;
        if (t % 2 == 0) {
            q[i] = encode_query(batch[i].query, params, provider, config.query_mode,
                                traces ? &out.query_traces[i] : nullptr);
        } else {
            if (batch[i].doc == nullptr) {
                fail(ErrorKind::kData, "training example without a document");
            }
            d[i] = encode_document(*batch[i].doc, params, provider, config.flags,
                                   traces ? &out.doc_traces[i] : nullptr);
        }
    });
    for (std::size_t i = 0; i < b; ++i) {
        out.queries.push_back(std::move(*q[i]));
        out.docs.push_back(std::move(*d[i]));
        out.groups.push_back(batch[i].doc->raw.doc_id);
    }
    return out;
}

}  // namespace

LossAndGrad loss_and_grad(const EncoderParams& params, const std::vector<TrainExample>& batch,
                          const EmbeddingProvider& provider, const TrainConfig& config) {
    auto enc = encode_batch(params, batch, provider, config, true);
    const auto cg = contrastive_loss_grad(enc.queries, enc.docs, &enc.groups);
    const std::size_t b = batch.size();
    // Per-encoding gradients, summed in a fixed order afterwards.
    std::vector<EncoderParams> partial(2 * b, EncoderParams::zeros(params.config));
    parallel_for(2 * b, config.threads, [&](std::size_t t) {
        const std::size_t i = t / 2;
        if (t % 2 == 0) {
            encoder_backward(enc.query_traces[i], params, cg.d_queries[i], partial[t]);
        } else {
            encoder_backward(enc.doc_traces[i], params, cg.d_docs[i], partial[t]);
        }
    });
    LossAndGrad out{cg.loss, EncoderParams::zeros(params.config)};
    for (const auto& p : partial) {
        out.grads.add_scaled(p, 1.0);
    }
    out.grads.check_finite("gradient");
    return out;
}

double batch_loss(const EncoderParams& params, const std::vector<TrainExample>& batch,
                  const EmbeddingProvider& provider, const TrainConfig& config) {
    const auto enc = encode_batch(params, batch, provider, config, false);
    return contrastive_loss_grad(enc.queries, enc.docs, &enc.groups).loss;
}

namespace {

std::vector<std::pair<double*, std::size_t>> tensors_of(EncoderParams& p) {
    std::vector<std::pair<double*, std::size_t>> out;
    p.for_each_tensor([&](std::string_view, double* data, std::size_t rows, std::size_t cols) {
        out.emplace_back(data, rows * cols);
    });
    return out;
}

class AdamState {
public:
    AdamState(const EncoderConfig& config, const TrainConfig& train)
        : m_(EncoderParams::zeros(config)), v_(EncoderParams::zeros(config)), cfg_(train) {}

    void step(EncoderParams& params, EncoderParams& grads) {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
        auto p = tensors_of(params);
        auto g = tensors_of(grads);
        auto m = tensors_of(m_);
        auto v = tensors_of(v_);
        for (std::size_t k = 0; k < p.size(); ++k) {
            for (std::size_t i = 0; i < p[k].second; ++i) {
                const double gi = g[k].first[i];
                double& mi = m[k].first[i];
                double& vi = v[k].first[i];
                mi = cfg_.adam_beta1 * mi + (1.0 - cfg_.adam_beta1) * gi;
                vi = cfg_.adam_beta2 * vi + (1.0 - cfg_.adam_beta2) * gi * gi;
                p[k].first[i] -= cfg_.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + cfg_.adam_eps);
            }
        }
    }

private:
    EncoderParams m_;
    EncoderParams v_;
    TrainConfig cfg_;
    std::size_t t_ = 0;
};

}  // namespace

TrainStats train(EncoderParams& params, const std::vector<QaSample>& samples, const AugmentedKb& kb,
                 const EmbeddingProvider& provider, const TrainConfig& config) {
    config.validate();
    params.check_finite("initial parameters");
    std::vector<const QaSample*> ordered;
    for (const auto& s : samples) {
        if (!kb.contains(s.gt_doc_id)) {
            fail(ErrorKind::kData, "sample " + s.sample_id + ": GT doc " + s.gt_doc_id + " is not in the KB");
        }
        ordered.push_back(&s);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const QaSample* a, const QaSample* b) { return a->sample_id < b->sample_id; });

    TrainStats stats;
    std::optional<AdamState> adam;
    if (config.optimizer == Optimizer::kAdam) {
        adam.emplace(params.config, config);
    }
    const Rng base = Rng(config.seed).fork("train-shuffle");
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<std::size_t> order(ordered.size());
        std::iota(order.begin(), order.end(), 0);
        Rng rng = base.fork(static_cast<std::uint64_t>(epoch));
        rng.shuffle(order);
        for (std::size_t start = 0; start + 2 <= order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<TrainExample> batch;
            for (std::size_t i = start; i < end; ++i) {
                const QaSample& s = *ordered[order[i]];
                batch.push_back({{s.question, s.query_image_key}, &kb.at(s.gt_doc_id)});
            }
            auto lg = loss_and_grad(params, batch, provider, config);
            if (!std::isfinite(lg.loss)) {
                fail(ErrorKind::kNumeric, "non-finite loss at step " + std::to_string(stats.steps));
            }
            stats.losses.push_back(lg.loss);
            stats.grad_norms.push_back(std::sqrt(lg.grads.squared_norm()));
            if (adam) {
                adam->step(params, lg.grads);
            } else {
                params.add_scaled(lg.grads, -config.learning_rate);
            }
            params.check_finite("parameters after update");
            ++stats.steps;
        }
    }
    stats.checksum = params.checksum();
    return stats;
}

}  // namespace mmr
