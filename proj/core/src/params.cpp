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

#include "mmr/params.hpp"

#include <cmath>
#include <cstring>

#include "mmr/errors.hpp"
#include "mmr/rng.hpp"

namespace mmr {

EncoderConfig EncoderConfig::full_scale() {
    EncoderConfig c;
    c.dim = 128;
    c.mm_tokens = 32;
    return c;
}

void EncoderConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v == 0) {
            fail(ErrorKind::kConfig, std::string("encoder.") + name + " must be positive");
        }
    };
    positive(dim, "dim");
    positive(text_dim, "text_dim");
    positive(image_dim, "image_dim");
    positive(num_patches, "patches");
    positive(heads, "heads");
    positive(attn_dim, "attn_dim");
    positive(ffn_dim, "ffn_dim");
    positive(mm_tokens, "mm_tokens");
    if (dim < 2 || text_dim < 2 || image_dim < 2) {
        fail(ErrorKind::kConfig, "embedding dimensions must be at least 2");
    }
    if (attn_dim % heads != 0) {
        fail(ErrorKind::kConfig, "encoder.attn_dim must be divisible by encoder.heads");
    }
}

namespace {

Matrix random_matrix(Rng rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = rng.normal() * scale;
        }
    }
    return m;
}

Mlp make_mlp(const Rng& rng, std::size_t in, std::size_t hidden, std::size_t out) {
    Mlp m;
    m.w1 = random_matrix(rng.fork("w1"), hidden, in);
    m.b1 = Vector::Zero(static_cast<Eigen::Index>(hidden));
    m.w2 = random_matrix(rng.fork("w2"), out, hidden);
    m.b2 = Vector::Zero(static_cast<Eigen::Index>(out));
    return m;
}

}  // namespace

EncoderParams EncoderParams::init(const EncoderConfig& config, std::uint64_t seed) {
    config.validate();
    const Rng root = Rng(seed).fork("encoder-params");
    EncoderParams p;
    p.config = config;
    p.text_proj = make_mlp(root.fork("text_proj"), config.text_dim, 2 * config.dim, config.dim);
    p.global_proj = make_mlp(root.fork("global_proj"), config.image_dim, 2 * config.dim, config.dim);
    const Rng xr = root.fork("xattn");
    auto& x = p.xattn;
    x.in_proj = random_matrix(xr.fork("in_proj"), config.attn_dim, config.image_dim);
    x.query = random_matrix(xr.fork("query"), config.attn_dim, config.attn_dim);
    x.key = random_matrix(xr.fork("key"), config.attn_dim, config.text_dim);
    x.value = random_matrix(xr.fork("value"), config.attn_dim, config.text_dim);
    x.output = random_matrix(xr.fork("output"), config.attn_dim, config.attn_dim);
    x.ffn_in = random_matrix(xr.fork("ffn_in"), config.ffn_dim, config.attn_dim);
    x.ffn_in_bias = Vector::Zero(static_cast<Eigen::Index>(config.ffn_dim));
    x.ffn_out = random_matrix(xr.fork("ffn_out"), config.attn_dim, config.ffn_dim);
    x.ffn_out_bias = Vector::Zero(static_cast<Eigen::Index>(config.attn_dim));
    const std::size_t mm_out = config.mm_tokens * config.dim;
    p.mm_proj = make_mlp(root.fork("mm_proj"), config.num_patches * config.attn_dim, 2 * mm_out, mm_out);
    p.ete = Vector::Zero(static_cast<Eigen::Index>(config.text_dim));
    Rng nr = root.fork("null_text");
    p.null_text = Vector(static_cast<Eigen::Index>(config.text_dim));
    for (Eigen::Index i = 0; i < p.null_text.size(); ++i) {
        p.null_text(i) = nr.normal();
    }
    p.null_text.normalize();
    return p;
}

EncoderParams EncoderParams::zeros(const EncoderConfig& config) {
    EncoderParams p = init(config, 0);
    p.for_each_tensor([](std::string_view, double* data, std::size_t rows, std::size_t cols) {
        std::fill(data, data + rows * cols, 0.0);
    });
    return p;
}

std::size_t EncoderParams::num_values() const {
    std::size_t n = 0;
    for_each_tensor([&](std::string_view, const double*, std::size_t rows, std::size_t cols) {
        n += rows * cols;
    });
    return n;
}

namespace {
// Walks two parameter sets in lockstep.
template <class Fn>
void zip_tensors(EncoderParams& a, const EncoderParams& b, Fn&& fn) {
    std::vector<std::pair<const double*, std::size_t>> other;
    b.for_each_tensor([&](std::string_view, const double* data, std::size_t rows, std::size_t cols) {
        other.emplace_back(data, rows * cols);
    });
    std::size_t i = 0;
    a.for_each_tensor([&](std::string_view name, double* data, std::size_t rows, std::size_t cols) {
        if (other[i].second != rows * cols) {
            fail(ErrorKind::kShape, "parameter shape mismatch at " + std::string(name));
        }
        fn(data, other[i].first, rows * cols);
        ++i;
    });
}
}  // namespace

void EncoderParams::add_scaled(const EncoderParams& other, double scale) {
    zip_tensors(*this, other, [&](double* dst, const double* src, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            dst[i] += scale * src[i];
        }
    });
}

void EncoderParams::scale(double factor) {
    for_each_tensor([&](std::string_view, double* data, std::size_t rows, std::size_t cols) {
        for (std::size_t i = 0; i < rows * cols; ++i) {
            data[i] *= factor;
        }
    });
}

double EncoderParams::squared_norm() const {
    double s = 0.0;
    for_each_tensor([&](std::string_view, const double* data, std::size_t rows, std::size_t cols) {
        for (std::size_t i = 0; i < rows * cols; ++i) {
            s += data[i] * data[i];
        }
    });
    return s;
}

std::uint64_t EncoderParams::checksum() const {
    std::uint64_t h = 0;
    for_each_tensor([&](std::string_view name, const double* data, std::size_t rows, std::size_t cols) {
        h = stable_hash(name, h);
        h = stable_hash(std::string_view(reinterpret_cast<const char*>(data), rows * cols * sizeof(double)), h);
    });
    return h;
}

void EncoderParams::check_finite(std::string_view what) const {
    for_each_tensor([&](std::string_view name, const double* data, std::size_t rows, std::size_t cols) {
        for (std::size_t i = 0; i < rows * cols; ++i) {
            if (!std::isfinite(data[i])) {
                fail(ErrorKind::kNumeric, std::string(what) + ": non-finite value in " + std::string(name));
            }
        }
    });
}

bool operator==(const EncoderParams& a, const EncoderParams& b) {
    if (!(a.config == b.config)) {
        return false;
    }
    std::vector<std::pair<const double*, std::size_t>> av;
    std::vector<std::pair<const double*, std::size_t>> bv;
    a.for_each_tensor([&](std::string_view, const double* d, std::size_t r, std::size_t c) { av.emplace_back(d, r * c); });
    b.for_each_tensor([&](std::string_view, const double* d, std::size_t r, std::size_t c) { bv.emplace_back(d, r * c); });
    for (std::size_t i = 0; i < av.size(); ++i) {
        if (av[i].second != bv[i].second ||
            std::memcmp(av[i].first, bv[i].first, av[i].second * sizeof(double)) != 0) {
            return false;
        }
    }
    return true;
}

}  // namespace mmr
