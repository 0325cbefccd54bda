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
#include <string_view>

#include "mmr/feature_set.hpp"

namespace mmr {

/// Shapes of every encoder component.
struct EncoderConfig {
    /// Output embedding dimension shared by queries and documents.
    std::size_t dim = 16;
    /// Backbone text-token feature dimension.
    std::size_t text_dim = 64;
    /// Backbone image feature dimension (global and patch).
    std::size_t image_dim = 64;
    /// Patch features per image (a 3x3 grid by default).
    std::size_t num_patches = 9;
    std::size_t heads = 4;
    /// Width of the cross-attention block.
    std::size_t attn_dim = 64;
    std::size_t ffn_dim = 128;
    /// Multimodal tokens emitted per image.
    std::size_t mm_tokens = 4;

    /// Full-size shapes: 128-d embeddings and 32 multimodal tokens per image.
    static EncoderConfig full_scale();

    /// Throws kConfig on inconsistent or zero-sized shapes.
    void validate() const;

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// y = W2 gelu(W1 x + b1) + b2, weights stored out x in.
struct Mlp {
    Matrix w1;
    Vector b1;
    Matrix w2;
    Vector b2;

    std::size_t in_dim() const { return static_cast<std::size_t>(w1.cols()); }
    std::size_t out_dim() const { return static_cast<std::size_t>(w2.rows()); }
};

/// One transformer block in which image patches attend over text tokens:
/// x = in_proj p; h = x + output(MHA(query x, key t, value t)); y = h + FFN(h).
struct CrossAttentionWeights {
    Matrix in_proj;   // attn_dim x image_dim
    Matrix query;     // attn_dim x attn_dim
    Matrix key;       // attn_dim x text_dim
    Matrix value;     // attn_dim x text_dim
    Matrix output;    // attn_dim x attn_dim
    Matrix ffn_in;    // ffn_dim x attn_dim
    Vector ffn_in_bias;
    Matrix ffn_out;   // attn_dim x ffn_dim
    Vector ffn_out_bias;
};

/// Every trainable tensor of the query and document encoders.
struct EncoderParams {
    EncoderConfig config;
    Mlp text_proj;    // text_dim -> 2*dim -> dim
    Mlp global_proj;  // image_dim -> 2*dim -> dim
    CrossAttentionWeights xattn;
    Mlp mm_proj;      // num_patches*attn_dim -> 2*mm_tokens*dim -> mm_tokens*dim
    /// Added to the text tokens of the entity linked to an image.
    Vector ete;
    /// Key/value token used when an image-only query has no text at all.
    Vector null_text;

    /// Random initialization: weights ~ N(0, 1/fan_in), biases zero, ete zero.
    static EncoderParams init(const EncoderConfig& config, std::uint64_t seed);
    /// Same shapes, all zeros; used for gradient accumulators.
    static EncoderParams zeros(const EncoderConfig& config);

    /// Visits every tensor as (name, data, rows, cols). Values are in Eigen's
    /// column-major order; serialization goes through element accessors.
    template <class Fn>
    void for_each_tensor(Fn&& fn) {
        visit_impl(*this, fn);
    }
    template <class Fn>
    void for_each_tensor(Fn&& fn) const {
        visit_impl(*this, fn);
    }

    std::size_t num_values() const;
    /// this += scale * other (shapes must match).
    void add_scaled(const EncoderParams& other, double scale);
    void scale(double factor);
    double squared_norm() const;
    /// Stable hash of all parameter bytes.
    std::uint64_t checksum() const;
    /// Throws kNumeric naming the first tensor that holds a NaN or Inf.
    void check_finite(std::string_view what) const;

    friend bool operator==(const EncoderParams& a, const EncoderParams& b);

private:
    template <class Self, class Fn>
    static void visit_impl(Self& p, Fn& fn) {
        auto m = [&](const char* name, auto& t) {
            fn(std::string_view(name), t.data(), static_cast<std::size_t>(t.rows()),
               static_cast<std::size_t>(t.cols()));
        };
        m("text_proj.w1", p.text_proj.w1);
        m("text_proj.b1", p.text_proj.b1);
        m("text_proj.w2", p.text_proj.w2);
        m("text_proj.b2", p.text_proj.b2);
        m("global_proj.w1", p.global_proj.w1);
        m("global_proj.b1", p.global_proj.b1);
        m("global_proj.w2", p.global_proj.w2);
        m("global_proj.b2", p.global_proj.b2);
        m("xattn.in_proj", p.xattn.in_proj);
        m("xattn.query", p.xattn.query);
        m("xattn.key", p.xattn.key);
        m("xattn.value", p.xattn.value);
        m("xattn.output", p.xattn.output);
        m("xattn.ffn_in", p.xattn.ffn_in);
        m("xattn.ffn_in_bias", p.xattn.ffn_in_bias);
        m("xattn.ffn_out", p.xattn.ffn_out);
        m("xattn.ffn_out_bias", p.xattn.ffn_out_bias);
        m("mm_proj.w1", p.mm_proj.w1);
        m("mm_proj.b1", p.mm_proj.b1);
        m("mm_proj.w2", p.mm_proj.w2);
        m("mm_proj.b2", p.mm_proj.b2);
        m("ete", p.ete);
        m("null_text", p.null_text);
    }
};

}  // namespace mmr
