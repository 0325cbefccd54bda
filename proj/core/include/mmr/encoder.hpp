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

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mmr/document.hpp"
#include "mmr/embedding.hpp"
#include "mmr/feature_set.hpp"
#include "mmr/params.hpp"

namespace mmr {

enum class QueryMode { kImageText, kImageOnly };

std::string to_string(QueryMode mode);
/// Accepts "image_text" and "image_only"; anything else is a kConfig error.
QueryMode parse_query_mode(const std::string& s);

/// Document-side ablation switches: related-entity images (MI), multimodal
/// features for related images (MMF) and the entity token embedding (ETE).
struct DocFlags {
    bool multi_image = true;
    bool multimodal_fusion = true;
    bool entity_embedding = true;

    static DocFlags none() { return {false, false, false}; }
    static DocFlags all() { return {true, true, true}; }

    /// "MI+MMF+ETE", "MI", ... or "none".
    std::string label() const;
    /// Parses a label or a comma/plus separated list such as "MI,MMF".
    static DocFlags parse(const std::string& s);

    friend bool operator==(const DocFlags&, const DocFlags&) = default;
};

struct QueryInput {
    std::string text;
    std::string image_key;
};

// ---------------------------------------------------------------------------
// Building blocks. Exposed for tests and for the gradient code in train.

struct MlpCache {
    RowMatrix input;
    RowMatrix pre;
    RowMatrix hidden;
};

double gelu(double x);
double gelu_grad(double x);

RowMatrix mlp_forward(const Mlp& mlp, const RowMatrix& x, MlpCache* cache = nullptr);
/// Accumulates weight gradients into `grad`; returns d input when need_dx.
RowMatrix mlp_backward(const Mlp& mlp, const MlpCache& cache, const RowMatrix& dy, Mlp& grad, bool need_dx);

struct CrossAttentionCache {
    RowMatrix patches;
    RowMatrix text;
    RowMatrix x;
    RowMatrix q;
    RowMatrix k;
    RowMatrix v;
    std::vector<RowMatrix> attention;
    RowMatrix context;
    RowMatrix h1;
    RowMatrix ffn_pre;
    RowMatrix ffn_hidden;
};

/// Patches (N_p x image_dim) attend over text (N_t x text_dim); returns
/// N_p x attn_dim contextualized patch features in patch order. Throws kShape
/// on mismatched inputs and kNumeric on non-finite weights.
RowMatrix cross_attend(const RowMatrix& patches, const RowMatrix& text, const CrossAttentionWeights& weights,
                       std::size_t heads, CrossAttentionCache* cache = nullptr);

/// Accumulates block weight gradients; writes d text into *dtext when given.
void cross_attend_backward(const CrossAttentionWeights& weights, std::size_t heads, const CrossAttentionCache& cache,
                           const RowMatrix& dout, CrossAttentionWeights& grad, RowMatrix* dtext);

/// Copy of `text` with theta added to the embeddings at `span` (a set of
/// token indices). Throws kSpan for an index >= N_t and kShape when theta has
/// the wrong dimension.
TextFeatures apply_ete(const TextFeatures& text, std::span<const std::size_t> span, const Vector& theta);

// ---------------------------------------------------------------------------
// Encoders.

/// Forward record of one encoding, consumed by encoder_backward.
struct EncodeTrace {
    struct Projected {
        MlpCache mlp;
        Vector norms;
        RowMatrix out;
    };
    struct Text {
        Projected proj;
    };
    struct Global {
        Projected proj;
    };
    struct Multimodal {
        CrossAttentionCache xattn;
        Projected proj;
        std::vector<std::size_t> ete_span;
        bool null_text = false;
        bool apply_ete = false;
    };
    using Block = std::variant<Text, Global, Multimodal>;

    std::vector<Block> blocks;
};

/// Query feature set {g} + T + M (image-text mode) or {g} + M (image-only
/// mode; text still feeds the cross-attention keys and values, or the learned
/// null token when there is no text). Throws kInput for empty text in
/// image-text mode.
FeatureSet encode_query(const QueryInput& query, const EncoderParams& params, const EmbeddingProvider& provider,
                        QueryMode mode = QueryMode::kImageText, EncodeTrace* trace = nullptr);

/// Document feature set T + union over images r of ({g_r} + M_r). Without MI
/// only the main image is used; without MMF related images contribute just
/// their global token; with ETE each image's multimodal features are computed
/// from text whose linked-entity tokens are shifted by theta. Throws
/// kDocument when the main image key is missing.
FeatureSet encode_document(const AugmentedDocument& doc, const EncoderParams& params,
                           const EmbeddingProvider& provider, DocFlags flags, EncodeTrace* trace = nullptr);

/// Expected |D| for a document under the given flags.
std::size_t document_set_size(std::size_t num_text_tokens, std::size_t num_related, std::size_t mm_tokens,
                              DocFlags flags);

/// Back-propagates d loss / d output tokens (rows in output order) into
/// parameter gradients.
void encoder_backward(const EncodeTrace& trace, const EncoderParams& params, const RowMatrix& d_tokens,
                      EncoderParams& grads);

}  // namespace mmr
