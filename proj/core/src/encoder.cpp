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

#include "mmr/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "mmr/errors.hpp"
#include "mmr/text.hpp"

namespace mmr {

std::string to_string(QueryMode mode) {
    return mode == QueryMode::kImageOnly ? "image_only" : "image_text";
}

QueryMode parse_query_mode(const std::string& s) {
    if (s == "image_text") {
        return QueryMode::kImageText;
    }
    if (s == "image_only") {
        return QueryMode::kImageOnly;
    }
    fail(ErrorKind::kConfig, "unknown query mode '" + s + "' (expected image_text or image_only)");
}

std::string DocFlags::label() const {
    std::vector<std::string> parts;
    if (multi_image) parts.emplace_back("MI");
    if (multimodal_fusion) parts.emplace_back("MMF");
    if (entity_embedding) parts.emplace_back("ETE");
    if (parts.empty()) {
        return "none";
    }
    std::string out = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) {
        out += "+" + parts[i];
    }
    return out;
}

DocFlags DocFlags::parse(const std::string& s) {
    DocFlags f = none();
    if (s == "none" || s.empty()) {
        return f;
    }
    if (s == "all") {
        return all();
    }
    std::string item;
    auto flush = [&] {
        if (item.empty()) {
            return;
        }
        if (item == "MI" || item == "mi") {
            f.multi_image = true;
        } else if (item == "MMF" || item == "mmf") {
            f.multimodal_fusion = true;
        } else if (item == "ETE" || item == "ete") {
            f.entity_embedding = true;
        } else {
            fail(ErrorKind::kConfig, "unknown document flag '" + item + "'");
        }
        item.clear();
    };
    for (char c : s) {
        if (c == ',' || c == '+' || c == ' ') {
            flush();
        } else {
            item.push_back(c);
        }
    }
    flush();
    return f;
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
}

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

RowMatrix mlp_forward(const Mlp& mlp, const RowMatrix& x, MlpCache* cache) {
    if (static_cast<std::size_t>(x.cols()) != mlp.in_dim()) {
        fail(ErrorKind::kShape, "mlp input has " + std::to_string(x.cols()) + " columns, expected " +
                                        std::to_string(mlp.in_dim()));
    }
    RowMatrix pre = x * mlp.w1.transpose();
    pre.rowwise() += mlp.b1.transpose();
    RowMatrix hidden = pre.unaryExpr([](double v) { return gelu(v); });
    RowMatrix y = hidden * mlp.w2.transpose();
    y.rowwise() += mlp.b2.transpose();
    if (cache != nullptr) {
        cache->input = x;
        cache->pre = std::move(pre);
        cache->hidden = std::move(hidden);
    }
    return y;
}

RowMatrix mlp_backward(const Mlp& mlp, const MlpCache& cache, const RowMatrix& dy, Mlp& grad, bool need_dx) {
    grad.w2.noalias() += dy.transpose() * cache.hidden;
    grad.b2 += dy.colwise().sum().transpose();
    RowMatrix dpre = (dy * mlp.w2).cwiseProduct(cache.pre.unaryExpr([](double v) { return gelu_grad(v); }));
    grad.w1.noalias() += dpre.transpose() * cache.input;
    grad.b1 += dpre.colwise().sum().transpose();
    if (!need_dx) {
        return {};
    }
    return dpre * mlp.w1;
}

namespace {

void check_finite(const Matrix& m, const char* name) {
    if (!m.allFinite()) {
        fail(ErrorKind::kNumeric, std::string("non-finite weights in ") + name);
    }
}

void check_weights(const CrossAttentionWeights& w) {
    check_finite(w.in_proj, "xattn.in_proj");
    check_finite(w.query, "xattn.query");
    check_finite(w.key, "xattn.key");
    check_finite(w.value, "xattn.value");
    check_finite(w.output, "xattn.output");
    check_finite(w.ffn_in, "xattn.ffn_in");
    check_finite(w.ffn_in_bias, "xattn.ffn_in_bias");
    check_finite(w.ffn_out, "xattn.ffn_out");
    check_finite(w.ffn_out_bias, "xattn.ffn_out_bias");
}

RowMatrix cross_attend_impl(const RowMatrix& patches, const RowMatrix& text, const CrossAttentionWeights& w,
                            std::size_t heads, CrossAttentionCache* cache) {
    const Eigen::Index width = w.query.rows();
    const Eigen::Index head_dim = width / static_cast<Eigen::Index>(heads);
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    RowMatrix x = patches * w.in_proj.transpose();
    RowMatrix q = x * w.query.transpose();
    RowMatrix k = text * w.key.transpose();
    RowMatrix v = text * w.value.transpose();
    RowMatrix context(x.rows(), width);
    std::vector<RowMatrix> attention;
    attention.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        const Eigen::Index c0 = static_cast<Eigen::Index>(h) * head_dim;
        RowMatrix scores = (q.middleCols(c0, head_dim) * k.middleCols(c0, head_dim).transpose()) * inv_scale;
        for (Eigen::Index r = 0; r < scores.rows(); ++r) {
            const double mx = scores.row(r).maxCoeff();
            scores.row(r) = (scores.row(r).array() - mx).exp().matrix();
            scores.row(r) /= scores.row(r).sum();
        }
        context.middleCols(c0, head_dim).noalias() = scores * v.middleCols(c0, head_dim);
        attention.push_back(std::move(scores));
    }
    RowMatrix h1 = x + context * w.output.transpose();
    RowMatrix ffn_pre = h1 * w.ffn_in.transpose();
    ffn_pre.rowwise() += w.ffn_in_bias.transpose();
    RowMatrix ffn_hidden = ffn_pre.unaryExpr([](double val) { return gelu(val); });
    RowMatrix out = ffn_hidden * w.ffn_out.transpose();
    out.rowwise() += w.ffn_out_bias.transpose();
    out += h1;
    if (cache != nullptr) {
        cache->patches = patches;
        cache->text = text;
        cache->x = std::move(x);
        cache->q = std::move(q);
        cache->k = std::move(k);
        cache->v = std::move(v);
        cache->attention = std::move(attention);
        cache->context = std::move(context);
        cache->h1 = std::move(h1);
        cache->ffn_pre = std::move(ffn_pre);
        cache->ffn_hidden = std::move(ffn_hidden);
    }
    return out;
}

}  // namespace

RowMatrix cross_attend(const RowMatrix& patches, const RowMatrix& text, const CrossAttentionWeights& weights,
                       std::size_t heads, CrossAttentionCache* cache) {
    if (heads == 0 || weights.query.rows() % static_cast<Eigen::Index>(heads) != 0) {
        fail(ErrorKind::kShape, "attention width is not divisible by the head count");
    }
    if (patches.cols() != weights.in_proj.cols()) {
        fail(ErrorKind::kShape, "patch dimension does not match xattn.in_proj");
    }
    if (text.rows() == 0 || text.cols() != weights.key.cols()) {
        fail(ErrorKind::kShape, "text features do not match xattn.key");
    }
    check_weights(weights);
    return cross_attend_impl(patches, text, weights, heads, cache);
}

void cross_attend_backward(const CrossAttentionWeights& w, std::size_t heads, const CrossAttentionCache& c,
                           const RowMatrix& dout, CrossAttentionWeights& g, RowMatrix* dtext) {
    const Eigen::Index width = w.query.rows();
    const Eigen::Index head_dim = width / static_cast<Eigen::Index>(heads);
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    // Feed-forward sublayer with residual.
    g.ffn_out.noalias() += dout.transpose() * c.ffn_hidden;
    g.ffn_out_bias += dout.colwise().sum().transpose();
    RowMatrix dpre = (dout * w.ffn_out).cwiseProduct(c.ffn_pre.unaryExpr([](double v) { return gelu_grad(v); }));
    g.ffn_in.noalias() += dpre.transpose() * c.h1;
    g.ffn_in_bias += dpre.colwise().sum().transpose();
    RowMatrix dh1 = dout + dpre * w.ffn_in;

    // Attention sublayer with residual.
    g.output.noalias() += dh1.transpose() * c.context;
    RowMatrix dcontext = dh1 * w.output;
    RowMatrix dq(c.q.rows(), width);
    RowMatrix dk(c.k.rows(), width);
    RowMatrix dv(c.v.rows(), width);
    for (std::size_t h = 0; h < heads; ++h) {
        const Eigen::Index c0 = static_cast<Eigen::Index>(h) * head_dim;
        const RowMatrix& a = c.attention[h];
        const auto dctx = dcontext.middleCols(c0, head_dim);
        RowMatrix da = dctx * c.v.middleCols(c0, head_dim).transpose();
        dv.middleCols(c0, head_dim).noalias() = a.transpose() * dctx;
        RowMatrix ds = a.cwiseProduct(da);
        const Vector row_dot = ds.rowwise().sum();
        ds = a.cwiseProduct(da - row_dot.replicate(1, da.cols()));
        ds *= inv_scale;
        dq.middleCols(c0, head_dim).noalias() = ds * c.k.middleCols(c0, head_dim);
        dk.middleCols(c0, head_dim).noalias() = ds.transpose() * c.q.middleCols(c0, head_dim);
    }
    g.query.noalias() += dq.transpose() * c.x;
    g.key.noalias() += dk.transpose() * c.text;
    g.value.noalias() += dv.transpose() * c.text;
    RowMatrix dx = dh1 + dq * w.query;
    g.in_proj.noalias() += dx.transpose() * c.patches;
    if (dtext != nullptr) {
        *dtext = dk * w.key + dv * w.value;
    }
}

TextFeatures apply_ete(const TextFeatures& text, std::span<const std::size_t> span, const Vector& theta) {
    if (theta.size() != text.embeddings.cols()) {
        fail(ErrorKind::kShape, "entity token embedding has the wrong dimension");
    }
    const std::set<std::size_t> unique(span.begin(), span.end());
    for (std::size_t s : unique) {
        if (s >= text.size()) {
            fail(ErrorKind::kSpan, "entity span index " + std::to_string(s) + " outside " +
                                           std::to_string(text.size()) + " tokens");
        }
    }
    TextFeatures out = text;
    for (std::size_t s : unique) {
        out.embeddings.row(static_cast<Eigen::Index>(s)) += theta.transpose();
    }
    return out;
}

namespace {

RowMatrix project(const Mlp& mlp, const RowMatrix& x, EncodeTrace::Projected* trace) {
    MlpCache cache;
    RowMatrix y = mlp_forward(mlp, x, trace != nullptr ? &cache : nullptr);
    Vector norms(y.rows());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        norms(r) = y.row(r).norm();
        if (!(norms(r) > 0.0) || !std::isfinite(norms(r))) {
            fail(ErrorKind::kNumeric, "projection produced a zero or non-finite token");
        }
        y.row(r) /= norms(r);
    }
    if (trace != nullptr) {
        trace->mlp = std::move(cache);
        trace->norms = std::move(norms);
        trace->out = y;
    }
    return y;
}

RowMatrix normalize_backward(const EncodeTrace::Projected& p, const RowMatrix& dy) {
    RowMatrix dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        const double along = p.out.row(r).dot(dy.row(r));
        dx.row(r) = (dy.row(r) - along * p.out.row(r)) / p.norms(r);
    }
    return dx;
}

struct Assembler {
    std::vector<RowMatrix> parts;
    std::vector<TokenTag> tags;

    void add(RowMatrix rows, TokenTag::Kind kind, std::int32_t image) {
        for (Eigen::Index i = 0; i < rows.rows(); ++i) {
            tags.push_back({kind, image, static_cast<std::int32_t>(i)});
        }
        parts.push_back(std::move(rows));
    }

    FeatureSet finish() {
        Eigen::Index n = 0;
        for (const auto& p : parts) {
            n += p.rows();
        }
        RowMatrix all(n, parts.front().cols());
        Eigen::Index at = 0;
        for (const auto& p : parts) {
            all.middleRows(at, p.rows()) = p;
            at += p.rows();
        }
        return FeatureSet(std::move(all), std::move(tags));
    }
};

void check_provider(const EncoderParams& params, const EmbeddingProvider& provider) {
    const auto& c = params.config;
    if (provider.text_dim() != c.text_dim || provider.image_dim() != c.image_dim ||
        provider.num_patches() != c.num_patches) {
        fail(ErrorKind::kConfig, "embedding provider shapes do not match the encoder config");
    }
}

/// Multimodal tokens for one image: cross-attention, flatten, project,
/// reshape to mm_tokens rows.
RowMatrix multimodal_tokens(const EncoderParams& params, const RowMatrix& patches, const RowMatrix& kv,
                            EncodeTrace::Multimodal* trace) {
    const auto& c = params.config;
    RowMatrix fused = cross_attend_impl(patches, kv, params.xattn, c.heads, trace != nullptr ? &trace->xattn : nullptr);
    // Row-major storage makes this a row-by-row flatten.
    RowMatrix flat = Eigen::Map<const RowMatrix>(fused.data(), 1, fused.size());
    MlpCache cache;
    RowMatrix y = mlp_forward(params.mm_proj, flat, trace != nullptr ? &cache : nullptr);
    RowMatrix tokens = Eigen::Map<const RowMatrix>(y.data(), static_cast<Eigen::Index>(c.mm_tokens),
                                                   static_cast<Eigen::Index>(c.dim));
    Vector norms(tokens.rows());
    for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
        norms(r) = tokens.row(r).norm();
        if (!(norms(r) > 0.0) || !std::isfinite(norms(r))) {
            fail(ErrorKind::kNumeric, "multimodal projection produced a zero or non-finite token");
        }
        tokens.row(r) /= norms(r);
    }
    if (trace != nullptr) {
        trace->proj.mlp = std::move(cache);
        trace->proj.norms = std::move(norms);
        trace->proj.out = tokens;
    }
    return tokens;
}

}  // namespace

FeatureSet encode_query(const QueryInput& query, const EncoderParams& params, const EmbeddingProvider& provider,
                        QueryMode mode, EncodeTrace* trace) {
    check_provider(params, provider);
    params.check_finite("encode_query");
    if (query.image_key.empty()) {
        fail(ErrorKind::kInput, "query has no image key");
    }
    const auto tokens = tokenize(query.text);
    if (tokens.empty() && mode == QueryMode::kImageText) {
        fail(ErrorKind::kInput, "query text is empty");
    }
    const ImageFeatures image = provider.embed_image(query.image_key);
    Assembler out;

    EncodeTrace::Global global;
    out.add(project(params.global_proj, image.global.transpose(), trace != nullptr ? &global.proj : nullptr),
            TokenTag::Kind::kGlobalImage, 0);
    if (trace != nullptr) {
        trace->blocks.emplace_back(std::move(global));
    }

    RowMatrix kv;
    bool null_text = false;
    if (!tokens.empty()) {
        kv = provider.embed_tokens(tokens).embeddings;
        if (mode == QueryMode::kImageText) {
            EncodeTrace::Text text;
            RowMatrix t = project(params.text_proj, kv, trace != nullptr ? &text.proj : nullptr);
            for (Eigen::Index i = 0; i < t.rows(); ++i) {
                out.tags.push_back(TokenTag::text(static_cast<std::int32_t>(i)));
            }
            out.parts.push_back(std::move(t));
            if (trace != nullptr) {
                trace->blocks.emplace_back(std::move(text));
            }
        }
    } else {
        kv = params.null_text.transpose();
        null_text = true;
    }

    EncodeTrace::Multimodal mm;
    mm.null_text = null_text;
    out.add(multimodal_tokens(params, image.patches, kv, trace != nullptr ? &mm : nullptr),
            TokenTag::Kind::kMultimodal, 0);
    if (trace != nullptr) {
        trace->blocks.emplace_back(std::move(mm));
    }
    return out.finish();
}

std::size_t document_set_size(std::size_t num_text_tokens, std::size_t num_related, std::size_t mm_tokens,
                              DocFlags flags) {
    const std::size_t related = flags.multi_image ? num_related : 0;
    std::size_t n = num_text_tokens + 1 + mm_tokens;
    n += related * (1 + (flags.multimodal_fusion ? mm_tokens : 0));
    return n;
}

FeatureSet encode_document(const AugmentedDocument& doc, const EncoderParams& params,
                           const EmbeddingProvider& provider, DocFlags flags, EncodeTrace* trace) {
    check_provider(params, provider);
    params.check_finite("encode_document");
    if (doc.raw.main_image_key.empty()) {
        fail(ErrorKind::kDocument, "document " + doc.raw.doc_id + " has no main image");
    }
    if (doc.text_tokens.empty()) {
        fail(ErrorKind::kInput, "document " + doc.raw.doc_id + " has an empty body");
    }
    const TextFeatures text = provider.embed_tokens(doc.text_tokens);
    Assembler out;

    EncodeTrace::Text text_block;
    RowMatrix t = project(params.text_proj, text.embeddings, trace != nullptr ? &text_block.proj : nullptr);
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        out.tags.push_back(TokenTag::text(static_cast<std::int32_t>(i)));
    }
    out.parts.push_back(std::move(t));
    if (trace != nullptr) {
        trace->blocks.emplace_back(std::move(text_block));
    }

    const std::size_t num_images = 1 + (flags.multi_image ? doc.related.size() : 0);
    for (std::size_t r = 0; r < num_images; ++r) {
        const std::string& key = r == 0 ? doc.raw.main_image_key : doc.related[r - 1].image_key;
        const ImageFeatures image = provider.embed_image(key);
        const auto slot = static_cast<std::int32_t>(r);

        EncodeTrace::Global global;
        out.add(project(params.global_proj, image.global.transpose(), trace != nullptr ? &global.proj : nullptr),
                TokenTag::Kind::kGlobalImage, slot);
        if (trace != nullptr) {
            trace->blocks.emplace_back(std::move(global));
        }

        if (r > 0 && !flags.multimodal_fusion) {
            continue;
        }
        EncodeTrace::Multimodal mm;
        const std::vector<std::size_t>& span = r == 0 ? doc.main_span : doc.related[r - 1].span;
        RowMatrix mm_tokens;
        if (flags.entity_embedding) {
            const TextFeatures shifted = apply_ete(text, span, params.ete);
            mm.apply_ete = true;
            mm.ete_span.assign(span.begin(), span.end());
            std::sort(mm.ete_span.begin(), mm.ete_span.end());
            mm.ete_span.erase(std::unique(mm.ete_span.begin(), mm.ete_span.end()), mm.ete_span.end());
            mm_tokens = multimodal_tokens(params, image.patches, shifted.embeddings, trace != nullptr ? &mm : nullptr);
        } else {
            mm_tokens = multimodal_tokens(params, image.patches, text.embeddings, trace != nullptr ? &mm : nullptr);
        }
        out.add(std::move(mm_tokens), TokenTag::Kind::kMultimodal, slot);
        if (trace != nullptr) {
            trace->blocks.emplace_back(std::move(mm));
        }
    }
    return out.finish();
}

void encoder_backward(const EncodeTrace& trace, const EncoderParams& params, const RowMatrix& d_tokens,
                      EncoderParams& grads) {
    const auto& c = params.config;
    Eigen::Index row = 0;
    for (const auto& block : trace.blocks) {
        if (const auto* text = std::get_if<EncodeTrace::Text>(&block)) {
            const Eigen::Index n = text->proj.out.rows();
            const RowMatrix dy = normalize_backward(text->proj, d_tokens.middleRows(row, n));
            mlp_backward(params.text_proj, text->proj.mlp, dy, grads.text_proj, false);
            row += n;
        } else if (const auto* global = std::get_if<EncodeTrace::Global>(&block)) {
            const RowMatrix dy = normalize_backward(global->proj, d_tokens.middleRows(row, 1));
            mlp_backward(params.global_proj, global->proj.mlp, dy, grads.global_proj, false);
            row += 1;
        } else {
            const auto& mm = std::get<EncodeTrace::Multimodal>(block);
            const Eigen::Index n = static_cast<Eigen::Index>(c.mm_tokens);
            const RowMatrix dtok = normalize_backward(mm.proj, d_tokens.middleRows(row, n));
            const RowMatrix dflat_out = Eigen::Map<const RowMatrix>(dtok.data(), 1, dtok.size());
            const RowMatrix dflat = mlp_backward(params.mm_proj, mm.proj.mlp, dflat_out, grads.mm_proj, true);
            const RowMatrix dfused = Eigen::Map<const RowMatrix>(dflat.data(), static_cast<Eigen::Index>(c.num_patches),
                                                                 static_cast<Eigen::Index>(c.attn_dim));
            const bool need_dtext = mm.apply_ete || mm.null_text;
            RowMatrix dtext;
            cross_attend_backward(params.xattn, c.heads, mm.xattn, dfused, grads.xattn,
                                  need_dtext ? &dtext : nullptr);
            if (mm.null_text) {
                grads.null_text += dtext.row(0).transpose();
            } else if (mm.apply_ete) {
                for (std::size_t s : mm.ete_span) {
                    grads.ete += dtext.row(static_cast<Eigen::Index>(s)).transpose();
                }
            }
            row += n;
        }
    }
    if (row != d_tokens.rows()) {
        fail(ErrorKind::kShape, "gradient rows do not match the encoded feature set");
    }
}

}  // namespace mmr
