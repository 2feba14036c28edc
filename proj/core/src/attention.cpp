// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/attention.hpp"

#include <cmath>

#include "eigen_util.hpp"
#include "morphlab/errors.hpp"

namespace morphlab {

CrossAttentionParams CrossAttentionParams::create(int query_dim, int embed_dim, int key_dim,
                                                  int head_count, Rng& rng) {
    if (query_dim < 1 || embed_dim < 1 || key_dim < 1 || head_count < 1) {
        throw ParameterError("CrossAttentionParams: dimensions must be positive");
    }
    if (query_dim % head_count != 0) {
        throw ParameterError("CrossAttentionParams: query_dim must be divisible by head_count");
    }
    CrossAttentionParams p;
    p.head_count = head_count;
    p.key_dim = key_dim;
    p.w_q = Tensor({query_dim, head_count * key_dim});
    p.w_k = Tensor({embed_dim, head_count * key_dim});
    p.w_v = Tensor({embed_dim, query_dim});
    auto init = [&rng](Tensor& w, int fan_in) {
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<float>(rng.gaussian() * s);
    };
    init(p.w_q, query_dim);
    init(p.w_k, embed_dim);
    init(p.w_v, embed_dim);
    return p;
}

void CrossAttentionParams::validate() const {
    if (head_count < 1 || key_dim < 1) throw ParameterError("attention params: bad head/key config");
    if (w_q.rank() != 2 || w_k.rank() != 2 || w_v.rank() != 2) {
        throw ParameterError("attention params: projections must be matrices");
    }
    if (w_q.dim(1) != head_count * key_dim || w_k.dim(1) != head_count * key_dim) {
        throw ParameterError("attention params: projection widths do not match head_count*key_dim");
    }
    if (w_k.dim(0) != w_v.dim(0)) {
        throw ParameterError("attention params: w_k and w_v embed dims differ");
    }
    if (w_v.dim(1) % head_count != 0) {
        throw ParameterError("attention params: value width not divisible by head_count");
    }
}

namespace {

void check_attention_inputs(const Tensor& f, const Tensor& ctx, const CrossAttentionParams& p) {
    p.validate();
    if (f.rank() != 2) throw ParameterError("attention: query features must be [N, query_dim]");
    if (ctx.rank() != 2) throw ParameterError("attention: context must be [M, embed_dim]");
    if (f.dim(1) != p.query_dim()) {
        throw ParameterError("attention: query feature width does not match w_q");
    }
    if (ctx.dim(1) != p.embed_dim()) {
        throw ParameterError("attention: context width does not match w_k");
    }
}

// Row-wise softmax with max subtraction. Throws on non-finite logits.
void softmax_rows(Tensor& logits) {
    const int n = logits.dim(0), m = logits.dim(1);
    for (int i = 0; i < n; ++i) {
        float* row = logits.data() + static_cast<std::size_t>(i) * m;
        float mx = row[0];
        for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
        if (!std::isfinite(mx)) throw NumericError("attention: non-finite logits");
        double sum = 0.0;
        for (int j = 0; j < m; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        const float inv = static_cast<float>(1.0 / sum);
        for (int j = 0; j < m; ++j) row[j] *= inv;
    }
}

}  // namespace

Tensor attention_forward(const Tensor& f, const Tensor& ctx, const CrossAttentionParams& params,
                         AttnCache* cache) {
    check_attention_inputs(f, ctx, params);
    const int n = f.dim(0);
    const int m = ctx.dim(0);
    const int h = params.head_count;
    const int dk = params.key_dim;
    const int dv = params.value_dim();
    const float inv_sqrt_d = static_cast<float>(1.0 / std::sqrt(static_cast<double>(dk)));

    Tensor out({n, h * dv});
    if (cache) {
        cache->f = f;
        cache->ctx = ctx;
        cache->q.assign(static_cast<std::size_t>(h), Tensor());
        cache->k.assign(static_cast<std::size_t>(h), Tensor());
        cache->v.assign(static_cast<std::size_t>(h), Tensor());
        cache->weights.assign(static_cast<std::size_t>(h), Tensor());
    }

    auto fm = as_mat(f, n, f.dim(1));
    auto cm = as_mat(ctx, m, ctx.dim(1));
    auto wq = as_mat(params.w_q, params.w_q.dim(0), params.w_q.dim(1));
    auto wk = as_mat(params.w_k, params.w_k.dim(0), params.w_k.dim(1));
    auto wv = as_mat(params.w_v, params.w_v.dim(0), params.w_v.dim(1));
    auto om = as_mat(out, n, h * dv);

    for (int head = 0; head < h; ++head) {
        Tensor q({n, dk}), k({m, dk}), v({m, dv});
        as_mat(q, n, dk) = fm * wq.middleCols(head * dk, dk);
        as_mat(k, m, dk) = cm * wk.middleCols(head * dk, dk);
        as_mat(v, m, dv) = cm * wv.middleCols(head * dv, dv);

        Tensor w({n, m});
        as_mat(w, n, m) = (as_mat(q, n, dk) * as_mat(k, m, dk).transpose()) * inv_sqrt_d;
        softmax_rows(w);

        om.middleCols(head * dv, dv) = as_mat(w, n, m) * as_mat(v, m, dv);

        if (cache) {
            cache->q[static_cast<std::size_t>(head)] = std::move(q);
            cache->k[static_cast<std::size_t>(head)] = std::move(k);
            cache->v[static_cast<std::size_t>(head)] = std::move(v);
            cache->weights[static_cast<std::size_t>(head)] = std::move(w);
        }
    }
    if (!out.all_finite()) throw NumericError("attention: non-finite output");
    return out;
}

void attention_backward(const AttnCache& cache, const CrossAttentionParams& params,
                        const Tensor& d_out, Tensor& d_f, Tensor& d_ctx, Tensor& dw_q,
                        Tensor& dw_k, Tensor& dw_v) {
    const int n = cache.f.dim(0);
    const int m = cache.ctx.dim(0);
    const int h = params.head_count;
    const int dk = params.key_dim;
    const int dv = params.value_dim();
    const float inv_sqrt_d = static_cast<float>(1.0 / std::sqrt(static_cast<double>(dk)));

    if (d_f.empty()) d_f = Tensor(cache.f.shape());
    if (d_ctx.empty()) d_ctx = Tensor(cache.ctx.shape());
    if (dw_q.empty()) dw_q = Tensor(params.w_q.shape());
    if (dw_k.empty()) dw_k = Tensor(params.w_k.shape());
    if (dw_v.empty()) dw_v = Tensor(params.w_v.shape());

    auto fm = as_mat(cache.f, n, cache.f.dim(1));
    auto cm = as_mat(cache.ctx, m, cache.ctx.dim(1));
    auto wq = as_mat(params.w_q, params.w_q.dim(0), params.w_q.dim(1));
    auto wk = as_mat(params.w_k, params.w_k.dim(0), params.w_k.dim(1));
    auto wv = as_mat(params.w_v, params.w_v.dim(0), params.w_v.dim(1));
    auto dom = as_mat(d_out, n, h * dv);
    auto dfm = as_mat(d_f, n, d_f.dim(1));
    auto dcm = as_mat(d_ctx, m, d_ctx.dim(1));
    auto dwqm = as_mat(dw_q, dw_q.dim(0), dw_q.dim(1));
    auto dwkm = as_mat(dw_k, dw_k.dim(0), dw_k.dim(1));
    auto dwvm = as_mat(dw_v, dw_v.dim(0), dw_v.dim(1));

    for (int head = 0; head < h; ++head) {
        const auto& q = cache.q[static_cast<std::size_t>(head)];
        const auto& k = cache.k[static_cast<std::size_t>(head)];
        const auto& v = cache.v[static_cast<std::size_t>(head)];
        const auto& w = cache.weights[static_cast<std::size_t>(head)];
        auto qm = as_mat(q, n, dk);
        auto km = as_mat(k, m, dk);
        auto vm = as_mat(v, m, dv);
        auto wm = as_mat(w, n, m);
        RowMat d_head = dom.middleCols(head * dv, dv);

        // value path
        RowMat d_v = wm.transpose() * d_head;                       // [M, dv]
        RowMat d_w = d_head * vm.transpose();                       // [N, M]

        // softmax jacobian per row
        RowMat d_logits(n, m);
        for (int i = 0; i < n; ++i) {
            const float row_dot = (d_w.row(i).array() * wm.row(i).array()).sum();
            d_logits.row(i) = (d_w.row(i).array() - row_dot) * wm.row(i).array();
        }
        d_logits *= inv_sqrt_d;

        RowMat d_q = d_logits * km;                                 // [N, dk]
        RowMat d_k = d_logits.transpose() * qm;                     // [M, dk]

        dwqm.middleCols(head * dk, dk) += fm.transpose() * d_q;
        dwkm.middleCols(head * dk, dk) += cm.transpose() * d_k;
        dwvm.middleCols(head * dv, dv) += cm.transpose() * d_v;
        dfm += d_q * wq.middleCols(head * dk, dk).transpose();
        dcm += d_k * wk.middleCols(head * dk, dk).transpose();
        dcm += d_v * wv.middleCols(head * dv, dv).transpose();
    }
}

Tensor attention_weights(const Tensor& f, const Tensor& ctx, const CrossAttentionParams& params) {
    AttnCache cache;
    attention_forward(f, ctx, params, &cache);
    const int h = params.head_count;
    const int n = f.dim(0);
    const int m = ctx.dim(0);
    Tensor stacked({h, n, m});
    for (int head = 0; head < h; ++head) {
        const Tensor& w = cache.weights[static_cast<std::size_t>(head)];
        std::copy(w.data(), w.data() + w.size(),
                  stacked.data() + static_cast<std::size_t>(head) * w.size());
    }
    return stacked;
}

AttentionOutput cross_attention(const Tensor& f, const IdentityEmbedding& c,
                                const CrossAttentionParams& params) {
    if (c.dim() < 1) throw ParameterError("cross_attention: empty identity embedding");
    return cross_attention_context(f, c.values.reshaped({1, c.dim()}), params);
}

AttentionOutput cross_attention_context(const Tensor& f, const Tensor& context,
                                        const CrossAttentionParams& params) {
    return AttentionOutput{attention_forward(f, context, params, nullptr)};
}

std::pair<AttentionOutput, AttentionOutput> dual_cross_attention(
    const Tensor& f, const IdentityEmbedding& c_a, const IdentityEmbedding& c_b,
    const CrossAttentionParams& params) {
    return {cross_attention(f, c_a, params), cross_attention(f, c_b, params)};
}

AttentionOutput interpolate_attention(const AttentionOutput& c_a, const AttentionOutput& c_b,
                                      double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ParameterError("interpolate_attention: lambda must be in [0, 1]");
    }
    require_same_shape(c_a.values, c_b.values, "interpolate_attention");
    return AttentionOutput{linear_combine(lambda, c_a.values, 1.0 - lambda, c_b.values)};
}

}  // namespace morphlab
