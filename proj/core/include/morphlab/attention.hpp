// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>
#include <vector>

#include "morphlab/identity.hpp"
#include "morphlab/rng.hpp"
#include "morphlab/tensor.hpp"

namespace morphlab {

// Projection weights for identity cross-attention. One parameter set serves
// both identity branches; the dual-branch API takes a single instance, so
// separate per-branch copies cannot be constructed by accident.
struct CrossAttentionParams {
    Tensor w_q;  // [query_dim, head_count * key_dim]
    Tensor w_k;  // [embed_dim, head_count * key_dim]
    Tensor w_v;  // [embed_dim, query_dim]
    int head_count = 1;
    int key_dim = 0;  // per-head key dimension d

    int query_dim() const { return w_q.empty() ? 0 : w_q.dim(0); }
    int embed_dim() const { return w_k.empty() ? 0 : w_k.dim(0); }
    int value_dim() const { return head_count > 0 && !w_v.empty() ? w_v.dim(1) / head_count : 0; }

    static CrossAttentionParams create(int query_dim, int embed_dim, int key_dim, int head_count,
                                       Rng& rng);
    void validate() const;
};

// Output of one attention evaluation, shaped like the query features [N, query_dim].
struct AttentionOutput {
    Tensor values;
};

// Forward cache for the trainable path.
struct AttnCache {
    Tensor f;
    Tensor ctx;
    std::vector<Tensor> q;        // per head [N, key_dim]
    std::vector<Tensor> k;        // per head [M, key_dim]
    std::vector<Tensor> v;        // per head [M, value_dim]
    std::vector<Tensor> weights;  // per head [N, M], softmax rows
};

// softmax(Q K^T / sqrt(d)) V with Q = f w_q, K = ctx w_k, V = ctx w_v,
// heads evaluated independently and concatenated. f is [N, query_dim],
// ctx is [M, embed_dim]. Passing a cache enables attention_backward.
Tensor attention_forward(const Tensor& f, const Tensor& ctx, const CrossAttentionParams& params,
                         AttnCache* cache = nullptr);

// Accumulates weight gradients and input gradients from d_out [N, query_dim].
void attention_backward(const AttnCache& cache, const CrossAttentionParams& params,
                        const Tensor& d_out, Tensor& d_f, Tensor& d_ctx, Tensor& dw_q,
                        Tensor& dw_k, Tensor& dw_v);

// Softmax weight rows, stacked per head: [head_count, N, M].
Tensor attention_weights(const Tensor& f, const Tensor& ctx, const CrossAttentionParams& params);

// Single-identity conditioning: the embedding is one context token.
AttentionOutput cross_attention(const Tensor& f, const IdentityEmbedding& c,
                                const CrossAttentionParams& params);

// Multi-token context variant (context rows are tokens).
AttentionOutput cross_attention_context(const Tensor& f, const Tensor& context,
                                        const CrossAttentionParams& params);

// Decoupled branches with shared weights: first output depends only on
// (f, c_a), second only on (f, c_b).
std::pair<AttentionOutput, AttentionOutput> dual_cross_attention(const Tensor& f,
                                                                 const IdentityEmbedding& c_a,
                                                                 const IdentityEmbedding& c_b,
                                                                 const CrossAttentionParams& params);

// lambda * c_a + (1 - lambda) * c_b, lambda in [0, 1] (lambda weights A).
AttentionOutput interpolate_attention(const AttentionOutput& c_a, const AttentionOutput& c_b,
                                      double lambda);

}  // namespace morphlab
