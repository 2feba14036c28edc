// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/denoiser.hpp"

#include <cmath>

#include "morphlab/codec.hpp"
#include "morphlab/errors.hpp"

namespace morphlab {

namespace {

// [C,H,W] -> [H*W, C] token matrix.
Tensor tokens_from_map(const Tensor& x) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor f({h * w, c});
    for (int ci = 0; ci < c; ++ci) {
        for (int i = 0; i < h * w; ++i) {
            f[static_cast<std::size_t>(i) * c + ci] = x[static_cast<std::size_t>(ci) * h * w + i];
        }
    }
    return f;
}

Tensor map_from_tokens(const Tensor& f, int c, int h, int w) {
    Tensor x({c, h, w});
    for (int ci = 0; ci < c; ++ci) {
        for (int i = 0; i < h * w; ++i) {
            x[static_cast<std::size_t>(ci) * h * w + i] = f[static_cast<std::size_t>(i) * c + ci];
        }
    }
    return x;
}

}  // namespace

ConvBlock::ConvBlock(ParamStore& store, const std::string& name, int in_ch, int out_ch, int stride,
                     int time_dim, Rng& rng) {
    conv = std::make_unique<Conv2d>(store, name + ".conv", in_ch, out_ch, 3, stride, rng);
    temb_proj = std::make_unique<Linear>(store, name + ".temb", time_dim, out_ch, rng);
}

Tensor ConvBlock::forward(const Tensor& x, const Tensor& temb, Cache* cache) const {
    Tensor y = conv->forward(x, cache ? &cache->conv : nullptr);
    Tensor bias = temb_proj->forward(temb, cache ? &cache->temb : nullptr);
    const int c = y.dim(0), hw = y.dim(1) * y.dim(2);
    for (int ci = 0; ci < c; ++ci) {
        const float b = bias[static_cast<std::size_t>(ci)];
        float* row = y.data() + static_cast<std::size_t>(ci) * hw;
        for (int i = 0; i < hw; ++i) row[i] += b;
    }
    if (cache) cache->pre_act = y;
    return silu(y);
}

Tensor ConvBlock::backward(const Cache& cache, const Tensor& d_out, Tensor& d_temb) const {
    Tensor d_pre = silu_backward(cache.pre_act, d_out);
    const int c = d_pre.dim(0), hw = d_pre.dim(1) * d_pre.dim(2);
    Tensor d_bias({c});
    for (int ci = 0; ci < c; ++ci) {
        double acc = 0.0;
        const float* row = d_pre.data() + static_cast<std::size_t>(ci) * hw;
        for (int i = 0; i < hw; ++i) acc += row[i];
        d_bias[static_cast<std::size_t>(ci)] = static_cast<float>(acc);
    }
    Tensor d_t = temb_proj->backward(cache.temb, d_bias);
    for (std::size_t i = 0; i < d_t.size(); ++i) d_temb[i] += d_t[i];
    return conv->backward(cache.conv, d_pre);
}

AttnBlock::AttnBlock(ParamStore& store, const std::string& name, int ch, int cond_dim, int h,
                     Rng& rng)
    : channels(ch), heads(h) {
    if (ch % h != 0) throw ParameterError("AttnBlock: channels must divide by heads");
    w_q = store.create(name + ".w_q", {ch, ch});
    w_k = store.create(name + ".w_k", {cond_dim, ch});
    w_v = store.create(name + ".w_v", {cond_dim, ch});
    auto init = [&rng](Tensor& w, int fan_in) {
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<float>(rng.gaussian() * s);
    };
    init(w_q->value, ch);
    init(w_k->value, cond_dim);
    init(w_v->value, cond_dim);
    out_proj = std::make_unique<Linear>(store, name + ".out", ch, ch, rng);
    // zero-init the residual projection so the block starts as identity
    out_proj->weight()->value.fill(0.0f);
    out_proj->bias()->value.fill(0.0f);
}

CrossAttentionParams AttnBlock::params_view() const {
    CrossAttentionParams p;
    p.w_q = w_q->value;
    p.w_k = w_k->value;
    p.w_v = w_v->value;
    p.head_count = heads;
    p.key_dim = channels / heads;
    return p;
}

Tensor AttnBlock::forward(const Tensor& x, const Conditioning& cond, const Tensor& null_token,
                          const AttentionMixer& mixer, Cache* cache) const {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor f = tokens_from_map(x);
    const CrossAttentionParams pv = params_view();
    const int cond_dim = pv.embed_dim();

    Tensor attn_out;
    switch (cond.kind) {
        case Conditioning::Kind::unconditional: {
            Tensor ctx = null_token.reshaped({1, cond_dim});
            attn_out = attention_forward(f, ctx, pv, cache ? &cache->attn : nullptr);
            break;
        }
        case Conditioning::Kind::single: {
            if (cond.a.dim() != cond_dim) throw ParameterError("conditioning dim mismatch");
            Tensor ctx = cond.a.values.reshaped({1, cond_dim});
            attn_out = attention_forward(f, ctx, pv, cache ? &cache->attn : nullptr);
            break;
        }
        case Conditioning::Kind::dual: {
            if (cache) throw ParameterError("dual conditioning is inference-only");
            if (cond.a.dim() != cond_dim || cond.b.dim() != cond_dim) {
                throw ParameterError("conditioning dim mismatch");
            }
            auto branches = dual_cross_attention(f, cond.a, cond.b, pv);
            attn_out = mixer ? mixer(branches.first.values, branches.second.values, cond.lambda)
                             : interpolate_attention(branches.first, branches.second, cond.lambda)
                                   .values;
            break;
        }
    }
    if (cache) cache->kind = cond.kind;

    Tensor proj = out_proj->forward(attn_out, cache ? &cache->out_in : nullptr);
    Tensor res = map_from_tokens(proj, c, h, w);
    return add(x, res);
}

Tensor AttnBlock::backward(const Cache& cache, const Tensor& d_out, Tensor& d_ctx) const {
    const int c = d_out.dim(0), h = d_out.dim(1), w = d_out.dim(2);
    Tensor d_proj = tokens_from_map(d_out);
    Tensor d_attn_out = out_proj->backward(cache.out_in, d_proj);

    Tensor d_f;
    const CrossAttentionParams pv = params_view();
    attention_backward(cache.attn, pv, d_attn_out, d_f, d_ctx, w_q->grad, w_k->grad, w_v->grad);

    Tensor dx = map_from_tokens(d_f, c, h, w);
    // residual path
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += d_out[i];
    return dx;
}

DenoiserModel::DenoiserModel(const DenoiserConfig& config) : config_(config) {
    if (config.num_down != 1 && config.num_down != 2) {
        throw ParameterError("DenoiserModel: num_down must be 1 or 2");
    }
    if (config.latent_size % (1 << config.num_down) != 0) {
        throw ParameterError("DenoiserModel: latent_size must divide by 2^num_down");
    }
    Rng rng(config.init_seed);
    const int c0 = config.base_channels;
    const int c1 = 2 * c0;
    const int c2 = 4 * c0;
    const int td = config.time_dim;

    time0_ = std::make_unique<Linear>(params_, "time.fc0", 32, td, rng);
    time1_ = std::make_unique<Linear>(params_, "time.fc1", td, td, rng);

    null_token_ = params_.create("cond.null_token", {config.cond_dim});
    for (std::size_t i = 0; i < null_token_->value.size(); ++i) {
        null_token_->value[i] = static_cast<float>(rng.gaussian() * 0.1);
    }

    enc_in_ = std::make_unique<ConvBlock>(params_, "enc_in", config.latent_channels, c0, 1, td, rng);
    down1_ = std::make_unique<ConvBlock>(params_, "down1", c0, c1, 2, td, rng);
    attn1_ = std::make_unique<AttnBlock>(params_, "attn1", c1, config.cond_dim,
                                         config.attention_heads, rng);
    res1_ = std::make_unique<ConvBlock>(params_, "res1", c1, c1, 1, td, rng);
    if (config.num_down == 2) {
        down2_ = std::make_unique<ConvBlock>(params_, "down2", c1, c2, 2, td, rng);
        attn2_ = std::make_unique<AttnBlock>(params_, "attn2", c2, config.cond_dim,
                                             config.attention_heads, rng);
        res2_ = std::make_unique<ConvBlock>(params_, "res2", c2, c2, 1, td, rng);
        mid_ = std::make_unique<ConvBlock>(params_, "mid", c2, c2, 1, td, rng);
        up1_ = std::make_unique<ConvBlock>(params_, "up1", c2, c1, 1, td, rng);
        attn3_ = std::make_unique<AttnBlock>(params_, "attn3", c1, config.cond_dim,
                                             config.attention_heads, rng);
        res3_ = std::make_unique<ConvBlock>(params_, "res3", c1, c1, 1, td, rng);
    } else {
        mid_ = std::make_unique<ConvBlock>(params_, "mid", c1, c1, 1, td, rng);
    }
    up2_ = std::make_unique<ConvBlock>(params_, "up2", c1, c0, 1, td, rng);
    out_conv_ = std::make_unique<Conv2d>(params_, "out", c0, config.latent_channels, 3, 1, rng);
    // start the model near zero output
    out_conv_->weight()->value.fill(0.0f);
    out_conv_->bias()->value.fill(0.0f);
}

std::vector<int> DenoiserModel::latent_shape() const {
    return {config_.latent_channels, config_.latent_size, config_.latent_size};
}

Tensor DenoiserModel::predict(const Tensor& z, int t, const Conditioning& cond) const {
    return forward_impl(z, t, cond, nullptr);
}

Tensor DenoiserModel::forward_train(const Tensor& z, int t, const Conditioning& cond,
                                    DenoiserCache& cache) const {
    return forward_impl(z, t, cond, &cache);
}

Tensor DenoiserModel::forward_impl(const Tensor& z, int t, const Conditioning& cond,
                                   DenoiserCache* cache) const {
    if (z.rank() != 3 || z.dim(0) != config_.latent_channels || z.dim(1) != config_.latent_size ||
        z.dim(2) != config_.latent_size) {
        throw ParameterError("DenoiserModel: latent shape mismatch");
    }

    Tensor feats = sinusoidal_features(static_cast<double>(t), 32);
    Tensor h0t = time0_->forward(feats, cache ? &cache->time0_in : nullptr);
    if (cache) cache->time0_pre = h0t;
    Tensor h0a = silu(h0t);
    Tensor h1t = time1_->forward(h0a, cache ? &cache->time1_in : nullptr);
    if (cache) cache->time1_pre = h1t;
    Tensor temb = silu(h1t);
    if (cache) {
        cache->time_feats = feats;
        cache->cond_kind = cond.kind;
    }

    const Tensor& null_token = null_token_->value;

    Tensor h0 = enc_in_->forward(z, temb, cache ? &cache->enc_in : nullptr);
    Tensor h1 = down1_->forward(h0, temb, cache ? &cache->down1 : nullptr);
    h1 = attn1_->forward(h1, cond, null_token, mixer_, cache ? &cache->attn1 : nullptr);
    h1 = res1_->forward(h1, temb, cache ? &cache->res1 : nullptr);

    Tensor top;
    if (config_.num_down == 2) {
        Tensor h2 = down2_->forward(h1, temb, cache ? &cache->down2 : nullptr);
        h2 = attn2_->forward(h2, cond, null_token, mixer_, cache ? &cache->attn2 : nullptr);
        h2 = res2_->forward(h2, temb, cache ? &cache->res2 : nullptr);
        Tensor m = mid_->forward(h2, temb, cache ? &cache->mid : nullptr);
        Tensor u1 = up1_->forward(upsample_nearest2(m), temb, cache ? &cache->up1 : nullptr);
        u1 = add(u1, h1);
        u1 = attn3_->forward(u1, cond, null_token, mixer_, cache ? &cache->attn3 : nullptr);
        u1 = res3_->forward(u1, temb, cache ? &cache->res3 : nullptr);
        top = std::move(u1);
    } else {
        top = mid_->forward(h1, temb, cache ? &cache->mid : nullptr);
    }

    Tensor u2 = up2_->forward(upsample_nearest2(top), temb, cache ? &cache->up2 : nullptr);
    u2 = add(u2, h0);
    return out_conv_->forward(u2, cache ? &cache->out_conv : nullptr);
}

Tensor DenoiserModel::backward(const DenoiserCache& cache, const Tensor& d_out) const {
    Tensor d_temb({config_.time_dim});
    Tensor d_ctx;  // gradient into the context token of each attention block

    auto consume_ctx = [&](const AttnBlock::Cache& bc, Tensor& d_ctx_local) {
        if (bc.kind == Conditioning::Kind::unconditional) {
            for (std::size_t i = 0; i < d_ctx_local.size(); ++i) {
                null_token_->grad[i] += d_ctx_local[i];
            }
        }
        // gradients into frozen identity embeddings are discarded
    };

    Tensor d_u2 = out_conv_->backward(cache.out_conv, d_out);
    Tensor d_h0_skip = d_u2;  // skip add into u2
    Tensor d_top_up = up2_->backward(cache.up2, d_u2, d_temb);
    Tensor d_top = upsample_nearest2_backward(d_top_up);

    Tensor d_h1;
    if (config_.num_down == 2) {
        Tensor d_u1 = res3_->backward(cache.res3, d_top, d_temb);
        Tensor d_ctx3;
        d_u1 = attn3_->backward(cache.attn3, d_u1, d_ctx3);
        consume_ctx(cache.attn3, d_ctx3);
        Tensor d_h1_skip = d_u1;  // skip add into u1
        Tensor d_m_up = up1_->backward(cache.up1, d_u1, d_temb);
        Tensor d_m = upsample_nearest2_backward(d_m_up);
        Tensor d_h2 = mid_->backward(cache.mid, d_m, d_temb);
        d_h2 = res2_->backward(cache.res2, d_h2, d_temb);
        Tensor d_ctx2;
        d_h2 = attn2_->backward(cache.attn2, d_h2, d_ctx2);
        consume_ctx(cache.attn2, d_ctx2);
        d_h1 = down2_->backward(cache.down2, d_h2, d_temb);
        for (std::size_t i = 0; i < d_h1.size(); ++i) d_h1[i] += d_h1_skip[i];
    } else {
        d_h1 = mid_->backward(cache.mid, d_top, d_temb);
    }

    d_h1 = res1_->backward(cache.res1, d_h1, d_temb);
    Tensor d_ctx1;
    d_h1 = attn1_->backward(cache.attn1, d_h1, d_ctx1);
    consume_ctx(cache.attn1, d_ctx1);
    Tensor d_h0 = down1_->backward(cache.down1, d_h1, d_temb);
    for (std::size_t i = 0; i < d_h0.size(); ++i) d_h0[i] += d_h0_skip[i];
    Tensor d_z = enc_in_->backward(cache.enc_in, d_h0, d_temb);

    // time trunk
    Tensor d_h1t = silu_backward(cache.time1_pre, d_temb);
    Tensor d_h0a = time1_->backward(cache.time1_in, d_h1t);
    Tensor d_h0t = silu_backward(cache.time0_pre, d_h0a);
    time0_->backward(cache.time0_in, d_h0t);
    return d_z;
}

TrainStats train_denoiser(DenoiserModel& model, const ToyDataset& dataset,
                          const IdentityEmbedder& cond_embedder, const VarianceSchedule& schedule,
                          const DenoiserTrainConfig& config, const LatentCodec* codec) {
    const std::vector<int> train_idx = dataset.train_image_indices();
    if (train_idx.empty()) throw TrainingError("train_denoiser: empty training split");
    if (cond_embedder.embedding_dim() != model.config().cond_dim) {
        throw ParameterError("train_denoiser: embedder dim does not match model cond_dim");
    }

    // Precompute frozen conditioning embeddings and training latents.
    std::vector<IdentityEmbedding> embeddings;
    std::vector<Tensor> latents;
    embeddings.reserve(train_idx.size());
    latents.reserve(train_idx.size());
    for (int idx : train_idx) {
        const Tensor& pixels = dataset.images[static_cast<std::size_t>(idx)].pixels;
        embeddings.push_back(cond_embedder.embed(pixels));
        latents.push_back(codec ? codec->encode(pixels).values : pixels);
    }
    if (latents.front().shape() != model.latent_shape()) {
        throw ParameterError("train_denoiser: codec latent shape does not match the model");
    }

    Rng rng(config.seed);
    AdamOptimizer opt(model.params().all(), config.lr);
    const int T = schedule.num_steps();
    const std::vector<int> lshape = model.latent_shape();
    const double inv_n = 1.0 / static_cast<double>(lshape[0] * lshape[1] * lshape[2]);

    TrainStats stats;
    for (int step = 0; step < config.steps; ++step) {
        model.params().zero_grads();
        double loss_acc = 0.0;
        for (int b = 0; b < config.batch_size; ++b) {
            const int pick = rng.uniform_int(0, static_cast<int>(train_idx.size()) - 1);

            const int t = rng.uniform_int(1, T);
            Tensor eps = rng.gaussian_tensor(lshape);
            LatentState z0{0, latents[static_cast<std::size_t>(pick)]};
            LatentState zt = forward_noise(z0, t, eps, schedule);

            const bool drop = rng.uniform() < config.cond_dropout;
            Conditioning cond = drop ? Conditioning::none()
                                     : Conditioning::one(embeddings[static_cast<std::size_t>(pick)]);

            DenoiserCache cache;
            Tensor pred = model.forward_train(zt.values, t, cond, cache);
            loss_acc += mse(pred, eps);

            Tensor d_pred(pred.shape());
            const double scale_grad = 2.0 * inv_n / config.batch_size;
            for (std::size_t i = 0; i < pred.size(); ++i) {
                d_pred[i] = static_cast<float>((pred[i] - eps[i]) * scale_grad);
            }
            model.backward(cache, d_pred);
        }
        const float batch_loss = static_cast<float>(loss_acc / config.batch_size);
        if (!std::isfinite(batch_loss)) throw TrainingError("train_denoiser: loss diverged");
        if (step == 0) stats.first_loss = batch_loss;
        stats.losses.push_back(batch_loss);

        model.params().clip_grad_norm(config.grad_clip);
        opt.step();
    }
    stats.final_loss = stats.losses.empty() ? 0.0f : stats.losses.back();
    return stats;
}

}  // namespace morphlab
