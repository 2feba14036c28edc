// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "morphlab/attention.hpp"
#include "morphlab/diffusion.hpp"
#include "morphlab/nn.hpp"
#include "morphlab/synthetic.hpp"

namespace morphlab {

struct DenoiserConfig {
    int latent_channels = 1;
    int latent_size = 32;
    int base_channels = 16;
    int num_down = 2;  // 1 or 2 downsampling stages
    int cond_dim = 64;
    int time_dim = 64;
    int attention_heads = 1;
    std::uint64_t init_seed = 1;
};

// Conv block: conv -> +time bias -> SiLU.
struct ConvBlock {
    ConvBlock(ParamStore& store, const std::string& name, int in_ch, int out_ch, int stride,
              int time_dim, Rng& rng);

    struct Cache {
        ConvCache conv;
        LinearCache temb;
        Tensor pre_act;
    };

    Tensor forward(const Tensor& x, const Tensor& temb, Cache* cache) const;
    Tensor backward(const Cache& cache, const Tensor& d_out, Tensor& d_temb) const;

    std::unique_ptr<Conv2d> conv;
    std::unique_ptr<Linear> temb_proj;
};

// Combines the two decoupled attention outputs; interpolate_attention unless
// a cross-check mixer is installed.
using AttentionMixer = std::function<Tensor(const Tensor& c_a, const Tensor& c_b, double lambda)>;

// Residual identity cross-attention over spatial tokens. The shared
// projection weights serve every conditioning branch of the block.
struct AttnBlock {
    AttnBlock(ParamStore& store, const std::string& name, int channels, int cond_dim, int heads,
              Rng& rng);

    struct Cache {
        AttnCache attn;
        LinearCache out_in;
        Conditioning::Kind kind = Conditioning::Kind::unconditional;
    };

    CrossAttentionParams params_view() const;
    Tensor forward(const Tensor& x, const Conditioning& cond, const Tensor& null_token,
                   const AttentionMixer& mixer, Cache* cache) const;
    // Returns dx; d_ctx receives the gradient w.r.t. the context token.
    Tensor backward(const Cache& cache, const Tensor& d_out, Tensor& d_ctx) const;

    int channels = 0;
    ParamPtr w_q, w_k, w_v;
    int heads = 1;
    std::unique_ptr<Linear> out_proj;
};

struct DenoiserCache;

// Small conv encoder-decoder noise predictor with timestep bias injection and
// identity cross-attention blocks at the inner resolutions.
class DenoiserModel : public NoisePredictor {
public:
    explicit DenoiserModel(const DenoiserConfig& config);

    Tensor predict(const Tensor& z, int t, const Conditioning& cond) const override;
    std::vector<int> latent_shape() const override;

    Tensor forward_train(const Tensor& z, int t, const Conditioning& cond,
                         DenoiserCache& cache) const;
    // Accumulates parameter gradients; returns gradient w.r.t. z.
    Tensor backward(const DenoiserCache& cache, const Tensor& d_out) const;

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const DenoiserConfig& config() const { return config_; }
    Tensor null_embedding_value() const { return null_token_->value; }

    // Replaces the dual-branch attention interpolation in every block (an
    // independent mixer can then be cross-checked against the default path).
    void set_attention_mixer(AttentionMixer mixer) { mixer_ = std::move(mixer); }

private:
    Tensor forward_impl(const Tensor& z, int t, const Conditioning& cond,
                        DenoiserCache* cache) const;

    DenoiserConfig config_;
    ParamStore params_;
    ParamPtr null_token_;
    AttentionMixer mixer_;

    std::unique_ptr<Linear> time0_, time1_;
    std::unique_ptr<ConvBlock> enc_in_, down1_, res1_, down2_, res2_, mid_, up1_, res3_, up2_;
    std::unique_ptr<AttnBlock> attn1_, attn2_, attn3_;
    std::unique_ptr<Conv2d> out_conv_;
};

struct DenoiserCache {
    Tensor time_feats;
    LinearCache time0_in, time1_in;
    Tensor time0_pre, time1_pre;

    ConvBlock::Cache enc_in, down1, res1, down2, res2, mid, up1, res3, up2;
    AttnBlock::Cache attn1, attn2, attn3;
    ConvCache out_conv;
    Conditioning::Kind cond_kind = Conditioning::Kind::unconditional;
};

struct DenoiserTrainConfig {
    int steps = 2000;
    int batch_size = 16;
    double lr = 1e-3;
    double cond_dropout = 0.1;
    double grad_clip = 1.0;
    std::uint64_t seed = 3;
    int log_every = 200;
};

struct TrainStats {
    std::vector<float> losses;
    float final_loss = 0.0f;
    float first_loss = 0.0f;
};

class LatentCodec;

// Noise-prediction MSE training with identity conditioning and condition
// dropout feeding the learned unconditional token. Training operates on
// codec latents; a null codec means pixel-space latents.
TrainStats train_denoiser(DenoiserModel& model, const ToyDataset& dataset,
                          const IdentityEmbedder& cond_embedder, const VarianceSchedule& schedule,
                          const DenoiserTrainConfig& config, const LatentCodec* codec = nullptr);

}  // namespace morphlab
