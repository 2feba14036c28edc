// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "morphlab/identity.hpp"
#include "morphlab/schedule.hpp"
#include "morphlab/tensor.hpp"

namespace morphlab {

// Latent tensor pinned to a diffusion timestep in [0, T].
struct LatentState {
    int timestep = 0;
    Tensor values;
};

struct GuidanceConfig {
    double omega = 1.0;
    bool enabled = true;

    static GuidanceConfig off() { return GuidanceConfig{0.0, false}; }
};

// How the denoiser is conditioned for one prediction. `dual` runs the
// decoupled per-identity attention branches and interpolates their outputs
// with weight `lambda` on identity A.
struct Conditioning {
    enum class Kind { unconditional, single, dual };

    Kind kind = Kind::unconditional;
    IdentityEmbedding a;
    IdentityEmbedding b;
    double lambda = 0.5;

    static Conditioning none() { return Conditioning{}; }
    static Conditioning one(IdentityEmbedding c) {
        Conditioning cond;
        cond.kind = Kind::single;
        cond.a = std::move(c);
        return cond;
    }
    static Conditioning pair(IdentityEmbedding ca, IdentityEmbedding cb, double lambda) {
        Conditioning cond;
        cond.kind = Kind::dual;
        cond.a = std::move(ca);
        cond.b = std::move(cb);
        cond.lambda = lambda;
        return cond;
    }
};

// Noise predictor abstraction over the trained denoiser (and test stand-ins).
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;
    virtual Tensor predict(const Tensor& z, int t, const Conditioning& cond) const = 0;
    virtual std::vector<int> latent_shape() const = 0;
};

// Closed-form marginal of the stepwise noising kernel:
// z_t = sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * eps.
LatentState forward_noise(const LatentState& z0, int t, const Tensor& eps,
                          const VarianceSchedule& schedule);

// (1 + omega) * eps_cond - omega * eps_uncond; identity when guidance is off.
Tensor cfg_combine(const Tensor& eps_cond, const Tensor& eps_uncond, const GuidanceConfig& guidance);

// Deterministic (eta = 0) update from t down to t_prev < t.
LatentState ddim_step(const LatentState& z_t, const Tensor& eps_hat, int t, int t_prev,
                      const VarianceSchedule& schedule);

// Algebraic inverse of ddim_step under a fixed eps_hat; maps t up to t_next.
LatentState ddim_invert_step(const LatentState& z_t, const Tensor& eps_hat, int t, int t_next,
                             const VarianceSchedule& schedule);

// Full deterministic denoising loop from z_T to z_0 over an evenly spaced
// timestep grid, applying classifier-free guidance each step when enabled.
LatentState sample(const LatentState& z_terminal, const NoisePredictor& model,
                   const Conditioning& cond, const GuidanceConfig& guidance,
                   const VarianceSchedule& schedule, int num_inference_steps);

}  // namespace morphlab
