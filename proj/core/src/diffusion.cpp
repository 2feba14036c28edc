// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/diffusion.hpp"

#include <cmath>

#include "morphlab/errors.hpp"

namespace morphlab {

LatentState forward_noise(const LatentState& z0, int t, const Tensor& eps,
                          const VarianceSchedule& schedule) {
    if (t < 0 || t > schedule.num_steps()) {
        throw ParameterError("forward_noise: t out of [0, T]");
    }
    require_same_shape(z0.values, eps, "forward_noise");

    const double ab = schedule.alpha_bar(t);
    const double signal = std::sqrt(ab);
    const double noise = std::sqrt(1.0 - ab);

    LatentState out;
    out.timestep = t;
    out.values = linear_combine(signal, z0.values, noise, eps);
    return out;
}

Tensor cfg_combine(const Tensor& eps_cond, const Tensor& eps_uncond,
                   const GuidanceConfig& guidance) {
    require_same_shape(eps_cond, eps_uncond, "cfg_combine");
    if (guidance.omega < 0.0) throw ParameterError("cfg_combine: omega must be >= 0");
    if (!guidance.enabled || guidance.omega == 0.0) return eps_cond;
    return linear_combine(1.0 + guidance.omega, eps_cond, -guidance.omega, eps_uncond);
}

namespace {

// Shared two-line DDIM update: predict z0 from (z_t, eps) at source timestep,
// then re-noise it to the destination timestep with the same eps.
LatentState ddim_move(const LatentState& z, const Tensor& eps_hat, int t_src, int t_dst,
                      const VarianceSchedule& schedule) {
    require_same_shape(z.values, eps_hat, "ddim update");
    if (z.timestep != t_src) {
        throw ParameterError("ddim update: latent timestep does not match t");
    }
    const double ab_src = schedule.alpha_bar(t_src);
    const double ab_dst = schedule.alpha_bar(t_dst);
    const double inv_sqrt_src = 1.0 / std::sqrt(ab_src);
    const double c_noise_src = std::sqrt(1.0 - ab_src);
    const double sqrt_dst = std::sqrt(ab_dst);
    const double c_noise_dst = std::sqrt(1.0 - ab_dst);

    // z0_hat = (z - c_noise_src * eps) * inv_sqrt_src
    // out    = sqrt_dst * z0_hat + c_noise_dst * eps
    const double a = sqrt_dst * inv_sqrt_src;
    const double b = c_noise_dst - sqrt_dst * inv_sqrt_src * c_noise_src;

    LatentState out;
    out.timestep = t_dst;
    out.values = linear_combine(a, z.values, b, eps_hat);
    return out;
}

}  // namespace

LatentState ddim_step(const LatentState& z_t, const Tensor& eps_hat, int t, int t_prev,
                      const VarianceSchedule& schedule) {
    if (t_prev >= t) throw ParameterError("ddim_step: t_prev must be < t");
    if (t_prev < 0 || t > schedule.num_steps()) throw ParameterError("ddim_step: timestep out of range");
    return ddim_move(z_t, eps_hat, t, t_prev, schedule);
}

LatentState ddim_invert_step(const LatentState& z_t, const Tensor& eps_hat, int t, int t_next,
                             const VarianceSchedule& schedule) {
    if (t_next <= t) throw ParameterError("ddim_invert_step: t_next must be > t");
    if (t < 0 || t_next > schedule.num_steps()) {
        throw ParameterError("ddim_invert_step: timestep out of range");
    }
    return ddim_move(z_t, eps_hat, t, t_next, schedule);
}

LatentState sample(const LatentState& z_terminal, const NoisePredictor& model,
                   const Conditioning& cond, const GuidanceConfig& guidance,
                   const VarianceSchedule& schedule, int num_inference_steps) {
    if (z_terminal.timestep != schedule.num_steps()) {
        throw ParameterError("sample: initial latent must carry timestep T");
    }
    const std::vector<int> grid = schedule.timestep_grid(num_inference_steps);

    LatentState z = z_terminal;
    const bool use_cfg = guidance.enabled && guidance.omega > 0.0;
    for (int i = num_inference_steps; i >= 1; --i) {
        const int t = grid[static_cast<std::size_t>(i)];
        const int t_prev = grid[static_cast<std::size_t>(i - 1)];

        Tensor eps = model.predict(z.values, t, cond);
        if (!eps.same_shape(z.values)) {
            throw ModelError("sample: model output shape mismatch");
        }
        if (use_cfg) {
            Tensor eps_uncond = model.predict(z.values, t, Conditioning::none());
            if (!eps_uncond.same_shape(z.values)) {
                throw ModelError("sample: unconditional output shape mismatch");
            }
            eps = cfg_combine(eps, eps_uncond, guidance);
        }
        z = ddim_step(z, eps, t, t_prev, schedule);
    }
    return z;
}

}  // namespace morphlab
