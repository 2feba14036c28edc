// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/latent_interp.hpp"

#include <cmath>
#include <numbers>

#include "morphlab/errors.hpp"

namespace morphlab {

LatentState slerp(const LatentState& a, const LatentState& b, double lambda) {
    require_same_shape(a.values, b.values, "slerp");
    if (a.timestep != b.timestep) throw ParameterError("slerp: latents carry different timesteps");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("slerp: lambda must be in [0, 1]");

    const double norm_a = norm(a.values);
    const double norm_b = norm(b.values);
    if (norm_a == 0.0 || norm_b == 0.0) throw ParameterError("slerp: zero-norm input");

    // Guard band of 1e-7 on the cosine: inside it acos/sin are unusable, so
    // nearly parallel inputs take the linear fallback and nearly antipodal
    // inputs are rejected outright.
    const double cos_theta = dot(a.values, b.values) / (norm_a * norm_b);
    LatentState out;
    out.timestep = a.timestep;
    if (cos_theta >= 1.0 - 1e-7) {
        out.values = linear_combine(lambda, a.values, 1.0 - lambda, b.values);
        return out;
    }
    if (cos_theta <= -1.0 + 1e-7) {
        throw GeometryError("slerp: inputs are nearly antipodal");
    }
    const double theta = std::acos(cos_theta);
    const double inv_sin = 1.0 / std::sin(theta);
    const double wa = std::sin(lambda * theta) * inv_sin;
    const double wb = std::sin((1.0 - lambda) * theta) * inv_sin;
    out.values = linear_combine(wa, a.values, wb, b.values);
    return out;
}

LatentState lerp_latent(const LatentState& a, const LatentState& b, double lambda) {
    require_same_shape(a.values, b.values, "lerp_latent");
    if (a.timestep != b.timestep) throw ParameterError("lerp_latent: latents carry different timesteps");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("lerp_latent: lambda must be in [0, 1]");
    LatentState out;
    out.timestep = a.timestep;
    out.values = linear_combine(lambda, a.values, 1.0 - lambda, b.values);
    return out;
}

LatentState interpolate_latents(const LatentState& a, const LatentState& b,
                                const InterpolationSpec& spec) {
    return spec.mode == InterpolationMode::spherical ? slerp(a, b, spec.lambda)
                                                     : lerp_latent(a, b, spec.lambda);
}

IdentityEmbedding lerp_embedding(const IdentityEmbedding& c_a, const IdentityEmbedding& c_b,
                                 double lambda) {
    if (c_a.dim() != c_b.dim() || c_a.dim() == 0) {
        throw ParameterError("lerp_embedding: dimension mismatch");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("lerp_embedding: lambda out of [0, 1]");
    IdentityEmbedding out;
    out.values = linear_combine(lambda, c_a.values, 1.0 - lambda, c_b.values);
    out.source_id = c_a.source_id + "*" + c_b.source_id;
    return out;
}

LatentState ddim_invert(const Tensor& image, const IdentityEmbedding& cond,
                        const NoisePredictor& model, const VarianceSchedule& schedule,
                        int num_steps, const LatentCodec& codec) {
    LatentState z = codec.encode(image);
    const std::vector<int> grid = schedule.timestep_grid(num_steps);
    const Conditioning conditioning = Conditioning::one(cond);
    for (int i = 0; i < num_steps; ++i) {
        const int t = grid[static_cast<std::size_t>(i)];
        const int t_next = grid[static_cast<std::size_t>(i + 1)];
        Tensor eps = model.predict(z.values, t, conditioning);
        if (!eps.same_shape(z.values)) throw ModelError("ddim_invert: model output shape mismatch");
        z = ddim_invert_step(z, eps, t, t_next, schedule);
    }
    return z;
}

InvertedPair invert_pair(const Tensor& image_a, const Tensor& image_b,
                         const IdentityEmbedding& c_a, const IdentityEmbedding& c_b,
                         const NoisePredictor& model, const VarianceSchedule& schedule,
                         int num_steps, const LatentCodec& codec) {
    InvertedPair pair;
    pair.z_terminal_a = ddim_invert(image_a, c_a, model, schedule, num_steps, codec);
    pair.z_terminal_b = ddim_invert(image_b, c_b, model, schedule, num_steps, codec);
    pair.inversion_steps = num_steps;
    pair.id_a = c_a.source_id;
    pair.id_b = c_b.source_id;
    return pair;
}

}  // namespace morphlab
