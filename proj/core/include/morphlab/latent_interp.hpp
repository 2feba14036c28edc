// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "morphlab/codec.hpp"
#include "morphlab/diffusion.hpp"
#include "morphlab/identity.hpp"

namespace morphlab {

// Terminal latents of both sources after DDIM inversion.
struct InvertedPair {
    LatentState z_terminal_a;
    LatentState z_terminal_b;
    int inversion_steps = 0;
    std::string id_a;
    std::string id_b;
};

enum class InterpolationMode { spherical, linear };

struct InterpolationSpec {
    double lambda = 0.5;  // weight of the first anchor
    InterpolationMode mode = InterpolationMode::spherical;
};

// Spherical interpolation over the flattened latents with a single global
// angle; lambda is the weight of `a`. Falls back to linear interpolation
// inside the parallel guard band and refuses near-antipodal inputs.
LatentState slerp(const LatentState& a, const LatentState& b, double lambda);

// lambda * a + (1 - lambda) * b over the latent values.
LatentState lerp_latent(const LatentState& a, const LatentState& b, double lambda);

// Mode dispatch over the two latent interpolants.
LatentState interpolate_latents(const LatentState& a, const LatentState& b,
                                const InterpolationSpec& spec);

// lambda * c_a + (1 - lambda) * c_b.
IdentityEmbedding lerp_embedding(const IdentityEmbedding& c_a, const IdentityEmbedding& c_b,
                                 double lambda);

// Encodes the image and walks the deterministic DDIM update forward in time
// (guidance disabled, self-conditioned) to the terminal timestep.
LatentState ddim_invert(const Tensor& image, const IdentityEmbedding& cond,
                        const NoisePredictor& model, const VarianceSchedule& schedule,
                        int num_steps, const LatentCodec& codec);

InvertedPair invert_pair(const Tensor& image_a, const Tensor& image_b,
                         const IdentityEmbedding& c_a, const IdentityEmbedding& c_b,
                         const NoisePredictor& model, const VarianceSchedule& schedule,
                         int num_steps, const LatentCodec& codec);

}  // namespace morphlab
