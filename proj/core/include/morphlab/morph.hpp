// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "morphlab/biometrics.hpp"
#include "morphlab/codec.hpp"
#include "morphlab/diffusion.hpp"
#include "morphlab/latent_interp.hpp"
#include "morphlab/synthetic.hpp"

namespace morphlab {

enum class MorphVariant { embedding_interp, cross_attention_interp, embedding_plus_ddim, dcmorph };

std::string to_string(MorphVariant v);
MorphVariant morph_variant_from_string(const std::string& s);
const std::vector<MorphVariant>& all_morph_variants();

struct MorphConfig {
    double lambda = 0.5;  // weight of source A in both streams
    double omega = 1.0;
    bool guidance_enabled = true;
    int num_inference_steps = 50;
    MorphVariant variant = MorphVariant::dcmorph;
    std::uint64_t seed = 0;
};

struct MorphSources {
    Tensor image_a;
    Tensor image_b;
    IdentityEmbedding c_a;  // source_id = identity string
    IdentityEmbedding c_b;
    std::string src_image_a;  // image ids, recorded for probe exclusion
    std::string src_image_b;
};

struct MorphResult {
    Tensor image;
    MorphConfig config;
    std::string id_a;
    std::string id_b;
    std::string src_image_a;
    std::string src_image_b;
    std::string morph_id;
    std::uint64_t initial_latent_hash = 0;
};

// Noise-seeded terminal latent derived from the unordered source pair and the
// run seed, making source-swap symmetry exact.
LatentState seeded_terminal_latent(const std::vector<int>& shape, int timestep_terminal,
                                   std::uint64_t run_seed, const std::string& id_a,
                                   const std::string& id_b);

// Single-identity generation from an explicit terminal latent (the lambda
// endpoint of every noise-seeded variant).
Tensor generate_single(const NoisePredictor& model, const IdentityEmbedding& c,
                       const LatentState& z_terminal, const LatentCodec& codec,
                       const VarianceSchedule& schedule, const MorphConfig& config);

// Table-row variants. Each checks config.variant and derives conditioning and
// the initial latent as follows:
//   embedding_interp:       seeded noise,     single lerped embedding
//   cross_attention_interp: seeded noise,     decoupled dual attention
//   embedding_plus_ddim:    slerped inversion, single lerped embedding
//   dcmorph:                slerped inversion, decoupled dual attention
MorphResult morph_embedding_interp(const MorphSources& sources, const NoisePredictor& model,
                                   const LatentCodec& codec, const VarianceSchedule& schedule,
                                   const MorphConfig& config);
MorphResult morph_cross_attention(const MorphSources& sources, const NoisePredictor& model,
                                  const LatentCodec& codec, const VarianceSchedule& schedule,
                                  const MorphConfig& config);
MorphResult morph_embedding_ddim(const MorphSources& sources, const NoisePredictor& model,
                                 const LatentCodec& codec, const VarianceSchedule& schedule,
                                 const MorphConfig& config,
                                 const InvertedPair* cached_inversion = nullptr);
MorphResult morph_dcmorph(const MorphSources& sources, const NoisePredictor& model,
                          const LatentCodec& codec, const VarianceSchedule& schedule,
                          const MorphConfig& config, const InvertedPair* cached_inversion = nullptr);

MorphResult run_morph(const MorphSources& sources, const NoisePredictor& model,
                      const LatentCodec& codec, const VarianceSchedule& schedule,
                      const MorphConfig& config, const InvertedPair* cached_inversion = nullptr);

// Optional image preprocessing applied to each source before embedding and
// inversion; the toy pipeline leaves it empty (no alignment or cropping).
using ImagePreprocessor = std::function<Tensor(const Tensor&)>;

// Source images are each identity's first eval-split sample.
MorphSources make_morph_sources(const ToyDataset& dataset, const MorphPair& pair,
                                const IdentityEmbedder& cond_embedder,
                                const ImagePreprocessor& preprocess = {});

using InversionCache = std::map<std::string, LatentState>;  // image id -> terminal latent

// Inverts every source image of `pairs` once (parallel across images).
InversionCache precompute_inversions(const std::vector<MorphPair>& pairs,
                                     const ToyDataset& dataset,
                                     const IdentityEmbedder& cond_embedder,
                                     const NoisePredictor& model, const LatentCodec& codec,
                                     const VarianceSchedule& schedule, int num_steps, int threads);

// All variants over the same pair list under one run seed; deterministic
// regardless of thread count.
std::vector<MorphEntry> generate_morph_set(const std::vector<MorphPair>& pairs,
                                           const std::vector<MorphVariant>& variants,
                                           const MorphConfig& base_config, std::uint64_t seed,
                                           const ToyDataset& dataset,
                                           const IdentityEmbedder& cond_embedder,
                                           const NoisePredictor& model, const LatentCodec& codec,
                                           const VarianceSchedule& schedule,
                                           InversionCache* inversions, int threads,
                                           std::vector<MorphResult>* results = nullptr);

struct AblationConfig {
    std::vector<MorphVariant> variants = all_morph_variants();
    MorphConfig base;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<double> fmr_targets = {0.01, 0.001};
    int threads = 0;  // 0 = hardware concurrency
};

struct AblationRun {
    std::uint64_t seed = 0;
    std::vector<MorphEntry> morphs;
    VulnerabilityReport report;
};

struct AblationResult {
    std::vector<AblationRun> runs;
};

// The full table experiment: generate every variant over the same pairs and
// seeds, then score against the held-out embedders.
AblationResult run_ablation(const std::vector<MorphPair>& pairs, const ToyDataset& dataset,
                            const IdentityEmbedder& cond_embedder,
                            const std::vector<const IdentityEmbedder*>& eval_embedders,
                            const NoisePredictor& model, const LatentCodec& codec,
                            const VarianceSchedule& schedule, const AblationConfig& config);

}  // namespace morphlab
