// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/morph.hpp"

#include <algorithm>
#include <functional>
#include <thread>

#include "morphlab/errors.hpp"
#include "morphlab/rng.hpp"

namespace morphlab {

std::string to_string(MorphVariant v) {
    switch (v) {
        case MorphVariant::embedding_interp: return "embedding_interp";
        case MorphVariant::cross_attention_interp: return "cross_attention_interp";
        case MorphVariant::embedding_plus_ddim: return "embedding_plus_ddim";
        case MorphVariant::dcmorph: return "dcmorph";
    }
    throw ParameterError("unknown morph variant");
}

MorphVariant morph_variant_from_string(const std::string& s) {
    for (MorphVariant v : all_morph_variants()) {
        if (to_string(v) == s) return v;
    }
    throw ParameterError("unknown morph variant: " + s);
}

const std::vector<MorphVariant>& all_morph_variants() {
    static const std::vector<MorphVariant> kAll = {
        MorphVariant::embedding_interp, MorphVariant::cross_attention_interp,
        MorphVariant::embedding_plus_ddim, MorphVariant::dcmorph};
    return kAll;
}

LatentState seeded_terminal_latent(const std::vector<int>& shape, int timestep_terminal,
                                   std::uint64_t run_seed, const std::string& id_a,
                                   const std::string& id_b) {
    Rng rng(pair_seed(run_seed, id_a, id_b));
    LatentState z;
    z.timestep = timestep_terminal;
    z.values = rng.gaussian_tensor(shape);
    return z;
}

namespace {

void validate_morph_inputs(const MorphSources& sources, const MorphConfig& config) {
    if (!(config.lambda >= 0.0 && config.lambda <= 1.0)) {
        throw ParameterError("morph: lambda must be in [0, 1]");
    }
    if (config.omega < 0.0) throw ParameterError("morph: omega must be >= 0");
    if (config.num_inference_steps < 1) throw ParameterError("morph: need >= 1 inference step");
    require_same_shape(sources.image_a, sources.image_b, "morph sources");
}

std::string make_morph_id(const MorphSources& s, const MorphConfig& c) {
    return to_string(c.variant) + "__" + s.c_a.source_id + "+" + s.c_b.source_id + "__s" +
           std::to_string(c.seed);
}

MorphResult finish(const MorphSources& sources, const MorphConfig& config,
                   const LatentState& z_terminal, const NoisePredictor& model,
                   const LatentCodec& codec, const VarianceSchedule& schedule,
                   const Conditioning& cond) {
    GuidanceConfig guidance{config.omega, config.guidance_enabled};
    LatentState z0 = sample(z_terminal, model, cond, guidance, schedule,
                            config.num_inference_steps);
    MorphResult result;
    result.image = codec.decode(z0);
    result.config = config;
    result.id_a = sources.c_a.source_id;
    result.id_b = sources.c_b.source_id;
    result.src_image_a = sources.src_image_a;
    result.src_image_b = sources.src_image_b;
    result.morph_id = make_morph_id(sources, config);
    result.initial_latent_hash =
        fnv1a_bytes(z_terminal.values.data(), z_terminal.values.size() * sizeof(float));
    return result;
}

LatentState slerped_initial_latent(const MorphSources& sources, const NoisePredictor& model,
                                   const LatentCodec& codec, const VarianceSchedule& schedule,
                                   const MorphConfig& config, const InvertedPair* cached) {
    if (cached) {
        if (!cached->z_terminal_a.values.same_shape(cached->z_terminal_b.values)) {
            throw ParameterError("morph: cached inversion shape mismatch");
        }
        return slerp(cached->z_terminal_a, cached->z_terminal_b, config.lambda);
    }
    InvertedPair inv = invert_pair(sources.image_a, sources.image_b, sources.c_a, sources.c_b,
                                   model, schedule, config.num_inference_steps, codec);
    return slerp(inv.z_terminal_a, inv.z_terminal_b, config.lambda);
}

}  // namespace

Tensor generate_single(const NoisePredictor& model, const IdentityEmbedding& c,
                       const LatentState& z_terminal, const LatentCodec& codec,
                       const VarianceSchedule& schedule, const MorphConfig& config) {
    GuidanceConfig guidance{config.omega, config.guidance_enabled};
    LatentState z0 = sample(z_terminal, model, Conditioning::one(c), guidance, schedule,
                            config.num_inference_steps);
    return codec.decode(z0);
}

MorphResult morph_embedding_interp(const MorphSources& sources, const NoisePredictor& model,
                                   const LatentCodec& codec, const VarianceSchedule& schedule,
                                   const MorphConfig& config) {
    if (config.variant != MorphVariant::embedding_interp) {
        throw ParameterError("morph_embedding_interp: wrong variant in config");
    }
    validate_morph_inputs(sources, config);
    LatentState z_terminal =
        seeded_terminal_latent(model.latent_shape(), schedule.num_steps(), config.seed,
                               sources.c_a.source_id, sources.c_b.source_id);
    Conditioning cond =
        Conditioning::one(lerp_embedding(sources.c_a, sources.c_b, config.lambda));
    return finish(sources, config, z_terminal, model, codec, schedule, cond);
}

MorphResult morph_cross_attention(const MorphSources& sources, const NoisePredictor& model,
                                  const LatentCodec& codec, const VarianceSchedule& schedule,
                                  const MorphConfig& config) {
    if (config.variant != MorphVariant::cross_attention_interp) {
        throw ParameterError("morph_cross_attention: wrong variant in config");
    }
    validate_morph_inputs(sources, config);
    LatentState z_terminal =
        seeded_terminal_latent(model.latent_shape(), schedule.num_steps(), config.seed,
                               sources.c_a.source_id, sources.c_b.source_id);
    Conditioning cond = Conditioning::pair(sources.c_a, sources.c_b, config.lambda);
    return finish(sources, config, z_terminal, model, codec, schedule, cond);
}

MorphResult morph_embedding_ddim(const MorphSources& sources, const NoisePredictor& model,
                                 const LatentCodec& codec, const VarianceSchedule& schedule,
                                 const MorphConfig& config, const InvertedPair* cached_inversion) {
    if (config.variant != MorphVariant::embedding_plus_ddim) {
        throw ParameterError("morph_embedding_ddim: wrong variant in config");
    }
    validate_morph_inputs(sources, config);
    LatentState z_terminal =
        slerped_initial_latent(sources, model, codec, schedule, config, cached_inversion);
    Conditioning cond =
        Conditioning::one(lerp_embedding(sources.c_a, sources.c_b, config.lambda));
    return finish(sources, config, z_terminal, model, codec, schedule, cond);
}

MorphResult morph_dcmorph(const MorphSources& sources, const NoisePredictor& model,
                          const LatentCodec& codec, const VarianceSchedule& schedule,
                          const MorphConfig& config, const InvertedPair* cached_inversion) {
    if (config.variant != MorphVariant::dcmorph) {
        throw ParameterError("morph_dcmorph: wrong variant in config");
    }
    validate_morph_inputs(sources, config);
    LatentState z_terminal =
        slerped_initial_latent(sources, model, codec, schedule, config, cached_inversion);
    Conditioning cond = Conditioning::pair(sources.c_a, sources.c_b, config.lambda);
    return finish(sources, config, z_terminal, model, codec, schedule, cond);
}

MorphResult run_morph(const MorphSources& sources, const NoisePredictor& model,
                      const LatentCodec& codec, const VarianceSchedule& schedule,
                      const MorphConfig& config, const InvertedPair* cached_inversion) {
    switch (config.variant) {
        case MorphVariant::embedding_interp:
            return morph_embedding_interp(sources, model, codec, schedule, config);
        case MorphVariant::cross_attention_interp:
            return morph_cross_attention(sources, model, codec, schedule, config);
        case MorphVariant::embedding_plus_ddim:
            return morph_embedding_ddim(sources, model, codec, schedule, config, cached_inversion);
        case MorphVariant::dcmorph:
            return morph_dcmorph(sources, model, codec, schedule, config, cached_inversion);
    }
    throw ParameterError("run_morph: unknown variant");
}

MorphSources make_morph_sources(const ToyDataset& dataset, const MorphPair& pair,
                                const IdentityEmbedder& cond_embedder,
                                const ImagePreprocessor& preprocess) {
    auto find_source = [&](const std::string& id_string) -> const ToyImage& {
        for (const auto& ident : dataset.identities) {
            if (ident.id_string() != id_string) continue;
            const std::vector<int> indices = dataset.image_indices_of(ident.label);
            if (indices.empty()) throw DataError("make_morph_sources: identity has no images");
            return dataset.images[static_cast<std::size_t>(indices.front())];
        }
        throw DataError("make_morph_sources: unknown identity " + id_string);
    };

    const ToyImage& img_a = find_source(pair.id_a);
    const ToyImage& img_b = find_source(pair.id_b);

    MorphSources s;
    s.image_a = preprocess ? preprocess(img_a.pixels) : img_a.pixels;
    s.image_b = preprocess ? preprocess(img_b.pixels) : img_b.pixels;
    s.c_a = cond_embedder.embed(s.image_a);
    s.c_a.source_id = pair.id_a;
    s.c_b = cond_embedder.embed(s.image_b);
    s.c_b.source_id = pair.id_b;
    s.src_image_a = img_a.image_id;
    s.src_image_b = img_b.image_id;
    return s;
}

namespace {

int resolve_threads(int requested, std::size_t tasks) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    return std::min<int>(n, static_cast<int>(tasks ? tasks : 1));
}

// Index-sliced parallel loop; each task writes only its own slots.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = static_cast<std::size_t>(w); i < count;
                 i += static_cast<std::size_t>(threads)) {
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

InversionCache precompute_inversions(const std::vector<MorphPair>& pairs,
                                     const ToyDataset& dataset,
                                     const IdentityEmbedder& cond_embedder,
                                     const NoisePredictor& model, const LatentCodec& codec,
                                     const VarianceSchedule& schedule, int num_steps, int threads) {
    // deduplicate source images over all pairs
    struct Item {
        std::string image_id;
        Tensor image;
        IdentityEmbedding cond;
    };
    std::vector<Item> items;
    auto add = [&items](const std::string& id, const Tensor& img, const IdentityEmbedding& c) {
        for (const auto& it : items) {
            if (it.image_id == id) return;
        }
        items.push_back(Item{id, img, c});
    };
    for (const auto& pair : pairs) {
        MorphSources s = make_morph_sources(dataset, pair, cond_embedder);
        add(s.src_image_a, s.image_a, s.c_a);
        add(s.src_image_b, s.image_b, s.c_b);
    }

    std::vector<LatentState> latents(items.size());
    parallel_for(items.size(), resolve_threads(threads, items.size()), [&](std::size_t i) {
        latents[i] = ddim_invert(items[i].image, items[i].cond, model, schedule, num_steps, codec);
    });

    InversionCache cache;
    for (std::size_t i = 0; i < items.size(); ++i) cache[items[i].image_id] = std::move(latents[i]);
    return cache;
}

std::vector<MorphEntry> generate_morph_set(const std::vector<MorphPair>& pairs,
                                           const std::vector<MorphVariant>& variants,
                                           const MorphConfig& base_config, std::uint64_t seed,
                                           const ToyDataset& dataset,
                                           const IdentityEmbedder& cond_embedder,
                                           const NoisePredictor& model, const LatentCodec& codec,
                                           const VarianceSchedule& schedule,
                                           InversionCache* inversions, int threads,
                                           std::vector<MorphResult>* results) {
    const bool needs_inversion =
        std::any_of(variants.begin(), variants.end(), [](MorphVariant v) {
            return v == MorphVariant::embedding_plus_ddim || v == MorphVariant::dcmorph;
        });
    InversionCache local;
    if (needs_inversion && !inversions) {
        local = precompute_inversions(pairs, dataset, cond_embedder, model, codec, schedule,
                                      base_config.num_inference_steps, threads);
        inversions = &local;
    }

    struct Task {
        MorphPair pair;
        MorphVariant variant;
    };
    std::vector<Task> tasks;
    for (const auto& pair : pairs) {
        for (MorphVariant v : variants) tasks.push_back({pair, v});
    }

    std::vector<MorphResult> generated(tasks.size());
    parallel_for(tasks.size(), resolve_threads(threads, tasks.size()), [&](std::size_t i) {
        const Task& task = tasks[i];
        MorphSources s = make_morph_sources(dataset, task.pair, cond_embedder);
        MorphConfig cfg = base_config;
        cfg.variant = task.variant;
        cfg.seed = seed;

        const InvertedPair* cached = nullptr;
        InvertedPair inv;
        if (task.variant == MorphVariant::embedding_plus_ddim ||
            task.variant == MorphVariant::dcmorph) {
            auto ia = inversions->find(s.src_image_a);
            auto ib = inversions->find(s.src_image_b);
            if (ia == inversions->end() || ib == inversions->end()) {
                throw DataError("generate_morph_set: missing cached inversion");
            }
            inv.z_terminal_a = ia->second;
            inv.z_terminal_b = ib->second;
            inv.inversion_steps = cfg.num_inference_steps;
            inv.id_a = s.c_a.source_id;
            inv.id_b = s.c_b.source_id;
            cached = &inv;
        }
        generated[i] = run_morph(s, model, codec, schedule, cfg, cached);
    });

    std::vector<MorphEntry> entries;
    entries.reserve(generated.size());
    for (const auto& r : generated) {
        MorphEntry e;
        e.morph_id = r.morph_id;
        e.variant = to_string(r.config.variant);
        e.id_a = r.id_a;
        e.id_b = r.id_b;
        e.src_image_a = r.src_image_a;
        e.src_image_b = r.src_image_b;
        e.image = r.image;
        entries.push_back(std::move(e));
    }
    if (results) *results = std::move(generated);
    return entries;
}

AblationResult run_ablation(const std::vector<MorphPair>& pairs, const ToyDataset& dataset,
                            const IdentityEmbedder& cond_embedder,
                            const std::vector<const IdentityEmbedder*>& eval_embedders,
                            const NoisePredictor& model, const LatentCodec& codec,
                            const VarianceSchedule& schedule, const AblationConfig& config) {
    if (eval_embedders.empty()) {
        throw ParameterError("run_ablation: need at least one evaluation embedder");
    }
    for (const IdentityEmbedder* e : eval_embedders) {
        if (e->name() == cond_embedder.name()) {
            throw ParameterError("run_ablation: evaluation embedders must be held out");
        }
    }

    InversionCache inversions =
        precompute_inversions(pairs, dataset, cond_embedder, model, codec, schedule,
                              config.base.num_inference_steps, config.threads);

    AblationResult result;
    for (std::uint64_t seed : config.seeds) {
        AblationRun run;
        run.seed = seed;
        run.morphs = generate_morph_set(pairs, config.variants, config.base, seed, dataset,
                                        cond_embedder, model, codec, schedule, &inversions,
                                        config.threads);
        run.report =
            build_vulnerability_report(run.morphs, eval_embedders, dataset, config.fmr_targets);
        result.runs.push_back(std::move(run));
    }
    return result;
}

}  // namespace morphlab
