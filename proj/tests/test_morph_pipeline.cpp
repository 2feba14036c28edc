// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "morphlab/denoiser.hpp"
#include "morphlab/embedder.hpp"
#include "morphlab/errors.hpp"
#include "morphlab/io.hpp"
#include "morphlab/morph.hpp"
#include "morphlab/rng.hpp"
#include "test_helpers.hpp"

using namespace morphlab;
using morphlab::test::rel_diff;

TEST_SUITE_BEGIN("morph_pipeline");

namespace {

// Shared fixture: an untrained but non-degenerate denoiser (the output conv
// is re-randomized so predictions depend on input and conditioning), plus a
// random-init embedder. All pipeline algebra holds for any parameter values.
struct Fixture {
    ToyDataset ds;
    DenoiserModel model;
    ToyEmbedder embedder;
    VarianceSchedule schedule;
    IdentityCodec codec;
    MorphSources sources;

    static DatasetConfig data_config() {
        DatasetConfig c;
        c.n_identities = 8;
        c.samples_per_identity = 3;
        c.image_size = 16;
        c.eval_fraction = 0.5;
        c.seed = 55;
        return c;
    }

    static DenoiserConfig model_config() {
        DenoiserConfig c;
        c.latent_size = 16;
        c.base_channels = 4;
        c.num_down = 2;
        c.cond_dim = 12;
        c.time_dim = 16;
        c.init_seed = 5;
        return c;
    }

    static EmbedderConfig embedder_config() {
        EmbedderConfig c;
        c.name = "stub";
        c.width = 8;
        c.embed_dim = 12;
        c.image_size = 16;
        c.init_seed = 9;
        return c;
    }

    Fixture()
        : ds(generate_dataset(data_config())),
          model(model_config()),
          embedder(embedder_config()),
          schedule(build_schedule(60, 1e-3, 0.04, ScheduleKind::linear)) {
        Rng rng(1234);
        auto out_w = model.params().find("out.weight");
        auto out_b = model.params().find("out.bias");
        for (std::size_t i = 0; i < out_w->value.size(); ++i) {
            out_w->value[i] = static_cast<float>(rng.gaussian() * 0.05);
        }
        for (std::size_t i = 0; i < out_b->value.size(); ++i) {
            out_b->value[i] = static_cast<float>(rng.gaussian() * 0.01);
        }
        MorphPair pair;
        pair.id_a = "id004";
        pair.id_b = "id006";
        sources = make_morph_sources(ds, pair, embedder);
    }

    MorphConfig config(MorphVariant v, double lambda = 0.5, std::uint64_t seed = 3) const {
        MorphConfig c;
        c.variant = v;
        c.lambda = lambda;
        c.seed = seed;
        c.omega = 1.0;
        c.guidance_enabled = true;
        c.num_inference_steps = 6;
        return c;
    }
};

}  // namespace

TEST_CASE("variant names round trip") {
    for (MorphVariant v : all_morph_variants()) {
        CHECK(morph_variant_from_string(to_string(v)) == v);
    }
    CHECK_THROWS_AS(morph_variant_from_string("nope"), ParameterError);
}

TEST_CASE("noise-seeded variants reduce to single-identity generation at lambda=1") {
    Fixture fx;

    for (MorphVariant v : {MorphVariant::embedding_interp, MorphVariant::cross_attention_interp}) {
        CAPTURE(to_string(v));
        MorphConfig cfg = fx.config(v, 1.0);
        MorphResult morph = run_morph(fx.sources, fx.model, fx.codec, fx.schedule, cfg);

        LatentState z_terminal = seeded_terminal_latent(fx.model.latent_shape(),
                                                        fx.schedule.num_steps(), cfg.seed,
                                                        fx.sources.c_a.source_id,
                                                        fx.sources.c_b.source_id);
        Tensor single = generate_single(fx.model, fx.sources.c_a, z_terminal, fx.codec,
                                        fx.schedule, cfg);
        CHECK(max_abs_diff(morph.image, single) == 0.0);
    }
}

TEST_CASE("equal sources collapse the dual path to single conditioning") {
    Fixture fx;
    MorphSources same = fx.sources;
    same.c_b = same.c_a;
    same.image_b = same.image_a;
    same.src_image_b = same.src_image_a;

    MorphConfig cfg = fx.config(MorphVariant::cross_attention_interp, 0.5);
    MorphResult morph = morph_cross_attention(same, fx.model, fx.codec, fx.schedule, cfg);

    LatentState z_terminal = seeded_terminal_latent(fx.model.latent_shape(), fx.schedule.num_steps(),
                                                    cfg.seed, same.c_a.source_id, same.c_b.source_id);
    Tensor single = generate_single(fx.model, same.c_a, z_terminal, fx.codec, fx.schedule, cfg);
    CHECK(rel_diff(morph.image, single) < 1e-6);
}

TEST_CASE("morphs are deterministic given the config") {
    Fixture fx;
    for (MorphVariant v : all_morph_variants()) {
        CAPTURE(to_string(v));
        MorphConfig cfg = fx.config(v);
        MorphResult a = run_morph(fx.sources, fx.model, fx.codec, fx.schedule, cfg);
        MorphResult b = run_morph(fx.sources, fx.model, fx.codec, fx.schedule, cfg);
        CHECK(max_abs_diff(a.image, b.image) == 0.0);
        CHECK(a.initial_latent_hash == b.initial_latent_hash);
        CHECK(a.morph_id == b.morph_id);
    }
}

TEST_CASE("swapping sources with lambda -> 1-lambda is exact for every variant") {
    Fixture fx;
    MorphSources swapped;
    swapped.image_a = fx.sources.image_b;
    swapped.image_b = fx.sources.image_a;
    swapped.c_a = fx.sources.c_b;
    swapped.c_b = fx.sources.c_a;
    swapped.src_image_a = fx.sources.src_image_b;
    swapped.src_image_b = fx.sources.src_image_a;

    // dyadic lambda so 1-lambda is exact in floating point
    const double lambda = 0.25;
    for (MorphVariant v : all_morph_variants()) {
        CAPTURE(to_string(v));
        MorphResult fwd = run_morph(fx.sources, fx.model, fx.codec, fx.schedule, fx.config(v, lambda));
        MorphResult rev = run_morph(swapped, fx.model, fx.codec, fx.schedule, fx.config(v, 1.0 - lambda));
        CHECK(max_abs_diff(fwd.image, rev.image) == 0.0);
    }
}

TEST_CASE("inversion-seeded variants equal their primitive composition") {
    Fixture fx;
    MorphConfig cfg = fx.config(MorphVariant::dcmorph);
    InvertedPair inv = invert_pair(fx.sources.image_a, fx.sources.image_b, fx.sources.c_a,
                                   fx.sources.c_b, fx.model, fx.schedule,
                                   cfg.num_inference_steps, fx.codec);

    // dcmorph == slerp + dual-conditioned sampling
    MorphResult dc = morph_dcmorph(fx.sources, fx.model, fx.codec, fx.schedule, cfg);
    LatentState z_m = slerp(inv.z_terminal_a, inv.z_terminal_b, cfg.lambda);
    GuidanceConfig guidance{cfg.omega, cfg.guidance_enabled};
    LatentState z0 = sample(z_m, fx.model,
                            Conditioning::pair(fx.sources.c_a, fx.sources.c_b, cfg.lambda),
                            guidance, fx.schedule, cfg.num_inference_steps);
    CHECK(max_abs_diff(dc.image, fx.codec.decode(z0)) == 0.0);

    // embedding_plus_ddim == slerp + single lerped-embedding sampling
    MorphConfig cfg2 = fx.config(MorphVariant::embedding_plus_ddim);
    MorphResult ed = morph_embedding_ddim(fx.sources, fx.model, fx.codec, fx.schedule, cfg2);
    LatentState z0e = sample(z_m, fx.model,
                             Conditioning::one(lerp_embedding(fx.sources.c_a, fx.sources.c_b,
                                                              cfg2.lambda)),
                             guidance, fx.schedule, cfg2.num_inference_steps);
    CHECK(max_abs_diff(ed.image, fx.codec.decode(z0e)) == 0.0);

    // cached inversions take the same path
    MorphResult cached = morph_dcmorph(fx.sources, fx.model, fx.codec, fx.schedule, cfg, &inv);
    CHECK(max_abs_diff(cached.image, dc.image) == 0.0);
}

TEST_CASE("disabling the latent stream reproduces the noise-seeded variant") {
    Fixture fx;
    MorphConfig cfg = fx.config(MorphVariant::cross_attention_interp);
    MorphResult noise_seeded = morph_cross_attention(fx.sources, fx.model, fx.codec, fx.schedule, cfg);

    // dcmorph with its slerp output replaced by the seeded gaussian is exactly
    // the cross-attention variant
    LatentState z_noise = seeded_terminal_latent(fx.model.latent_shape(), fx.schedule.num_steps(),
                                                 cfg.seed, fx.sources.c_a.source_id,
                                                 fx.sources.c_b.source_id);
    GuidanceConfig guidance{cfg.omega, cfg.guidance_enabled};
    LatentState z0 = sample(z_noise, fx.model,
                            Conditioning::pair(fx.sources.c_a, fx.sources.c_b, cfg.lambda),
                            guidance, fx.schedule, cfg.num_inference_steps);
    CHECK(max_abs_diff(noise_seeded.image, fx.codec.decode(z0)) == 0.0);
}

TEST_CASE("dual attention interpolation matches an elementwise-mean mixer at lambda 0.5") {
    Fixture fx;
    MorphConfig cfg = fx.config(MorphVariant::cross_attention_interp, 0.5);
    MorphResult base = morph_cross_attention(fx.sources, fx.model, fx.codec, fx.schedule, cfg);

    DenoiserModel hooked(Fixture::model_config());
    // copy the fixture's parameters (including its re-randomized output conv)
    for (std::size_t i = 0; i < hooked.params().all().size(); ++i) {
        hooked.params().all()[i]->value = fx.model.params().all()[i]->value;
    }
    hooked.set_attention_mixer([](const Tensor& a, const Tensor& b, double lambda) {
        REQUIRE(lambda == 0.5);
        Tensor out(a.shape());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] + b[i]) * 0.5f;
        return out;
    });
    MorphResult mixed = morph_cross_attention(fx.sources, hooked, fx.codec, fx.schedule, cfg);
    CHECK(max_abs_diff(base.image, mixed.image) == 0.0);
}

TEST_CASE("degenerate pair reproduces the inversion reconstruction") {
    Fixture fx;
    MorphSources same = fx.sources;
    same.c_b = same.c_a;
    same.image_b = same.image_a;
    same.src_image_b = same.src_image_a;

    MorphConfig cfg = fx.config(MorphVariant::dcmorph);
    MorphResult morph = morph_dcmorph(same, fx.model, fx.codec, fx.schedule, cfg);

    LatentState z_inv = ddim_invert(same.image_a, same.c_a, fx.model, fx.schedule,
                                    cfg.num_inference_steps, fx.codec);
    GuidanceConfig guidance{cfg.omega, cfg.guidance_enabled};
    LatentState z0 = sample(z_inv, fx.model, Conditioning::one(same.c_a), guidance, fx.schedule,
                            cfg.num_inference_steps);
    CHECK(rel_diff(morph.image, fx.codec.decode(z0)) < 1e-5);
}

TEST_CASE("lambda=1 of the inversion-seeded variants is the source-A reconstruction") {
    Fixture fx;
    for (MorphVariant v : {MorphVariant::embedding_plus_ddim, MorphVariant::dcmorph}) {
        CAPTURE(to_string(v));
        MorphConfig cfg = fx.config(v, 1.0);
        MorphResult morph = run_morph(fx.sources, fx.model, fx.codec, fx.schedule, cfg);

        LatentState z_inv = ddim_invert(fx.sources.image_a, fx.sources.c_a, fx.model, fx.schedule,
                                        cfg.num_inference_steps, fx.codec);
        GuidanceConfig guidance{cfg.omega, cfg.guidance_enabled};
        LatentState z0 = sample(z_inv, fx.model, Conditioning::one(fx.sources.c_a), guidance,
                                fx.schedule, cfg.num_inference_steps);
        CHECK(rel_diff(morph.image, fx.codec.decode(z0)) < 1e-5);
    }
}

TEST_CASE("variant/config mismatches are rejected") {
    Fixture fx;
    MorphConfig cfg = fx.config(MorphVariant::dcmorph);
    CHECK_THROWS_AS(morph_embedding_interp(fx.sources, fx.model, fx.codec, fx.schedule, cfg),
                    ParameterError);
    cfg.variant = MorphVariant::embedding_interp;
    CHECK_THROWS_AS(morph_dcmorph(fx.sources, fx.model, fx.codec, fx.schedule, cfg), ParameterError);
    cfg.lambda = 1.5;
    CHECK_THROWS_AS(morph_embedding_interp(fx.sources, fx.model, fx.codec, fx.schedule, cfg),
                    ParameterError);
}

TEST_CASE("source preprocessing hook is applied before embedding") {
    Fixture fx;
    MorphPair pair;
    pair.id_a = "id004";
    pair.id_b = "id006";

    int calls = 0;
    MorphSources pre = make_morph_sources(fx.ds, pair, fx.embedder, [&](const Tensor& img) {
        ++calls;
        return scale(img, 0.5);
    });
    CHECK(calls == 2);
    MorphSources plain = make_morph_sources(fx.ds, pair, fx.embedder);
    CHECK(max_abs_diff(pre.image_a, scale(plain.image_a, 0.5)) == 0.0);
    CHECK(max_abs_diff(pre.c_a.values, plain.c_a.values) > 0.0);
}

TEST_CASE("generate_morph_set produces one entry per pair and variant, thread-invariant") {
    Fixture fx;
    std::vector<MorphPair> pairs;
    MorphPair p1;
    p1.id_a = "id004";
    p1.id_b = "id006";
    MorphPair p2;
    p2.id_a = "id005";
    p2.id_b = "id007";
    pairs = {p1, p2};

    MorphConfig base = fx.config(MorphVariant::dcmorph);
    auto serial = generate_morph_set(pairs, all_morph_variants(), base, 11, fx.ds, fx.embedder,
                                     fx.model, fx.codec, fx.schedule, nullptr, 1);
    auto threaded = generate_morph_set(pairs, all_morph_variants(), base, 11, fx.ds, fx.embedder,
                                       fx.model, fx.codec, fx.schedule, nullptr, 2);
    REQUIRE(serial.size() == 8);
    REQUIRE(threaded.size() == 8);
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].morph_id == threaded[i].morph_id);
        CHECK(max_abs_diff(serial[i].image, threaded[i].image) == 0.0);
    }
}

TEST_CASE("run_ablation yields a report per seed over all variants") {
    Fixture fx;
    ToyEmbedder held_out_a(
        [] {
            EmbedderConfig c = Fixture::embedder_config();
            c.name = "held_a";
            c.init_seed = 101;
            return c;
        }());
    ToyEmbedder held_out_b(
        [] {
            EmbedderConfig c = Fixture::embedder_config();
            c.name = "held_b";
            c.init_seed = 102;
            return c;
        }());

    std::vector<MorphPair> pairs;
    MorphPair p;
    p.id_a = "id004";
    p.id_b = "id006";
    pairs = {p};

    AblationConfig cfg;
    cfg.base = fx.config(MorphVariant::dcmorph);
    cfg.seeds = {1, 2};
    cfg.threads = 2;
    cfg.fmr_targets = {0.2};  // reachable with the tiny eval split

    AblationResult result = run_ablation(pairs, fx.ds, fx.embedder,
                                         {&held_out_a, &held_out_b}, fx.model, fx.codec,
                                         fx.schedule, cfg);
    REQUIRE(result.runs.size() == 2);
    for (const auto& run : result.runs) {
        CHECK(run.morphs.size() == 4);
        // 2 embedders x 4 variants
        CHECK(run.report.rows.size() == 8);
        for (const auto& row : run.report.rows) {
            CHECK(row.mmpmr.size() == 1);
            CHECK(row.mmpmr[0] >= 0.0);
            CHECK(row.mmpmr[0] <= 1.0);
        }
    }

    // identical seeds give identical reports
    AblationResult again = run_ablation(pairs, fx.ds, fx.embedder, {&held_out_a, &held_out_b},
                                        fx.model, fx.codec, fx.schedule, cfg);
    for (std::size_t r = 0; r < result.runs.size(); ++r) {
        for (std::size_t i = 0; i < result.runs[r].report.rows.size(); ++i) {
            CHECK(result.runs[r].report.rows[i].mmpmr[0] == again.runs[r].report.rows[i].mmpmr[0]);
        }
    }

    // the conditioning embedder may not double as an evaluation embedder
    CHECK_THROWS_AS(run_ablation(pairs, fx.ds, fx.embedder, {&fx.embedder}, fx.model, fx.codec,
                                 fx.schedule, cfg),
                    ParameterError);
}

TEST_SUITE_END();
