// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "morphlab/attention.hpp"
#include "morphlab/biometrics.hpp"
#include "morphlab/denoiser.hpp"
#include "morphlab/diffusion.hpp"
#include "morphlab/latent_interp.hpp"
#include "morphlab/rng.hpp"
#include "morphlab/schedule.hpp"
#include "morphlab/synthetic.hpp"

namespace {

using namespace morphlab;

DenoiserModel& bench_model() {
    static DenoiserModel model([] {
        DenoiserConfig c;
        c.latent_size = 32;
        c.base_channels = 16;
        c.cond_dim = 64;
        c.time_dim = 64;
        c.init_seed = 1;
        return c;
    }());
    return model;
}

void BM_BuildSchedule(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_schedule(1000, 1e-4, 0.02, ScheduleKind::linear));
    }
}
BENCHMARK(BM_BuildSchedule);

void BM_DdimStep(benchmark::State& state) {
    VarianceSchedule s = build_schedule(1000, 1e-4, 0.02, ScheduleKind::linear);
    Rng rng(1);
    LatentState z{1000, rng.gaussian_tensor({1, 32, 32})};
    Tensor eps = rng.gaussian_tensor({1, 32, 32});
    for (auto _ : state) {
        benchmark::DoNotOptimize(ddim_step(z, eps, 1000, 980, s));
    }
}
BENCHMARK(BM_DdimStep);

void BM_Slerp(benchmark::State& state) {
    Rng rng(2);
    LatentState a{0, rng.gaussian_tensor({1, 32, 32})};
    LatentState b{0, rng.gaussian_tensor({1, 32, 32})};
    for (auto _ : state) {
        benchmark::DoNotOptimize(slerp(a, b, 0.5));
    }
}
BENCHMARK(BM_Slerp);

void BM_CrossAttention(benchmark::State& state) {
    Rng rng(3);
    CrossAttentionParams p = CrossAttentionParams::create(64, 64, 64, 1, rng);
    Tensor f = rng.gaussian_tensor({256, 64});
    IdentityEmbedding c{rng.gaussian_tensor({64}), "x"};
    for (auto _ : state) {
        benchmark::DoNotOptimize(cross_attention(f, c, p));
    }
}
BENCHMARK(BM_CrossAttention);

void BM_DenoiserForward(benchmark::State& state) {
    DenoiserModel& model = bench_model();
    Rng rng(4);
    Tensor z = rng.gaussian_tensor({1, 32, 32});
    IdentityEmbedding c{rng.gaussian_tensor({64}), "x"};
    Conditioning cond = Conditioning::one(c);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.predict(z, 500, cond));
    }
}
BENCHMARK(BM_DenoiserForward);

void BM_DenoiserTrainStep(benchmark::State& state) {
    DenoiserModel& model = bench_model();
    Rng rng(5);
    Tensor z = rng.gaussian_tensor({1, 32, 32});
    IdentityEmbedding c{rng.gaussian_tensor({64}), "x"};
    Conditioning cond = Conditioning::one(c);
    Tensor d_out = rng.gaussian_tensor({1, 32, 32});
    for (auto _ : state) {
        DenoiserCache cache;
        Tensor out = model.forward_train(z, 500, cond, cache);
        benchmark::DoNotOptimize(model.backward(cache, d_out));
        model.params().zero_grads();
    }
}
BENCHMARK(BM_DenoiserTrainStep);

void BM_RenderFace(benchmark::State& state) {
    Rng rng(6);
    std::vector<float> params(static_cast<std::size_t>(kIdParamCount));
    for (auto& p : params) p = static_cast<float>(rng.uniform());
    SampleJitter jitter;
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_face(params, jitter, 32));
    }
}
BENCHMARK(BM_RenderFace);

void BM_DetectionMetrics(benchmark::State& state) {
    Rng rng(7);
    std::vector<float> bona, attack;
    for (int i = 0; i < 500; ++i) {
        bona.push_back(static_cast<float>(rng.uniform()));
        attack.push_back(static_cast<float>(rng.uniform()));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(compute_detection_metrics(bona, attack));
    }
}
BENCHMARK(BM_DetectionMetrics);

}  // namespace

BENCHMARK_MAIN();
