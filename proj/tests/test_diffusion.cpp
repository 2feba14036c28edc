// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "morphlab/diffusion.hpp"
#include "morphlab/errors.hpp"
#include "morphlab/rng.hpp"
#include "test_helpers.hpp"

using namespace morphlab;
using morphlab::test::FunctionModel;
using morphlab::test::rel_diff;
using morphlab::test::wavy_model;
using morphlab::test::zero_model;

TEST_SUITE_BEGIN("diffusion");

namespace {
const std::vector<int> kShape = {1, 4, 4};
}

TEST_CASE("forward_noise identity at t=0") {
    VarianceSchedule s = build_schedule(10, 0.05, 0.2, ScheduleKind::linear);
    Rng rng(3);
    LatentState z0{0, rng.gaussian_tensor(kShape)};
    Tensor eps = rng.gaussian_tensor(kShape);
    LatentState out = forward_noise(z0, 0, eps, s);
    CHECK(out.timestep == 0);
    CHECK(max_abs_diff(out.values, z0.values) == 0.0);
}

TEST_CASE("forward_noise zero-noise case") {
    VarianceSchedule s = build_schedule(10, 0.05, 0.2, ScheduleKind::linear);
    Rng rng(4);
    LatentState z0{0, rng.gaussian_tensor(kShape)};
    Tensor eps(kShape);
    for (int t : {1, 5, 10}) {
        LatentState out = forward_noise(z0, t, eps, s);
        const double c = std::sqrt(s.alpha_bar(t));
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            CHECK(out.values[i] == doctest::Approx(c * z0.values[i]).epsilon(1e-6));
        }
    }
}

TEST_CASE("forward_noise entrywise against scalar arithmetic") {
    // T=2 linear with betas 0.1, 0.2 gives alpha_bar(2) = 0.72
    VarianceSchedule s = build_schedule(2, 0.1, 0.2, ScheduleKind::linear);
    LatentState z0{0, Tensor::full(kShape, 1.0f)};
    Rng rng(5);
    Tensor eps = rng.gaussian_tensor(kShape);
    LatentState out = forward_noise(z0, 2, eps, s);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double expect = std::sqrt(0.72) + std::sqrt(0.28) * eps[i];
        CHECK(out.values[i] == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("forward_noise validation") {
    VarianceSchedule s = build_schedule(4, 0.1, 0.2, ScheduleKind::linear);
    LatentState z0{0, Tensor(kShape)};
    CHECK_THROWS_AS(forward_noise(z0, 5, Tensor(kShape), s), ParameterError);
    CHECK_THROWS_AS(forward_noise(z0, -1, Tensor(kShape), s), ParameterError);
    CHECK_THROWS_AS(forward_noise(z0, 2, Tensor({1, 2, 2}), s), ParameterError);
}

TEST_CASE("cfg endpoint omega=0 returns the conditional output exactly") {
    Rng rng(6);
    for (int rep = 0; rep < 50; ++rep) {
        Tensor c = rng.gaussian_tensor(kShape);
        Tensor u = rng.gaussian_tensor(kShape);
        Tensor out = cfg_combine(c, u, GuidanceConfig{0.0, true});
        CHECK(max_abs_diff(out, c) == 0.0);
        Tensor out2 = cfg_combine(c, u, GuidanceConfig{2.5, false});
        CHECK(max_abs_diff(out2, c) == 0.0);
    }
}

TEST_CASE("cfg scalar substitution") {
    Tensor c = Tensor::full(kShape, 1.0f);
    Tensor u = Tensor::full(kShape, 0.5f);
    Tensor out = cfg_combine(c, u, GuidanceConfig{2.0, true});
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(2.0));
}

TEST_CASE("cfg with equal branches is the identity for any omega") {
    Rng rng(7);
    Tensor c = rng.gaussian_tensor(kShape);
    for (double omega : {0.0, 0.5, 1.0, 3.0, 7.5}) {
        Tensor out = cfg_combine(c, c, GuidanceConfig{omega, true});
        CHECK(rel_diff(out, c) < 1e-6);
    }
    CHECK_THROWS_AS(cfg_combine(c, c, GuidanceConfig{-0.1, true}), ParameterError);
    CHECK_THROWS_AS(cfg_combine(c, Tensor({2, 2}), GuidanceConfig{1.0, true}), ParameterError);
}

TEST_CASE("ddim_step zero prediction scales by the alpha_bar ratio") {
    VarianceSchedule s = build_schedule(8, 0.05, 0.3, ScheduleKind::linear);
    Rng rng(8);
    LatentState z{5, rng.gaussian_tensor(kShape)};
    Tensor eps(kShape);
    LatentState out = ddim_step(z, eps, 5, 2, s);
    const double c = std::sqrt(s.alpha_bar(2) / s.alpha_bar(5));
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        CHECK(out.values[i] == doctest::Approx(c * z.values[i]).epsilon(1e-6));
    }
    CHECK(out.timestep == 2);
}

TEST_CASE("ddim_step matches an independent scalar re-implementation") {
    VarianceSchedule s = build_schedule(4, 0.1, 0.3, ScheduleKind::linear);
    Rng rng(9);
    for (int rep = 0; rep < 20; ++rep) {
        LatentState z{3, rng.gaussian_tensor(kShape)};
        Tensor eps = rng.gaussian_tensor(kShape);
        LatentState out = ddim_step(z, eps, 3, 1, s);
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            // the two-line update, scalar in double
            const double z0_hat =
                (z.values[i] - std::sqrt(1.0 - s.alpha_bar(3)) * eps[i]) / std::sqrt(s.alpha_bar(3));
            const double expect =
                std::sqrt(s.alpha_bar(1)) * z0_hat + std::sqrt(1.0 - s.alpha_bar(1)) * eps[i];
            CHECK(out.values[i] == doctest::Approx(expect).epsilon(1e-5));
        }
    }
}

TEST_CASE("ddim step/invert validation") {
    VarianceSchedule s = build_schedule(4, 0.1, 0.3, ScheduleKind::linear);
    LatentState z{2, Tensor(kShape)};
    Tensor eps(kShape);
    CHECK_THROWS_AS(ddim_step(z, eps, 2, 2, s), ParameterError);
    CHECK_THROWS_AS(ddim_step(z, eps, 2, 3, s), ParameterError);
    CHECK_THROWS_AS(ddim_invert_step(z, eps, 2, 2, s), ParameterError);
    CHECK_THROWS_AS(ddim_invert_step(z, eps, 2, 1, s), ParameterError);
    LatentState wrong{1, Tensor(kShape)};
    CHECK_THROWS_AS(ddim_step(wrong, eps, 2, 1, s), ParameterError);
}

TEST_CASE("ddim inverse pair recovers the input") {
    VarianceSchedule s4 = build_schedule(4, 0.1, 0.3, ScheduleKind::linear);
    Rng rng(10);
    for (int t = 1; t <= 4; ++t) {
        for (int t_prev = 0; t_prev < t; ++t_prev) {
            LatentState z{t, rng.gaussian_tensor(kShape)};
            Tensor eps = rng.gaussian_tensor(kShape);
            LatentState down = ddim_step(z, eps, t, t_prev, s4);
            LatentState back = ddim_invert_step(down, eps, t_prev, t, s4);
            CHECK(rel_diff(back.values, z.values) < 1e-6);
        }
    }

    // adjacent grid nodes of a long schedule
    VarianceSchedule s1000 = build_schedule(1000, 1e-4, 0.02, ScheduleKind::linear);
    auto grid = s1000.timestep_grid(50);
    for (std::size_t i = 1; i < grid.size(); i += 7) {
        LatentState z{grid[i], rng.gaussian_tensor(kShape)};
        Tensor eps = rng.gaussian_tensor(kShape);
        LatentState down = ddim_step(z, eps, grid[i], grid[i - 1], s1000);
        LatentState back = ddim_invert_step(down, eps, grid[i - 1], grid[i], s1000);
        CHECK(rel_diff(back.values, z.values) < 1e-6);
    }
}

TEST_CASE("zero-predictor round trip is exact") {
    VarianceSchedule s = build_schedule(8, 0.05, 0.2, ScheduleKind::linear);
    FunctionModel model = zero_model(kShape);
    Rng rng(11);
    LatentState z0{0, rng.gaussian_tensor(kShape)};

    // walk the full grid up then back down with the model's (zero) predictions
    auto grid = s.timestep_grid(8);
    LatentState z = z0;
    for (int i = 0; i < 8; ++i) {
        Tensor eps = model.predict(z.values, grid[static_cast<std::size_t>(i)], Conditioning::none());
        z = ddim_invert_step(z, eps, grid[static_cast<std::size_t>(i)], grid[static_cast<std::size_t>(i + 1)], s);
    }
    // terminal latent of the zero model is sqrt(alpha_bar_T) z0
    for (std::size_t i = 0; i < z.values.size(); ++i) {
        CHECK(z.values[i] ==
              doctest::Approx(std::sqrt(s.alpha_bar(8)) * z0.values[i]).epsilon(1e-6));
    }
    LatentState rec = sample(z, model, Conditioning::none(), GuidanceConfig::off(), s, 8);
    CHECK(rec.timestep == 0);
    CHECK(rel_diff(rec.values, z0.values) < 1e-6);
}

TEST_CASE("sample with one step equals a single ddim_step") {
    VarianceSchedule s = build_schedule(6, 0.05, 0.2, ScheduleKind::linear);
    FunctionModel model = wavy_model(kShape);
    Rng rng(12);
    LatentState zT{6, rng.gaussian_tensor(kShape)};
    LatentState direct =
        ddim_step(zT, model.predict(zT.values, 6, Conditioning::none()), 6, 0, s);
    LatentState via = sample(zT, model, Conditioning::none(), GuidanceConfig::off(), s, 1);
    CHECK(max_abs_diff(direct.values, via.values) == 0.0);
}

TEST_CASE("sample with constant-zero model divides by sqrt(alpha_bar_T)") {
    VarianceSchedule s = build_schedule(20, 0.01, 0.1, ScheduleKind::linear);
    FunctionModel model = zero_model(kShape);
    Rng rng(13);
    LatentState zT{20, rng.gaussian_tensor(kShape)};
    LatentState out = sample(zT, model, Conditioning::none(), GuidanceConfig::off(), s, 5);
    const double c = 1.0 / std::sqrt(s.alpha_bar(20));
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        CHECK(out.values[i] == doctest::Approx(c * zT.values[i]).epsilon(1e-5));
    }
}

TEST_CASE("sample is deterministic") {
    VarianceSchedule s = build_schedule(50, 0.01, 0.1, ScheduleKind::linear);
    FunctionModel model = wavy_model(kShape);
    Rng rng(14);
    LatentState zT{50, rng.gaussian_tensor(kShape)};
    LatentState a = sample(zT, model, Conditioning::none(), GuidanceConfig{1.5, true}, s, 10);
    LatentState b = sample(zT, model, Conditioning::none(), GuidanceConfig{1.5, true}, s, 10);
    CHECK(max_abs_diff(a.values, b.values) == 0.0);
}

TEST_CASE("sample validates the model output shape") {
    VarianceSchedule s = build_schedule(6, 0.05, 0.2, ScheduleKind::linear);
    FunctionModel bad(kShape, [](const Tensor&, int, const Conditioning&) {
        return Tensor({1, 2, 2});
    });
    Rng rng(15);
    LatentState zT{6, rng.gaussian_tensor(kShape)};
    CHECK_THROWS_AS(sample(zT, bad, Conditioning::none(), GuidanceConfig::off(), s, 3), ModelError);
    LatentState wrong{5, rng.gaussian_tensor(kShape)};
    CHECK_THROWS_AS(sample(wrong, bad, Conditioning::none(), GuidanceConfig::off(), s, 3),
                    ParameterError);
}

TEST_SUITE_END();
