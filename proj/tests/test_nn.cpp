// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <functional>

#include "morphlab/attention.hpp"
#include "morphlab/denoiser.hpp"
#include "morphlab/errors.hpp"
#include "morphlab/nn.hpp"
#include "morphlab/rng.hpp"

using namespace morphlab;

TEST_SUITE_BEGIN("nn");

namespace {

// Scalar projection loss sum(coef * out) so d_out = coef.
double proj_loss(const Tensor& out, const Tensor& coef) {
    return dot(out, coef);
}

// Central-difference check of d(loss)/d(target[idx]) against an analytic value.
void check_numeric(Tensor& target, std::size_t idx, double analytic,
                   const std::function<double()>& loss, double h = 1e-2, double tol = 3e-2) {
    const float keep = target[idx];
    target[idx] = keep + static_cast<float>(h);
    const double up = loss();
    target[idx] = keep - static_cast<float>(h);
    const double down = loss();
    target[idx] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(numeric), std::abs(analytic)});
    INFO("idx=", idx, " numeric=", numeric, " analytic=", analytic);
    CHECK(std::abs(numeric - analytic) / scale < tol);
}

}  // namespace

TEST_CASE("param store bookkeeping") {
    ParamStore store;
    auto p = store.create("w", {2, 2});
    CHECK_THROWS_AS(store.create("w", {2}), ParameterError);
    CHECK(store.find("w") == p);
    CHECK(store.find("nope") == nullptr);
    CHECK(store.total_size() == 4);

    p->grad.fill(3.0f);
    CHECK(store.grad_norm() == doctest::Approx(6.0));
    store.clip_grad_norm(3.0);
    CHECK(store.grad_norm() == doctest::Approx(3.0));
    store.zero_grads();
    CHECK(store.grad_norm() == doctest::Approx(0.0));
}

TEST_CASE("adam minimizes a quadratic") {
    ParamStore store;
    auto p = store.create("x", {4});
    for (int i = 0; i < 4; ++i) p->value[static_cast<std::size_t>(i)] = static_cast<float>(i + 1);
    AdamOptimizer opt(store.all(), 0.05);
    for (int step = 0; step < 400; ++step) {
        store.zero_grads();
        for (std::size_t i = 0; i < 4; ++i) p->grad[i] = 2.0f * p->value[i];
        opt.step();
    }
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(p->value[i]) < 1e-2);
}

TEST_CASE("linear gradients") {
    ParamStore store;
    Rng rng(51);
    Linear lin(store, "fc", 5, 3, rng);
    Tensor x = rng.gaussian_tensor({2, 5});
    Tensor coef = rng.gaussian_tensor({2, 3});

    auto loss = [&]() { return proj_loss(lin.forward(x, nullptr), coef); };
    store.zero_grads();
    LinearCache cache;
    Tensor out = lin.forward(x, &cache);
    Tensor dx = lin.backward(cache, coef);

    for (std::size_t i = 0; i < 6; ++i) {
        check_numeric(lin.weight()->value, i, lin.weight()->grad[i], loss);
    }
    for (std::size_t i = 0; i < 3; ++i) {
        check_numeric(lin.bias()->value, i, lin.bias()->grad[i], loss);
    }
    for (std::size_t i = 0; i < x.size(); ++i) check_numeric(x, i, dx[i], loss);
}

TEST_CASE("conv gradients, stride 1 and 2") {
    for (int stride : {1, 2}) {
        CAPTURE(stride);
        ParamStore store;
        Rng rng(52);
        Conv2d conv(store, "c", 2, 3, 3, stride, rng);
        Tensor x = rng.gaussian_tensor({2, 6, 6});
        ConvCache cache;
        Tensor out = conv.forward(x, &cache);
        Tensor coef = rng.gaussian_tensor(out.shape());

        auto loss = [&]() { return proj_loss(conv.forward(x, nullptr), coef); };
        store.zero_grads();
        Tensor dx = conv.backward(cache, coef);

        for (std::size_t i = 0; i < conv.weight()->value.size(); i += 7) {
            check_numeric(conv.weight()->value, i, conv.weight()->grad[i], loss);
        }
        for (std::size_t i = 0; i < 3; ++i) {
            check_numeric(conv.bias()->value, i, conv.bias()->grad[i], loss);
        }
        for (std::size_t i = 0; i < x.size(); i += 11) check_numeric(x, i, dx[i], loss);
    }
}

TEST_CASE("silu and upsample gradients") {
    Rng rng(53);
    Tensor x = rng.gaussian_tensor({2, 4, 4});
    Tensor coef = rng.gaussian_tensor({2, 4, 4});
    Tensor dx = silu_backward(x, coef);
    auto loss = [&]() { return proj_loss(silu(x), coef); };
    for (std::size_t i = 0; i < x.size(); i += 3) check_numeric(x, i, dx[i], loss);

    Tensor up_coef = rng.gaussian_tensor({2, 8, 8});
    Tensor dup = upsample_nearest2_backward(up_coef);
    auto up_loss = [&]() { return proj_loss(upsample_nearest2(x), up_coef); };
    for (std::size_t i = 0; i < x.size(); i += 5) check_numeric(x, i, dup[i], up_loss);
}

TEST_CASE("attention gradients, multi-token multi-head") {
    Rng rng(54);
    CrossAttentionParams p = CrossAttentionParams::create(6, 5, 3, 2, rng);
    Tensor f = rng.gaussian_tensor({4, 6});
    Tensor ctx = rng.gaussian_tensor({3, 5});
    Tensor coef = rng.gaussian_tensor({4, 6});

    AttnCache cache;
    attention_forward(f, ctx, p, &cache);
    Tensor d_f, d_ctx, dw_q, dw_k, dw_v;
    attention_backward(cache, p, coef, d_f, d_ctx, dw_q, dw_k, dw_v);

    auto loss = [&]() { return proj_loss(attention_forward(f, ctx, p, nullptr), coef); };
    for (std::size_t i = 0; i < p.w_q.size(); i += 5) check_numeric(p.w_q, i, dw_q[i], loss);
    for (std::size_t i = 0; i < p.w_k.size(); i += 5) check_numeric(p.w_k, i, dw_k[i], loss);
    for (std::size_t i = 0; i < p.w_v.size(); i += 5) check_numeric(p.w_v, i, dw_v[i], loss);
    for (std::size_t i = 0; i < f.size(); i += 3) check_numeric(f, i, d_f[i], loss);
    for (std::size_t i = 0; i < ctx.size(); i += 2) check_numeric(ctx, i, d_ctx[i], loss);
}

TEST_CASE("softmax cross entropy and bce gradients") {
    Rng rng(55);
    Tensor logits = rng.gaussian_tensor({5});
    Tensor d_logits;
    softmax_cross_entropy(logits, 2, d_logits);
    auto loss = [&]() {
        Tensor d;
        return softmax_cross_entropy(logits, 2, d);
    };
    for (std::size_t i = 0; i < logits.size(); ++i) {
        check_numeric(logits, i, d_logits[i], loss, 1e-3, 1e-2);
    }

    double d_logit = 0.0;
    Tensor wrap({1}, {0.3f});
    bce_with_logit(wrap[0], 1.0, d_logit);
    auto bce_loss = [&]() {
        double d;
        return bce_with_logit(wrap[0], 1.0, d);
    };
    check_numeric(wrap, 0, d_logit, bce_loss, 1e-3, 1e-2);
}

TEST_CASE("denoiser full backward against finite differences") {
    DenoiserConfig cfg;
    cfg.latent_channels = 1;
    cfg.latent_size = 8;
    cfg.base_channels = 4;
    cfg.num_down = 2;
    cfg.cond_dim = 8;
    cfg.time_dim = 16;
    cfg.attention_heads = 1;
    cfg.init_seed = 99;
    DenoiserModel model(cfg);

    Rng rng(56);
    Tensor z = rng.gaussian_tensor({1, 8, 8});
    Tensor coef = rng.gaussian_tensor({1, 8, 8});
    IdentityEmbedding c{rng.gaussian_tensor({8}), "a"};

    for (auto kind : {Conditioning::Kind::single, Conditioning::Kind::unconditional}) {
        Conditioning cond = kind == Conditioning::Kind::single ? Conditioning::one(c)
                                                               : Conditioning::none();
        auto loss = [&]() { return proj_loss(model.predict(z, 3, cond), coef); };

        model.params().zero_grads();
        DenoiserCache cache;
        model.forward_train(z, 3, cond, cache);
        Tensor d_z = model.backward(cache, coef);

        // probe a few coordinates of every parameter tensor
        for (const auto& p : model.params().all()) {
            const std::size_t stride = std::max<std::size_t>(1, p->value.size() / 3);
            for (std::size_t i = 0; i < p->value.size(); i += stride) {
                INFO("param ", p->name);
                check_numeric(p->value, i, p->grad[i], loss);
            }
        }
        for (std::size_t i = 0; i < z.size(); i += 17) check_numeric(z, i, d_z[i], loss);
    }
}

TEST_CASE("denoiser rejects dual conditioning in training mode") {
    DenoiserConfig cfg;
    cfg.latent_size = 8;
    cfg.base_channels = 4;
    cfg.cond_dim = 8;
    cfg.init_seed = 1;
    DenoiserModel model(cfg);
    Rng rng(57);
    IdentityEmbedding a{rng.gaussian_tensor({8}), "a"};
    IdentityEmbedding b{rng.gaussian_tensor({8}), "b"};
    DenoiserCache cache;
    CHECK_THROWS_AS(
        model.forward_train(rng.gaussian_tensor({1, 8, 8}), 2, Conditioning::pair(a, b, 0.5), cache),
        ParameterError);
}

TEST_CASE("sinusoidal features are bounded and distinct across timesteps") {
    Tensor f1 = sinusoidal_features(10.0, 32);
    Tensor f2 = sinusoidal_features(11.0, 32);
    CHECK(f1.size() == 32);
    for (std::size_t i = 0; i < f1.size(); ++i) {
        CHECK(std::abs(f1[i]) <= 1.0f + 1e-6f);
    }
    CHECK(max_abs_diff(f1, f2) > 1e-3);
    CHECK_THROWS_AS(sinusoidal_features(1.0, 5), ParameterError);
}

TEST_SUITE_END();
