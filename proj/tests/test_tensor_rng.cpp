// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "morphlab/errors.hpp"
#include "morphlab/rng.hpp"
#include "morphlab/tensor.hpp"

using namespace morphlab;

TEST_SUITE_BEGIN("tensor_rng");

TEST_CASE("tensor construction and shape checks") {
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.rank() == 2);
    CHECK(t.dim(1) == 3);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0f);

    CHECK_THROWS_AS(Tensor({0, 3}), ParameterError);
    CHECK_THROWS_AS(Tensor({2}, {1.0f, 2.0f, 3.0f}), ParameterError);
    CHECK_THROWS_AS(t.reshaped({5}), ParameterError);

    Tensor r = t.reshaped({3, 2});
    CHECK(r.dim(0) == 3);
}

TEST_CASE("elementwise helpers") {
    Tensor a({2}, {1.0f, 2.0f});
    Tensor b({2}, {3.0f, -1.0f});
    Tensor s = add(a, b);
    CHECK(s[0] == doctest::Approx(4.0));
    CHECK(sub(a, b)[1] == doctest::Approx(3.0));
    CHECK(dot(a, b) == doctest::Approx(1.0));
    CHECK(norm(a) == doctest::Approx(std::sqrt(5.0)));
    CHECK(mse(a, b) == doctest::Approx((4.0 + 9.0) / 2.0));

    Tensor lc = linear_combine(0.5, a, 0.5, b);
    CHECK(lc[0] == doctest::Approx(2.0));

    Tensor wrong({3});
    CHECK_THROWS_AS(add(a, wrong), ParameterError);
    CHECK_THROWS_AS(dot(a, wrong), ParameterError);
}

TEST_CASE("cosine similarity") {
    Tensor a({2}, {1.0f, 0.0f});
    Tensor b({2}, {0.0f, 1.0f});
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
    Tensor z({2});
    CHECK_THROWS_AS(cosine_similarity(a, z), ParameterError);
}

TEST_CASE("rng determinism") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    bool any_diff = false;
    Rng a2(42);
    for (int i = 0; i < 10; ++i) any_diff |= (a2.next_u64() != c.next_u64());
    CHECK(any_diff);

    Rng g1(7), g2(7);
    Tensor t1 = g1.gaussian_tensor({4, 4});
    Tensor t2 = g2.gaussian_tensor({4, 4});
    CHECK(max_abs_diff(t1, t2) == 0.0);
}

TEST_CASE("gaussian moments") {
    Rng rng(123);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sum += g;
        sum2 += g * g;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("uniform_int bounds") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const int v = rng.uniform_int(3, 7);
        CHECK(v >= 3);
        CHECK(v <= 7);
    }
    CHECK_THROWS_AS(rng.uniform_int(5, 4), ParameterError);
}

TEST_CASE("permutation is a permutation") {
    Rng rng(5);
    auto p = rng.permutation(20);
    std::vector<bool> seen(20, false);
    for (int v : p) {
        CHECK(!seen[static_cast<std::size_t>(v)]);
        seen[static_cast<std::size_t>(v)] = true;
    }
}

TEST_CASE("fnv1a known vectors") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("pair_seed is symmetric in the pair and sensitive to the run seed") {
    CHECK(pair_seed(9, "id001", "id002") == pair_seed(9, "id002", "id001"));
    CHECK(pair_seed(9, "id001", "id002") != pair_seed(10, "id001", "id002"));
    CHECK(pair_seed(9, "id001", "id002") != pair_seed(9, "id001", "id003"));
}

TEST_SUITE_END();
