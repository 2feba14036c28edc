// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "morphlab/errors.hpp"

namespace morphlab {

int Rng::uniform_int(int lo, int hi) {
    if (hi < lo) throw ParameterError("uniform_int: empty range");
    const std::uint64_t range = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    return lo + static_cast<int>(next_u64() % range);
}

double Rng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

Tensor Rng::gaussian_tensor(std::vector<int> shape) {
    Tensor t(std::move(shape));
    fill_gaussian(t);
    return t;
}

void Rng::fill_gaussian(Tensor& t) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(gaussian());
}

std::vector<int> Rng::permutation(int n) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        const int j = uniform_int(0, i);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return idx;
}

std::uint64_t fnv1a(std::string_view s) {
    return fnv1a_bytes(s.data(), s.size());
}

std::uint64_t fnv1a_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the xored pair
    std::uint64_t x = a + 0x9e3779b97f4a7c15ull + (b << 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

std::uint64_t pair_seed(std::uint64_t run_seed, std::string_view id_a, std::string_view id_b) {
    std::uint64_t ha = fnv1a(id_a);
    std::uint64_t hb = fnv1a(id_b);
    if (hb < ha) std::swap(ha, hb);
    return hash_combine(run_seed, hash_combine(ha, hb));
}

}  // namespace morphlab
