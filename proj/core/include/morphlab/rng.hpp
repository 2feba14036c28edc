// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "morphlab/tensor.hpp"

namespace morphlab {

// Seeded generator with hand-rolled uniform/gaussian mapping so that streams
// are reproducible bit-for-bit independent of the standard library's
// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 bits of entropy.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive bounds.
    int uniform_int(int lo, int hi);

    // Box-Muller with cached spare.
    double gaussian();

    Tensor gaussian_tensor(std::vector<int> shape);
    void fill_gaussian(Tensor& t);

    // Fisher-Yates over [0, n), returned as an index permutation.
    std::vector<int> permutation(int n);

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t fnv1a(std::string_view s);
std::uint64_t fnv1a_bytes(const void* data, std::size_t n);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

// Seed derived from the unordered identity pair plus the run seed, so that
// swapping the sources yields the identical stream.
std::uint64_t pair_seed(std::uint64_t run_seed, std::string_view id_a, std::string_view id_b);

}  // namespace morphlab
