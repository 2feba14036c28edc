// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "morphlab/diffusion.hpp"
#include "morphlab/tensor.hpp"

namespace morphlab::test {

// Deterministic stand-in noise predictor driven by a plain function.
class FunctionModel final : public NoisePredictor {
public:
    using Fn = std::function<Tensor(const Tensor&, int, const Conditioning&)>;

    FunctionModel(std::vector<int> shape, Fn fn) : shape_(std::move(shape)), fn_(std::move(fn)) {}

    Tensor predict(const Tensor& z, int t, const Conditioning& cond) const override {
        return fn_(z, t, cond);
    }
    std::vector<int> latent_shape() const override { return shape_; }

private:
    std::vector<int> shape_;
    Fn fn_;
};

inline FunctionModel zero_model(std::vector<int> shape) {
    return FunctionModel(shape, [](const Tensor& z, int, const Conditioning&) {
        return Tensor(z.shape());
    });
}

// Smooth nonlinear model so trajectories are nontrivial but reproducible.
inline FunctionModel wavy_model(std::vector<int> shape) {
    return FunctionModel(shape, [](const Tensor& z, int t, const Conditioning&) {
        Tensor out(z.shape());
        for (std::size_t i = 0; i < z.size(); ++i) {
            out[i] = std::sin(0.37f * z[i] + 0.013f * static_cast<float>(t) +
                              0.21f * static_cast<float>(i % 7));
        }
        return out;
    });
}

// max |a-b| / max(1, max|a|)
inline double rel_diff(const Tensor& a, const Tensor& b) {
    double scale = 1.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        scale = std::max(scale, std::abs(static_cast<double>(a[i])));
    }
    return max_abs_diff(a, b) / scale;
}

}  // namespace morphlab::test
