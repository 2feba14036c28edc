// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "morphlab/rng.hpp"
#include "morphlab/tensor.hpp"

namespace morphlab {

struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
};

using ParamPtr = std::shared_ptr<Param>;

class ParamStore {
public:
    ParamPtr create(const std::string& name, std::vector<int> shape);
    void zero_grads();
    const std::vector<ParamPtr>& all() const { return params_; }
    ParamPtr find(const std::string& name) const;
    std::size_t total_size() const;
    double grad_norm() const;
    void clip_grad_norm(double max_norm);

private:
    std::vector<ParamPtr> params_;
};

class AdamOptimizer {
public:
    AdamOptimizer(std::vector<ParamPtr> params, double lr, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);
    void step();
    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

private:
    std::vector<ParamPtr> params_;
    std::vector<Tensor> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    long step_count_ = 0;
};

struct ConvCache {
    Tensor input;
    Tensor col;  // [in_ch*k*k, out_h*out_w]
};

// 2-D convolution with square kernel and zero padding k/2.
class Conv2d {
public:
    Conv2d(ParamStore& store, const std::string& name, int in_ch, int out_ch, int ksize,
           int stride, Rng& init_rng);

    Tensor forward(const Tensor& x, ConvCache* cache = nullptr) const;
    Tensor backward(const ConvCache& cache, const Tensor& d_out) const;

    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }
    const ParamPtr& weight() const { return weight_; }
    const ParamPtr& bias() const { return bias_; }

private:
    int in_ch_, out_ch_, ksize_, stride_;
    ParamPtr weight_;  // [out_ch, in_ch*k*k]
    ParamPtr bias_;    // [out_ch]
};

struct LinearCache {
    Tensor input;  // [N, in]
};

class Linear {
public:
    Linear(ParamStore& store, const std::string& name, int in_dim, int out_dim, Rng& init_rng);

    // x may be [in] or [N, in].
    Tensor forward(const Tensor& x, LinearCache* cache = nullptr) const;
    Tensor backward(const LinearCache& cache, const Tensor& d_out) const;

    int in_dim() const { return in_dim_; }
    int out_dim() const { return out_dim_; }
    const ParamPtr& weight() const { return weight_; }
    const ParamPtr& bias() const { return bias_; }

private:
    int in_dim_, out_dim_;
    ParamPtr weight_;  // [in, out]
    ParamPtr bias_;    // [out]
};

Tensor silu(const Tensor& x);
Tensor silu_backward(const Tensor& x, const Tensor& d_out);

Tensor upsample_nearest2(const Tensor& x);
Tensor upsample_nearest2_backward(const Tensor& d_out);

// Sinusoidal features of a scalar timestep.
Tensor sinusoidal_features(double t, int dim);

// Row-wise softmax + cross-entropy; returns loss and writes d_logits.
double softmax_cross_entropy(const Tensor& logits, int target, Tensor& d_logits);

double sigmoid(double x);
// Binary cross-entropy on a single logit; returns loss and d_logit.
double bce_with_logit(double logit, double target, double& d_logit);

}  // namespace morphlab
