// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "morphlab/nn.hpp"
#include "morphlab/tensor.hpp"

namespace morphlab {

struct MadConfig {
    std::string name = "mad";
    int width = 12;
    int image_channels = 1;
    int image_size = 32;
    std::uint64_t init_seed = 77;
};

// Binary morphing-attack detector; score in [0, 1], higher = more attack-like.
class MadDetector {
public:
    explicit MadDetector(const MadConfig& config);
    ~MadDetector();

    double score(const Tensor& image) const;
    double logit(const Tensor& image) const;

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const MadConfig& config() const { return config_; }

    struct TrainCache;
    double train_example(const Tensor& image, double target, TrainCache& cache) const;
    void backward(const TrainCache& cache) const;

private:
    MadConfig config_;
    ParamStore params_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct MadTrainConfig {
    int epochs = 8;
    int batch_size = 32;
    double lr = 1e-3;
    double grad_clip = 5.0;
    std::uint64_t seed = 9;
};

struct MadTrainResult {
    std::vector<float> epoch_losses;
};

// Binary cross-entropy training on bona fide vs one attack type.
std::unique_ptr<MadDetector> train_mad_detector(const std::vector<Tensor>& bona,
                                                const std::vector<Tensor>& attacks,
                                                MadConfig config,
                                                const MadTrainConfig& train_config,
                                                MadTrainResult* result = nullptr);

}  // namespace morphlab
