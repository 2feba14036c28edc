// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/mad.hpp"

#include <cmath>

#include "conv_stack.hpp"
#include "morphlab/errors.hpp"
#include "morphlab/rng.hpp"

namespace morphlab {

struct MadDetector::Impl {
    std::unique_ptr<ConvStack> trunk;
    std::unique_ptr<Linear> fc_hidden;
    std::unique_ptr<Linear> fc_out;
};

struct MadDetector::TrainCache {
    ConvStack::Cache trunk;
    LinearCache hidden_in;
    Tensor hidden_pre;
    LinearCache out_in;
    double d_logit = 0.0;
};

MadDetector::MadDetector(const MadConfig& config) : config_(config) {
    if (config.image_size % 8 != 0) throw ParameterError("MadDetector: image_size must divide by 8");
    Rng rng(config.init_seed);
    impl_ = std::make_unique<Impl>();
    impl_->trunk = std::make_unique<ConvStack>(params_, "trunk", config.image_channels,
                                               config.width, rng);
    const int feat = ConvStack::out_dim(config.width, config.image_size);
    impl_->fc_hidden = std::make_unique<Linear>(params_, "fc_hidden", feat, 32, rng);
    impl_->fc_out = std::make_unique<Linear>(params_, "fc_out", 32, 1, rng);
}

MadDetector::~MadDetector() = default;

double MadDetector::logit(const Tensor& image) const {
    Tensor flat = impl_->trunk->forward(image, nullptr);
    Tensor h = silu(impl_->fc_hidden->forward(flat, nullptr));
    Tensor o = impl_->fc_out->forward(h, nullptr);
    return o[0];
}

double MadDetector::score(const Tensor& image) const {
    return sigmoid(logit(image));
}

double MadDetector::train_example(const Tensor& image, double target, TrainCache& cache) const {
    Tensor flat = impl_->trunk->forward(image, &cache.trunk);
    Tensor pre = impl_->fc_hidden->forward(flat, &cache.hidden_in);
    cache.hidden_pre = pre;
    Tensor h = silu(pre);
    Tensor o = impl_->fc_out->forward(h, &cache.out_in);
    return bce_with_logit(o[0], target, cache.d_logit);
}

void MadDetector::backward(const TrainCache& cache) const {
    Tensor d_o({1});
    d_o[0] = static_cast<float>(cache.d_logit);
    Tensor d_h = impl_->fc_out->backward(cache.out_in, d_o);
    Tensor d_pre = silu_backward(cache.hidden_pre, d_h);
    Tensor d_flat = impl_->fc_hidden->backward(cache.hidden_in, d_pre);
    impl_->trunk->backward(cache.trunk, d_flat);
}

std::unique_ptr<MadDetector> train_mad_detector(const std::vector<Tensor>& bona,
                                                const std::vector<Tensor>& attacks,
                                                MadConfig config,
                                                const MadTrainConfig& train_config,
                                                MadTrainResult* result) {
    if (bona.empty() || attacks.empty()) {
        throw ParameterError("train_mad_detector: both classes must be non-empty");
    }
    config.image_size = bona.front().dim(1);
    auto model = std::make_unique<MadDetector>(config);
    Rng rng(train_config.seed);
    AdamOptimizer opt(model->params().all(), train_config.lr);

    const int n = static_cast<int>(bona.size() + attacks.size());
    MadTrainResult stats;
    for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
        std::vector<int> order = rng.permutation(n);
        double epoch_loss = 0.0;
        int batch_fill = 0;
        model->params().zero_grads();
        for (std::size_t oi = 0; oi < order.size(); ++oi) {
            const int item = order[oi];
            const bool is_attack = item >= static_cast<int>(bona.size());
            const Tensor& img = is_attack ? attacks[static_cast<std::size_t>(item) - bona.size()]
                                          : bona[static_cast<std::size_t>(item)];
            MadDetector::TrainCache cache;
            const double loss = model->train_example(img, is_attack ? 1.0 : 0.0, cache);
            if (!std::isfinite(loss)) throw TrainingError("train_mad_detector: loss diverged");
            epoch_loss += loss;
            model->backward(cache);
            if (++batch_fill == train_config.batch_size || oi == order.size() - 1) {
                model->params().clip_grad_norm(train_config.grad_clip);
                opt.step();
                model->params().zero_grads();
                batch_fill = 0;
            }
        }
        stats.epoch_losses.push_back(static_cast<float>(epoch_loss / n));
    }
    if (result) *result = stats;
    return model;
}

}  // namespace morphlab
