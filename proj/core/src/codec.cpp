// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/codec.hpp"

#include <cmath>

#include "morphlab/errors.hpp"

namespace morphlab {

LatentState IdentityCodec::encode(const Tensor& image) const {
    if (!image.all_finite()) throw ParameterError("encode: non-finite image");
    return LatentState{0, image};
}

Tensor IdentityCodec::decode(const LatentState& z0) const {
    return z0.values;
}

// Intermediate activations for one autoencoder pass.
struct AeCache {
    ConvCache e1, e2, d1, d2, d3;
    Tensor e1_pre, d1_pre, d2_pre;
};

ConvAutoencoder::ConvAutoencoder(const AutoencoderConfig& config) : config_(config) {
    if (config.image_size % 2 != 0) throw ParameterError("ConvAutoencoder: image size must be even");
    Rng rng(config.init_seed);
    enc1_ = std::make_shared<Conv2d>(params_, "enc1", config.image_channels, config.hidden_channels,
                                     3, 2, rng);
    enc2_ = std::make_shared<Conv2d>(params_, "enc2", config.hidden_channels,
                                     config.latent_channels, 3, 1, rng);
    dec1_ = std::make_shared<Conv2d>(params_, "dec1", config.latent_channels,
                                     config.hidden_channels, 3, 1, rng);
    dec2_ = std::make_shared<Conv2d>(params_, "dec2", config.hidden_channels,
                                     config.hidden_channels, 3, 1, rng);
    dec3_ = std::make_shared<Conv2d>(params_, "dec3", config.hidden_channels,
                                     config.image_channels, 3, 1, rng);
}

Tensor ConvAutoencoder::encode_values(const Tensor& image, AeCache* cache) const {
    Tensor h = enc1_->forward(image, cache ? &cache->e1 : nullptr);
    if (cache) cache->e1_pre = h;
    h = silu(h);
    return enc2_->forward(h, cache ? &cache->e2 : nullptr);
}

Tensor ConvAutoencoder::decode_values(const Tensor& z, AeCache* cache) const {
    Tensor h = dec1_->forward(z, cache ? &cache->d1 : nullptr);
    if (cache) cache->d1_pre = h;
    h = silu(h);
    h = upsample_nearest2(h);
    h = dec2_->forward(h, cache ? &cache->d2 : nullptr);
    if (cache) cache->d2_pre = h;
    h = silu(h);
    return dec3_->forward(h, cache ? &cache->d3 : nullptr);
}

LatentState ConvAutoencoder::encode(const Tensor& image) const {
    if (image.rank() != 3 || image.dim(0) != config_.image_channels ||
        image.dim(1) != config_.image_size || image.dim(2) != config_.image_size) {
        throw ParameterError("ConvAutoencoder::encode: image shape mismatch");
    }
    return LatentState{0, encode_values(image, nullptr)};
}

Tensor ConvAutoencoder::decode(const LatentState& z0) const {
    const auto expect = latent_shape({config_.image_channels, config_.image_size, config_.image_size});
    if (z0.values.shape() != expect) throw ParameterError("ConvAutoencoder::decode: latent shape mismatch");
    return decode_values(z0.values, nullptr);
}

std::vector<int> ConvAutoencoder::latent_shape(const std::vector<int>& image_shape) const {
    return {config_.latent_channels, image_shape[1] / 2, image_shape[2] / 2};
}

double ConvAutoencoder::train_step(const std::vector<const Tensor*>& batch, AdamOptimizer& opt) {
    if (batch.empty()) throw ParameterError("ConvAutoencoder::train_step: empty batch");
    params_.zero_grads();
    double loss_acc = 0.0;
    for (const Tensor* img : batch) {
        AeCache cache;
        Tensor z = encode_values(*img, &cache);
        Tensor recon = decode_values(z, &cache);
        loss_acc += mse(recon, *img);

        Tensor d_recon(recon.shape());
        const double s = 2.0 / (static_cast<double>(recon.size()) * batch.size());
        for (std::size_t i = 0; i < recon.size(); ++i) {
            d_recon[i] = static_cast<float>((recon[i] - (*img)[i]) * s);
        }
        // decoder
        Tensor d = dec3_->backward(cache.d3, d_recon);
        d = silu_backward(cache.d2_pre, d);
        d = dec2_->backward(cache.d2, d);
        d = upsample_nearest2_backward(d);
        d = silu_backward(cache.d1_pre, d);
        Tensor d_z = dec1_->backward(cache.d1, d);
        // encoder
        Tensor de = enc2_->backward(cache.e2, d_z);
        de = silu_backward(cache.e1_pre, de);
        enc1_->backward(cache.e1, de);
    }
    opt.step();
    return loss_acc / static_cast<double>(batch.size());
}

double train_autoencoder(ConvAutoencoder& ae, const std::vector<Tensor>& images,
                         const AutoencoderTrainConfig& config) {
    if (images.empty()) throw TrainingError("train_autoencoder: no images");
    Rng rng(config.seed);
    AdamOptimizer opt(ae.params().all(), config.lr);
    double last = 0.0;
    for (int step = 0; step < config.steps; ++step) {
        std::vector<const Tensor*> batch;
        for (int b = 0; b < config.batch_size; ++b) {
            batch.push_back(&images[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<int>(images.size()) - 1))]);
        }
        last = ae.train_step(batch, opt);
        if (!std::isfinite(last)) throw TrainingError("train_autoencoder: loss diverged");
    }
    return last;
}

}  // namespace morphlab
