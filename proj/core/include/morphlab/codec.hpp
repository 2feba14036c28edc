// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "morphlab/diffusion.hpp"
#include "morphlab/nn.hpp"
#include "morphlab/tensor.hpp"

namespace morphlab {

// Image <-> latent seam. The default configuration is the exact identity map
// (pixel-space latents); a small trainable autoencoder exercises the same
// interface with a compressed latent.
class LatentCodec {
public:
    virtual ~LatentCodec() = default;
    virtual LatentState encode(const Tensor& image) const = 0;
    virtual Tensor decode(const LatentState& z0) const = 0;
    virtual std::vector<int> latent_shape(const std::vector<int>& image_shape) const = 0;
    virtual std::string name() const = 0;
};

class IdentityCodec final : public LatentCodec {
public:
    LatentState encode(const Tensor& image) const override;
    Tensor decode(const LatentState& z0) const override;
    std::vector<int> latent_shape(const std::vector<int>& image_shape) const override {
        return image_shape;
    }
    std::string name() const override { return "identity"; }
};

struct AutoencoderConfig {
    int image_channels = 1;
    int image_size = 32;
    int latent_channels = 4;
    int hidden_channels = 16;
    std::uint64_t init_seed = 101;
};

struct AutoencoderTrainConfig {
    int steps = 600;
    int batch_size = 16;
    double lr = 2e-3;
    double grad_clip = 1.0;
    std::uint64_t seed = 5;
};

// Single-downsample conv autoencoder: image [C, S, S] <-> latent
// [latent_channels, S/2, S/2].
class ConvAutoencoder final : public LatentCodec {
public:
    explicit ConvAutoencoder(const AutoencoderConfig& config);

    LatentState encode(const Tensor& image) const override;
    Tensor decode(const LatentState& z0) const override;
    std::vector<int> latent_shape(const std::vector<int>& image_shape) const override;
    std::string name() const override { return "conv_autoencoder"; }

    // One reconstruction training step over a batch; returns the batch loss.
    double train_step(const std::vector<const Tensor*>& batch, AdamOptimizer& opt);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const AutoencoderConfig& config() const { return config_; }

private:
    Tensor encode_values(const Tensor& image, struct AeCache* cache) const;
    Tensor decode_values(const Tensor& z, struct AeCache* cache) const;

    AutoencoderConfig config_;
    ParamStore params_;
    std::shared_ptr<Conv2d> enc1_, enc2_, dec1_, dec2_, dec3_;
};

// Trains the autoencoder on the dataset images; returns final mean batch loss.
double train_autoencoder(ConvAutoencoder& ae, const std::vector<Tensor>& images,
                         const AutoencoderTrainConfig& config);

}  // namespace morphlab
