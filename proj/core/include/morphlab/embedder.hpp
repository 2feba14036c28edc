// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "morphlab/identity.hpp"
#include "morphlab/nn.hpp"
#include "morphlab/synthetic.hpp"

namespace morphlab {

struct EmbedderConfig {
    std::string name = "embedder";
    int width = 16;
    int embed_dim = 64;
    int image_channels = 1;
    int image_size = 32;
    int n_classes = 0;  // set from the dataset when training
    std::uint64_t init_seed = 11;
};

// Small conv classifier over synthetic identities; the L2-normalized
// penultimate layer is the identity embedding.
class ToyEmbedder final : public IdentityEmbedder {
public:
    explicit ToyEmbedder(const EmbedderConfig& config);
    ~ToyEmbedder() override;

    IdentityEmbedding embed(const Tensor& image) const override;
    int embedding_dim() const override { return config_.embed_dim; }
    std::string name() const override { return config_.name; }

    Tensor class_logits(const Tensor& image) const;
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const EmbedderConfig& config() const { return config_; }

    // Single-example training step pieces.
    struct TrainCache;
    double train_example(const Tensor& image, int target, TrainCache& cache) const;
    void backward(const TrainCache& cache) const;

private:
    Tensor penultimate(const Tensor& image, TrainCache* cache) const;

    EmbedderConfig config_;
    ParamStore params_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct EmbedderTrainConfig {
    int epochs = 12;
    int batch_size = 32;
    double lr = 1.5e-3;
    double grad_clip = 5.0;
    std::uint64_t seed = 2;
};

struct EmbedderTrainResult {
    std::vector<float> epoch_losses;
    double holdout_accuracy = 0.0;  // on held-out images of trained identities
};

// Trains a classifier over the dataset's train identities. The last sample of
// each training identity is held out for the accuracy check.
std::unique_ptr<ToyEmbedder> train_embedder(const ToyDataset& dataset, EmbedderConfig config,
                                            const EmbedderTrainConfig& train_config,
                                            EmbedderTrainResult* result = nullptr);

// Analytic ground-truth embedding: the generator's identity parameters.
IdentityEmbedding oracle_embedding(const SyntheticIdentity& identity);

// Line-delimited embedding records (identity label, then vector entries).
void write_embeddings_tsv(const std::string& path, const std::vector<IdentityEmbedding>& embeddings);
std::vector<IdentityEmbedding> read_embeddings_tsv(const std::string& path);

}  // namespace morphlab
