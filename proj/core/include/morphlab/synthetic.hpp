// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "morphlab/tensor.hpp"

namespace morphlab {

// Generative "genotype" of one synthetic identity. Rendering is a smooth
// function of these parameters, so nearby genotypes look similar.
struct SyntheticIdentity {
    std::vector<float> id_params;  // raw parameters in [0, 1]
    int label = 0;
    std::string group;  // attribute group used for pair selection

    std::string id_string() const;
};

// Per-sample pose/expression jitter, small enough that identity dominates.
struct SampleJitter {
    float dx = 0.0f;
    float dy = 0.0f;
    float scale = 1.0f;
    float smile_delta = 0.0f;
    float brightness = 0.0f;
};

struct ToyImage {
    Tensor pixels;  // [1, S, S] in [-1, 1]
    int identity_label = 0;
    int sample_index = 0;
    std::string split;  // "train" | "eval"
    std::string image_id;
};

struct DatasetConfig {
    int n_identities = 64;
    int samples_per_identity = 8;
    int image_size = 32;
    double eval_fraction = 0.3;
    double jitter_strength = 1.0;
    std::uint64_t seed = 7;
};

struct ToyDataset {
    DatasetConfig config;
    std::vector<SyntheticIdentity> identities;
    std::vector<ToyImage> images;

    const SyntheticIdentity& identity(int label) const;
    std::vector<int> image_indices_of(int label) const;
    std::vector<int> train_labels() const;
    std::vector<int> eval_labels() const;
    std::vector<int> train_image_indices() const;
    std::vector<int> eval_image_indices() const;
};

inline constexpr int kIdParamCount = 12;

// Deterministic given the config seed; identity appearance is a smooth
// function of id_params and the per-sample jitter.
ToyDataset generate_dataset(const DatasetConfig& config);

Tensor render_face(const std::vector<float>& id_params, const SampleJitter& jitter, int size);

std::string group_of_params(const std::vector<float>& id_params);

}  // namespace morphlab
