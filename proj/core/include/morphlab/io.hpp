// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "morphlab/codec.hpp"
#include "morphlab/denoiser.hpp"
#include "morphlab/embedder.hpp"
#include "morphlab/mad.hpp"
#include "morphlab/synthetic.hpp"
#include "morphlab/tensor.hpp"

namespace morphlab {

// Binary 8-bit PGM; image tensors are [1, H, W] in [-1, 1].
void write_pgm(const std::string& path, const Tensor& image);
Tensor read_pgm(const std::string& path);

// Keyed float-tensor container ("MLTC"), used for persisted latents.
void write_tensor_container(const std::string& path, const std::map<std::string, Tensor>& tensors);
std::map<std::string, Tensor> read_tensor_container(const std::string& path);

// Model checkpoint ("MLCK"): kind tag + embedded config JSON + named tensors.
struct Checkpoint {
    std::string kind;
    std::string config_json;
    std::map<std::string, Tensor> tensors;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

Checkpoint checkpoint_from_params(const std::string& kind, const std::string& config_json,
                                  const ParamStore& params);
void load_params_from_checkpoint(ParamStore& params, const Checkpoint& ckpt);

void save_denoiser(const std::string& path, const DenoiserModel& model);
std::unique_ptr<DenoiserModel> load_denoiser(const std::string& path);

void save_embedder(const std::string& path, const ToyEmbedder& model);
std::unique_ptr<ToyEmbedder> load_embedder(const std::string& path);

void save_mad(const std::string& path, const MadDetector& model);
std::unique_ptr<MadDetector> load_mad(const std::string& path);

void save_autoencoder(const std::string& path, const ConvAutoencoder& model);
std::unique_ptr<ConvAutoencoder> load_autoencoder(const std::string& path);

// Dataset persistence: PGM images + line-delimited manifests. Loading reads
// the quantized images back, which is the canonical form for every
// downstream step.
void save_dataset(const std::string& dir, const ToyDataset& dataset);
ToyDataset load_dataset(const std::string& dir);

void ensure_dir(const std::string& path);
bool file_exists(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace morphlab
