// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "morphlab/codec.hpp"
#include "morphlab/denoiser.hpp"
#include "morphlab/embedder.hpp"
#include "morphlab/mad.hpp"
#include "morphlab/morph.hpp"
#include "morphlab/schedule.hpp"
#include "morphlab/synthetic.hpp"

namespace morphlab {

struct EmbedderSpec {
    EmbedderConfig model;
    EmbedderTrainConfig train;
};

// Image <-> latent codec selection: the exact identity map by default, or the
// small trained autoencoder.
struct CodecConfig {
    std::string kind = "identity";  // "identity" | "autoencoder"
    AutoencoderConfig model;
    AutoencoderTrainConfig train;
};

// Every tunable of the pipeline, serializable as one JSON document. The
// config hash covers everything except output_dir and threads (execution
// placement, not behavior).
struct ExperimentConfig {
    DatasetConfig dataset;

    ScheduleKind schedule_kind = ScheduleKind::linear;
    int schedule_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int num_inference_steps = 50;

    DenoiserConfig denoiser;
    DenoiserTrainConfig denoiser_train;
    CodecConfig codec;

    EmbedderSpec cond_embedder;
    std::vector<EmbedderSpec> eval_embedders;

    MadConfig mad;
    MadTrainConfig mad_train;
    std::string mad_train_variant = "embedding_interp";

    MorphConfig morph;  // lambda / omega / guidance / steps defaults
    std::vector<std::string> morph_variants = {"embedding_interp", "cross_attention_interp",
                                               "embedding_plus_ddim", "dcmorph"};
    std::vector<std::uint64_t> morph_seeds = {1};
    int pairs_total = 50;

    std::vector<double> fmr_targets = {0.01, 0.001};
    std::vector<int> bpcer_points = {1, 10, 20};

    int threads = 0;
    std::string output_dir = "runs/default";

    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig defaults();

    // Stable across processes; covers everything except output_dir/threads.
    std::uint64_t hash() const;

    VarianceSchedule build_diffusion_schedule() const;
    std::vector<MorphVariant> parsed_variants() const;
};

// Fixed workspace layout under the config's output directory.
struct Workspace {
    std::string root;

    std::string config_path() const { return root + "/config.json"; }
    std::string manifest_path() const { return root + "/manifest.tsv"; }
    std::string dataset_dir() const { return root + "/dataset"; }
    std::string checkpoints_dir() const { return root + "/checkpoints"; }
    std::string morphs_dir() const { return root + "/morphs"; }
    std::string reports_dir() const { return root + "/reports"; }
    std::string scores_dir() const { return reports_dir() + "/scores"; }

    std::string denoiser_path() const { return checkpoints_dir() + "/denoiser.mlck"; }
    std::string embedder_path(const std::string& name) const {
        return checkpoints_dir() + "/" + name + ".mlck";
    }
    std::string mad_path() const { return checkpoints_dir() + "/mad.mlck"; }
    std::string autoencoder_path() const { return checkpoints_dir() + "/autoencoder.mlck"; }
    std::string pairs_path() const { return morphs_dir() + "/pairs.tsv"; }
    std::string morph_manifest_path() const { return morphs_dir() + "/manifest.tsv"; }
    std::string latents_path() const { return morphs_dir() + "/latents.mltc"; }
    std::string reference_embeddings_path(const std::string& embedder) const {
        return morphs_dir() + "/embeddings_" + embedder + ".tsv";
    }
};

// Append-only per-run log: timestamp, command, config hash, summary.
void append_manifest(const Workspace& ws, const ExperimentConfig& config,
                     const std::string& command, const std::string& summary);

// CLI verb implementations. Each writes its artifacts plus a manifest row.
void cmd_synth_data(const ExperimentConfig& config);
void cmd_train(const ExperimentConfig& config, const std::string& target);
void cmd_morph(const ExperimentConfig& config,
               const std::vector<std::pair<std::string, std::string>>& explicit_pairs,
               bool auto_select);
void cmd_evaluate(const ExperimentConfig& config, const std::string& mode);
void cmd_report(const ExperimentConfig& config);

// Shared loaders (throw DataError when a prerequisite artifact is missing).
ToyDataset load_workspace_dataset(const Workspace& ws);
std::vector<MorphEntry> load_morph_entries(const Workspace& ws);

// Instantiates the configured latent codec (loading the trained autoencoder
// checkpoint when configured).
std::unique_ptr<LatentCodec> build_codec(const ExperimentConfig& config, const Workspace& ws);

struct MorphManifestRow {
    std::string morph_id;
    std::string variant;
    std::string id_a, id_b;
    std::string src_image_a, src_image_b;
    double lambda = 0.5;
    double omega = 1.0;
    int steps = 50;
    std::uint64_t seed = 0;
    std::string path;
    std::uint64_t latent_hash = 0;
};
std::vector<MorphManifestRow> load_morph_manifest(const Workspace& ws);

}  // namespace morphlab
