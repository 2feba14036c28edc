// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <set>
#include <sstream>

#include <json.hpp>

#include "morphlab/biometrics.hpp"
#include "morphlab/errors.hpp"
#include "morphlab/io.hpp"
#include "morphlab/rng.hpp"

namespace morphlab {

namespace {

using nlohmann::json;

json dataset_json(const DatasetConfig& c) {
    json j;
    j["n_identities"] = c.n_identities;
    j["samples_per_identity"] = c.samples_per_identity;
    j["image_size"] = c.image_size;
    j["eval_fraction"] = c.eval_fraction;
    j["jitter_strength"] = c.jitter_strength;
    j["seed"] = c.seed;
    return j;
}

DatasetConfig dataset_from_json(const json& j) {
    DatasetConfig c;
    c.n_identities = j.value("n_identities", c.n_identities);
    c.samples_per_identity = j.value("samples_per_identity", c.samples_per_identity);
    c.image_size = j.value("image_size", c.image_size);
    c.eval_fraction = j.value("eval_fraction", c.eval_fraction);
    c.jitter_strength = j.value("jitter_strength", c.jitter_strength);
    c.seed = j.value("seed", c.seed);
    return c;
}

json denoiser_json(const DenoiserConfig& c) {
    json j;
    j["latent_channels"] = c.latent_channels;
    j["latent_size"] = c.latent_size;
    j["base_channels"] = c.base_channels;
    j["num_down"] = c.num_down;
    j["cond_dim"] = c.cond_dim;
    j["time_dim"] = c.time_dim;
    j["attention_heads"] = c.attention_heads;
    j["init_seed"] = c.init_seed;
    return j;
}

DenoiserConfig denoiser_from_json(const json& j) {
    DenoiserConfig c;
    c.latent_channels = j.value("latent_channels", c.latent_channels);
    c.latent_size = j.value("latent_size", c.latent_size);
    c.base_channels = j.value("base_channels", c.base_channels);
    c.num_down = j.value("num_down", c.num_down);
    c.cond_dim = j.value("cond_dim", c.cond_dim);
    c.time_dim = j.value("time_dim", c.time_dim);
    c.attention_heads = j.value("attention_heads", c.attention_heads);
    c.init_seed = j.value("init_seed", c.init_seed);
    return c;
}

json denoiser_train_json(const DenoiserTrainConfig& c) {
    json j;
    j["steps"] = c.steps;
    j["batch_size"] = c.batch_size;
    j["lr"] = c.lr;
    j["cond_dropout"] = c.cond_dropout;
    j["grad_clip"] = c.grad_clip;
    j["seed"] = c.seed;
    j["log_every"] = c.log_every;
    return j;
}

DenoiserTrainConfig denoiser_train_from_json(const json& j) {
    DenoiserTrainConfig c;
    c.steps = j.value("steps", c.steps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.cond_dropout = j.value("cond_dropout", c.cond_dropout);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.seed = j.value("seed", c.seed);
    c.log_every = j.value("log_every", c.log_every);
    return c;
}

json embedder_spec_json(const EmbedderSpec& s) {
    json j;
    j["name"] = s.model.name;
    j["width"] = s.model.width;
    j["embed_dim"] = s.model.embed_dim;
    j["init_seed"] = s.model.init_seed;
    j["epochs"] = s.train.epochs;
    j["batch_size"] = s.train.batch_size;
    j["lr"] = s.train.lr;
    j["grad_clip"] = s.train.grad_clip;
    j["train_seed"] = s.train.seed;
    return j;
}

EmbedderSpec embedder_spec_from_json(const json& j) {
    EmbedderSpec s;
    s.model.name = j.value("name", s.model.name);
    s.model.width = j.value("width", s.model.width);
    s.model.embed_dim = j.value("embed_dim", s.model.embed_dim);
    s.model.init_seed = j.value("init_seed", s.model.init_seed);
    s.train.epochs = j.value("epochs", s.train.epochs);
    s.train.batch_size = j.value("batch_size", s.train.batch_size);
    s.train.lr = j.value("lr", s.train.lr);
    s.train.grad_clip = j.value("grad_clip", s.train.grad_clip);
    s.train.seed = j.value("train_seed", s.train.seed);
    return s;
}

json mad_json(const MadConfig& c, const MadTrainConfig& t, const std::string& train_variant) {
    json j;
    j["name"] = c.name;
    j["width"] = c.width;
    j["init_seed"] = c.init_seed;
    j["epochs"] = t.epochs;
    j["batch_size"] = t.batch_size;
    j["lr"] = t.lr;
    j["grad_clip"] = t.grad_clip;
    j["train_seed"] = t.seed;
    j["train_variant"] = train_variant;
    return j;
}

json codec_json(const CodecConfig& c) {
    json j;
    j["kind"] = c.kind;
    j["latent_channels"] = c.model.latent_channels;
    j["hidden_channels"] = c.model.hidden_channels;
    j["init_seed"] = c.model.init_seed;
    j["steps"] = c.train.steps;
    j["batch_size"] = c.train.batch_size;
    j["lr"] = c.train.lr;
    j["grad_clip"] = c.train.grad_clip;
    j["train_seed"] = c.train.seed;
    return j;
}

CodecConfig codec_from_json(const json& j) {
    CodecConfig c;
    c.kind = j.value("kind", c.kind);
    c.model.latent_channels = j.value("latent_channels", c.model.latent_channels);
    c.model.hidden_channels = j.value("hidden_channels", c.model.hidden_channels);
    c.model.init_seed = j.value("init_seed", c.model.init_seed);
    c.train.steps = j.value("steps", c.train.steps);
    c.train.batch_size = j.value("batch_size", c.train.batch_size);
    c.train.lr = j.value("lr", c.train.lr);
    c.train.grad_clip = j.value("grad_clip", c.train.grad_clip);
    c.train.seed = j.value("train_seed", c.train.seed);
    return c;
}

json morph_json(const MorphConfig& c) {
    json j;
    j["lambda"] = c.lambda;
    j["omega"] = c.omega;
    j["guidance_enabled"] = c.guidance_enabled;
    j["num_inference_steps"] = c.num_inference_steps;
    j["variant"] = to_string(c.variant);
    return j;
}

MorphConfig morph_from_json(const json& j) {
    MorphConfig c;
    c.lambda = j.value("lambda", c.lambda);
    c.omega = j.value("omega", c.omega);
    c.guidance_enabled = j.value("guidance_enabled", c.guidance_enabled);
    c.num_inference_steps = j.value("num_inference_steps", c.num_inference_steps);
    c.variant = morph_variant_from_string(j.value("variant", to_string(c.variant)));
    return c;
}

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", std::gmtime(&tt));
    return buf;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

std::string ExperimentConfig::to_json() const {
    json j;
    j["dataset"] = dataset_json(dataset);

    json sched;
    sched["kind"] = morphlab::to_string(schedule_kind);
    sched["T"] = schedule_steps;
    sched["beta_start"] = beta_start;
    sched["beta_end"] = beta_end;
    j["schedule"] = sched;
    j["num_inference_steps"] = num_inference_steps;

    j["denoiser"] = denoiser_json(denoiser);
    j["denoiser_train"] = denoiser_train_json(denoiser_train);
    j["codec"] = codec_json(codec);

    j["cond_embedder"] = embedder_spec_json(cond_embedder);
    json evals = json::array();
    for (const auto& e : eval_embedders) evals.push_back(embedder_spec_json(e));
    j["eval_embedders"] = evals;

    j["mad"] = mad_json(mad, mad_train, mad_train_variant);
    j["morph"] = morph_json(morph);
    j["morph_variants"] = morph_variants;
    j["morph_seeds"] = morph_seeds;
    j["pairs_total"] = pairs_total;
    j["fmr_targets"] = fmr_targets;
    j["bpcer_points"] = bpcer_points;
    j["threads"] = threads;
    j["output_dir"] = output_dir;
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    ExperimentConfig c = defaults();
    if (j.contains("dataset")) c.dataset = dataset_from_json(j["dataset"]);
    if (j.contains("schedule")) {
        const json& s = j["schedule"];
        c.schedule_kind = schedule_kind_from_string(s.value("kind", std::string("linear")));
        c.schedule_steps = s.value("T", c.schedule_steps);
        c.beta_start = s.value("beta_start", c.beta_start);
        c.beta_end = s.value("beta_end", c.beta_end);
    }
    c.num_inference_steps = j.value("num_inference_steps", c.num_inference_steps);
    if (j.contains("denoiser")) c.denoiser = denoiser_from_json(j["denoiser"]);
    if (j.contains("denoiser_train")) c.denoiser_train = denoiser_train_from_json(j["denoiser_train"]);
    if (j.contains("codec")) c.codec = codec_from_json(j["codec"]);
    if (j.contains("cond_embedder")) c.cond_embedder = embedder_spec_from_json(j["cond_embedder"]);
    if (j.contains("eval_embedders")) {
        c.eval_embedders.clear();
        for (const auto& e : j["eval_embedders"]) c.eval_embedders.push_back(embedder_spec_from_json(e));
    }
    if (j.contains("mad")) {
        const json& m = j["mad"];
        c.mad.name = m.value("name", c.mad.name);
        c.mad.width = m.value("width", c.mad.width);
        c.mad.init_seed = m.value("init_seed", c.mad.init_seed);
        c.mad_train.epochs = m.value("epochs", c.mad_train.epochs);
        c.mad_train.batch_size = m.value("batch_size", c.mad_train.batch_size);
        c.mad_train.lr = m.value("lr", c.mad_train.lr);
        c.mad_train.grad_clip = m.value("grad_clip", c.mad_train.grad_clip);
        c.mad_train.seed = m.value("train_seed", c.mad_train.seed);
        c.mad_train_variant = m.value("train_variant", c.mad_train_variant);
    }
    if (j.contains("morph")) c.morph = morph_from_json(j["morph"]);
    if (j.contains("morph_variants")) {
        c.morph_variants = j["morph_variants"].get<std::vector<std::string>>();
    }
    if (j.contains("morph_seeds")) c.morph_seeds = j["morph_seeds"].get<std::vector<std::uint64_t>>();
    c.pairs_total = j.value("pairs_total", c.pairs_total);
    if (j.contains("fmr_targets")) c.fmr_targets = j["fmr_targets"].get<std::vector<double>>();
    if (j.contains("bpcer_points")) c.bpcer_points = j["bpcer_points"].get<std::vector<int>>();
    c.threads = j.value("threads", c.threads);
    c.output_dir = j.value("output_dir", c.output_dir);
    return c;
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig c;
    c.cond_embedder.model.name = "embedder_cond";
    c.cond_embedder.model.init_seed = 11;
    c.cond_embedder.train.seed = 12;

    EmbedderSpec eval_a;
    eval_a.model.name = "embedder_eval_a";
    eval_a.model.width = 16;
    eval_a.model.init_seed = 23;
    eval_a.train.seed = 24;
    EmbedderSpec eval_b;
    eval_b.model.name = "embedder_eval_b";
    eval_b.model.width = 24;
    eval_b.model.init_seed = 37;
    eval_b.train.seed = 38;
    c.eval_embedders = {eval_a, eval_b};
    return c;
}

std::uint64_t ExperimentConfig::hash() const {
    ExperimentConfig canon = *this;
    canon.output_dir.clear();
    canon.threads = 0;
    return fnv1a(canon.to_json());
}

VarianceSchedule ExperimentConfig::build_diffusion_schedule() const {
    return build_schedule(schedule_steps, beta_start, beta_end, schedule_kind);
}

std::vector<MorphVariant> ExperimentConfig::parsed_variants() const {
    std::vector<MorphVariant> out;
    for (const auto& name : morph_variants) {
        if (name == "all") return all_morph_variants();
        out.push_back(morph_variant_from_string(name));
    }
    if (out.empty()) throw ParameterError("config: empty morph_variants");
    return out;
}

void append_manifest(const Workspace& ws, const ExperimentConfig& config,
                     const std::string& command, const std::string& summary) {
    ensure_dir(ws.root);
    std::string existing;
    if (file_exists(ws.manifest_path())) existing = read_text_file(ws.manifest_path());
    if (existing.empty()) existing = "# timestamp\tcommand\tconfig_hash\tsummary\n";
    std::ostringstream row;
    row << timestamp_now() << '\t' << command << '\t' << std::hex << config.hash() << std::dec
        << '\t' << summary << '\n';
    write_text_file(ws.manifest_path(), existing + row.str());
}

namespace {

Workspace open_workspace(const ExperimentConfig& config) {
    Workspace ws{config.output_dir};
    ensure_dir(ws.root);
    write_text_file(ws.config_path(), config.to_json());
    return ws;
}

std::unique_ptr<ToyEmbedder> require_embedder(const Workspace& ws, const std::string& name) {
    const std::string path = ws.embedder_path(name);
    if (!file_exists(path)) throw DataError("missing embedder checkpoint " + path + "; run train first");
    return load_embedder(path);
}

std::unique_ptr<DenoiserModel> require_denoiser(const Workspace& ws) {
    if (!file_exists(ws.denoiser_path())) {
        throw DataError("missing denoiser checkpoint; run train --target denoiser first");
    }
    return load_denoiser(ws.denoiser_path());
}

// One reference embedding per eval identity (its first eval image), the same
// convention the morph sources use.
std::vector<IdentityEmbedding> identity_reference_embeddings(const ToyDataset& dataset,
                                                             const IdentityEmbedder& embedder,
                                                             std::vector<std::string>* groups) {
    std::vector<IdentityEmbedding> out;
    for (int label : dataset.eval_labels()) {
        const auto indices = dataset.image_indices_of(label);
        const ToyImage& img = dataset.images[static_cast<std::size_t>(indices.front())];
        IdentityEmbedding e = embedder.embed(img.pixels);
        e.source_id = dataset.identity(label).id_string();
        out.push_back(std::move(e));
        if (groups) groups->push_back(dataset.identity(label).group);
    }
    return out;
}

}  // namespace

std::unique_ptr<LatentCodec> build_codec(const ExperimentConfig& config, const Workspace& ws) {
    if (config.codec.kind == "identity") return std::make_unique<IdentityCodec>();
    if (config.codec.kind == "autoencoder") {
        if (!file_exists(ws.autoencoder_path())) {
            throw DataError("missing autoencoder checkpoint; run train --target autoencoder");
        }
        return load_autoencoder(ws.autoencoder_path());
    }
    throw ParameterError("unknown codec kind '" + config.codec.kind + "'");
}

ToyDataset load_workspace_dataset(const Workspace& ws) {
    if (!file_exists(ws.dataset_dir() + "/dataset.json")) {
        throw DataError("missing dataset; run synth-data first");
    }
    return load_dataset(ws.dataset_dir());
}

void cmd_synth_data(const ExperimentConfig& config) {
    Workspace ws = open_workspace(config);
    ToyDataset ds = generate_dataset(config.dataset);
    save_dataset(ws.dataset_dir(), ds);
    std::ostringstream summary;
    summary << "identities=" << ds.identities.size() << " images=" << ds.images.size();
    append_manifest(ws, config, "synth-data", summary.str());
}

void cmd_train(const ExperimentConfig& config, const std::string& target) {
    Workspace ws = open_workspace(config);
    ensure_dir(ws.checkpoints_dir());
    ToyDataset ds = load_workspace_dataset(ws);

    if (target == "embedder") {
        std::ostringstream summary;
        auto train_one = [&](const EmbedderSpec& spec) {
            EmbedderConfig cfg = spec.model;
            cfg.image_size = ds.config.image_size;
            EmbedderTrainResult stats;
            auto model = train_embedder(ds, cfg, spec.train, &stats);
            save_embedder(ws.embedder_path(cfg.name), *model);
            summary << cfg.name << ": acc=" << format_double(stats.holdout_accuracy) << " ";
        };
        train_one(config.cond_embedder);
        for (const auto& spec : config.eval_embedders) train_one(spec);
        append_manifest(ws, config, "train embedder", summary.str());
        return;
    }

    if (target == "denoiser") {
        auto cond = require_embedder(ws, config.cond_embedder.model.name);
        VarianceSchedule schedule = config.build_diffusion_schedule();
        std::unique_ptr<LatentCodec> codec = build_codec(config, ws);
        const std::vector<int> lshape =
            codec->latent_shape({config.denoiser.latent_channels, ds.config.image_size,
                                 ds.config.image_size});
        DenoiserConfig dcfg = config.denoiser;
        dcfg.latent_channels = lshape[0];
        dcfg.latent_size = lshape[1];
        DenoiserModel model(dcfg);
        TrainStats stats =
            train_denoiser(model, ds, *cond, schedule, config.denoiser_train, codec.get());
        save_denoiser(ws.denoiser_path(), model);
        std::ostringstream summary;
        summary << "first_loss=" << format_double(stats.first_loss)
                << " final_loss=" << format_double(stats.final_loss)
                << " codec=" << codec->name();
        append_manifest(ws, config, "train denoiser", summary.str());
        return;
    }

    if (target == "autoencoder") {
        AutoencoderConfig acfg = config.codec.model;
        acfg.image_size = ds.config.image_size;
        ConvAutoencoder ae(acfg);
        std::vector<Tensor> images;
        for (int idx : ds.train_image_indices()) {
            images.push_back(ds.images[static_cast<std::size_t>(idx)].pixels);
        }
        const double final_loss = train_autoencoder(ae, images, config.codec.train);
        save_autoencoder(ws.autoencoder_path(), ae);
        std::ostringstream summary;
        summary << "final_loss=" << format_double(final_loss);
        append_manifest(ws, config, "train autoencoder", summary.str());
        return;
    }

    if (target == "mad") {
        std::vector<MorphEntry> morphs = load_morph_entries(ws);
        if (morphs.empty()) throw DataError("train mad: no morphs; run morph first");

        // bona fide = train-split images; attacks = the configured training
        // variant restricted to even-indexed pairs (odd pairs stay held out
        // for cross-attack evaluation)
        std::vector<Tensor> bona;
        for (int idx : ds.train_image_indices()) {
            bona.push_back(ds.images[static_cast<std::size_t>(idx)].pixels);
        }
        std::set<std::string> train_pairs;
        {
            int pair_index = 0;
            std::set<std::string> seen;
            for (const auto& m : morphs) {
                const std::string key = m.id_a + "+" + m.id_b;
                if (seen.insert(key).second) {
                    if (pair_index % 2 == 0) train_pairs.insert(key);
                    ++pair_index;
                }
            }
        }
        std::vector<Tensor> attacks;
        for (const auto& m : morphs) {
            if (m.variant != config.mad_train_variant) continue;
            if (!train_pairs.count(m.id_a + "+" + m.id_b)) continue;
            attacks.push_back(m.image);
        }
        if (attacks.empty()) {
            throw DataError("train mad: no morphs of variant " + config.mad_train_variant);
        }
        MadConfig mcfg = config.mad;
        mcfg.image_size = ds.config.image_size;
        MadTrainResult stats;
        auto model = train_mad_detector(bona, attacks, mcfg, config.mad_train, &stats);
        save_mad(ws.mad_path(), *model);
        std::ostringstream summary;
        summary << "bona=" << bona.size() << " attacks=" << attacks.size() << " final_loss="
                << format_double(stats.epoch_losses.empty() ? 0.0 : stats.epoch_losses.back());
        append_manifest(ws, config, "train mad", summary.str());
        return;
    }

    throw ParameterError("cmd_train: unknown target '" + target + "'");
}

void cmd_morph(const ExperimentConfig& config,
               const std::vector<std::pair<std::string, std::string>>& explicit_pairs,
               bool auto_select) {
    Workspace ws = open_workspace(config);
    ensure_dir(ws.morphs_dir());
    ensure_dir(ws.morphs_dir() + "/images");
    ToyDataset ds = load_workspace_dataset(ws);
    auto cond = require_embedder(ws, config.cond_embedder.model.name);
    auto denoiser = require_denoiser(ws);
    VarianceSchedule schedule = config.build_diffusion_schedule();
    std::unique_ptr<LatentCodec> codec_ptr = build_codec(config, ws);
    const LatentCodec& codec = *codec_ptr;

    std::vector<MorphPair> pairs;
    if (auto_select) {
        std::vector<std::string> groups;
        std::vector<IdentityEmbedding> refs = identity_reference_embeddings(ds, *cond, &groups);

        // export the reference embeddings, then select pairs from the
        // exported records
        write_embeddings_tsv(ws.reference_embeddings_path(cond->name()), refs);
        refs = read_embeddings_tsv(ws.reference_embeddings_path(cond->name()));

        // keep only groups that can form a pair
        std::map<std::string, int> group_counts;
        for (const auto& g : groups) ++group_counts[g];
        std::vector<IdentityEmbedding> usable_refs;
        std::vector<std::string> usable_groups;
        for (std::size_t i = 0; i < refs.size(); ++i) {
            if (group_counts[groups[i]] >= 2) {
                usable_refs.push_back(refs[i]);
                usable_groups.push_back(groups[i]);
            }
        }
        if (usable_refs.empty()) throw DataError("cmd_morph: no attribute group has 2 identities");

        std::set<std::string> group_names(usable_groups.begin(), usable_groups.end());
        const int k = static_cast<int>(
            std::ceil(static_cast<double>(config.pairs_total) / static_cast<double>(group_names.size())));
        PairSelection sel = select_pairs(usable_refs, usable_groups, k);
        pairs = sel.pairs;
        if (static_cast<int>(pairs.size()) > config.pairs_total) {
            pairs.resize(static_cast<std::size_t>(config.pairs_total));
        }
    } else {
        if (explicit_pairs.empty()) throw ParameterError("cmd_morph: no pairs given");
        for (const auto& [a, b] : explicit_pairs) {
            MorphPair p;
            p.id_a = std::min(a, b);
            p.id_b = std::max(a, b);
            p.group = "explicit";
            pairs.push_back(p);
        }
    }

    {
        std::ostringstream os;
        os << "# id_a\tid_b\tsimilarity\tgroup\n";
        for (const auto& p : pairs) {
            os << p.id_a << '\t' << p.id_b << '\t' << format_double(p.similarity) << '\t' << p.group
               << '\n';
        }
        write_text_file(ws.pairs_path(), os.str());
    }

    const std::vector<MorphVariant> variants = config.parsed_variants();
    InversionCache inversions =
        precompute_inversions(pairs, ds, *cond, *denoiser, codec, schedule,
                              config.morph.num_inference_steps, config.threads);
    {
        std::map<std::string, Tensor> persisted;
        for (const auto& [image_id, latent] : inversions) persisted[image_id] = latent.values;
        if (!persisted.empty()) write_tensor_container(ws.latents_path(), persisted);
    }

    std::ostringstream manifest;
    manifest << "# morph_id\tvariant\tid_a\tid_b\tsrc_image_a\tsrc_image_b\tlambda\tomega\tsteps\tseed\tpath\tlatent_hash\n";
    std::size_t written = 0;
    for (std::uint64_t seed : config.morph_seeds) {
        std::vector<MorphResult> results;
        generate_morph_set(pairs, variants, config.morph, seed, ds, *cond, *denoiser, codec,
                           schedule, &inversions, config.threads, &results);
        for (const auto& r : results) {
            const std::string rel = "images/" + r.morph_id + ".pgm";
            write_pgm(ws.morphs_dir() + "/" + rel, r.image);
            manifest << r.morph_id << '\t' << to_string(r.config.variant) << '\t' << r.id_a << '\t'
                     << r.id_b << '\t' << r.src_image_a << '\t' << r.src_image_b << '\t'
                     << format_double(r.config.lambda) << '\t' << format_double(r.config.omega)
                     << '\t' << r.config.num_inference_steps << '\t' << r.config.seed << '\t' << rel
                     << '\t' << std::hex << r.initial_latent_hash << std::dec << '\n';
            ++written;
        }
    }
    write_text_file(ws.morph_manifest_path(), manifest.str());

    std::ostringstream summary;
    summary << "pairs=" << pairs.size() << " variants=" << variants.size()
            << " seeds=" << config.morph_seeds.size() << " morphs=" << written;
    append_manifest(ws, config, auto_select ? "morph --auto" : "morph", summary.str());
}

std::vector<MorphManifestRow> load_morph_manifest(const Workspace& ws) {
    if (!file_exists(ws.morph_manifest_path())) {
        throw DataError("missing morph manifest; run morph first");
    }
    std::vector<MorphManifestRow> rows;
    std::istringstream is(read_text_file(ws.morph_manifest_path()));
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        MorphManifestRow r;
        std::string tok;
        std::getline(ls, r.morph_id, '\t');
        std::getline(ls, r.variant, '\t');
        std::getline(ls, r.id_a, '\t');
        std::getline(ls, r.id_b, '\t');
        std::getline(ls, r.src_image_a, '\t');
        std::getline(ls, r.src_image_b, '\t');
        std::getline(ls, tok, '\t');
        r.lambda = std::stod(tok);
        std::getline(ls, tok, '\t');
        r.omega = std::stod(tok);
        std::getline(ls, tok, '\t');
        r.steps = std::stoi(tok);
        std::getline(ls, tok, '\t');
        r.seed = std::stoull(tok);
        std::getline(ls, r.path, '\t');
        std::getline(ls, tok, '\t');
        r.latent_hash = std::stoull(tok, nullptr, 16);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<MorphEntry> load_morph_entries(const Workspace& ws) {
    std::vector<MorphEntry> out;
    for (const auto& row : load_morph_manifest(ws)) {
        MorphEntry e;
        e.morph_id = row.morph_id;
        e.variant = row.variant;
        e.id_a = row.id_a;
        e.id_b = row.id_b;
        e.src_image_a = row.src_image_a;
        e.src_image_b = row.src_image_b;
        e.image = read_pgm(ws.morphs_dir() + "/" + row.path);
        out.push_back(std::move(e));
    }
    return out;
}

namespace {

void write_eval_score_files(const Workspace& ws, const VulnerabilityReport& report) {
    for (const auto& [embedder, scores] : report.eval_scores) {
        std::ostringstream os;
        os << "# " << kFrScorePolarity << "\n# type\tscore\tembedder\n";
        for (float s : scores.genuine) os << "genuine\t" << format_double(s) << '\t' << embedder << '\n';
        for (float s : scores.impostor) os << "impostor\t" << format_double(s) << '\t' << embedder << '\n';
        write_text_file(ws.scores_dir() + "/eval_scores_" + embedder + ".tsv", os.str());
    }
}

}  // namespace

void cmd_evaluate(const ExperimentConfig& config, const std::string& mode) {
    Workspace ws = open_workspace(config);
    ensure_dir(ws.reports_dir());
    ensure_dir(ws.scores_dir());
    ToyDataset ds = load_workspace_dataset(ws);
    std::vector<MorphEntry> all_morphs = load_morph_entries(ws);
    if (all_morphs.empty()) throw DataError("cmd_evaluate: empty morph set");
    std::vector<MorphManifestRow> manifest = load_morph_manifest(ws);

    if (mode == "vulnerability") {
        std::vector<std::unique_ptr<ToyEmbedder>> embedders;
        std::vector<const IdentityEmbedder*> views;
        for (const auto& spec : config.eval_embedders) {
            embedders.push_back(require_embedder(ws, spec.model.name));
            views.push_back(embedders.back().get());
        }

        // group morphs by generation seed via the manifest
        std::map<std::uint64_t, std::vector<MorphEntry>> by_seed;
        std::map<std::string, std::uint64_t> seed_of;
        for (const auto& row : manifest) seed_of[row.morph_id] = row.seed;
        for (const auto& m : all_morphs) by_seed[seed_of.at(m.morph_id)].push_back(m);

        std::ostringstream summary;
        for (const auto& [seed, morphs] : by_seed) {
            VulnerabilityReport report =
                build_vulnerability_report(morphs, views, ds, config.fmr_targets);
            const std::string stem = ws.reports_dir() + "/vulnerability_s" + std::to_string(seed);
            write_text_file(stem + ".json", vulnerability_report_to_json(report));
            write_text_file(stem + ".txt", vulnerability_report_to_table(report));
            write_eval_score_files(ws, report);

            // per-morph comparison scores for the recomputation oracle
            std::ostringstream os;
            os << "# " << kFrScorePolarity << "\n# morph_id\tvariant\tsubject\tscore\tembedder\n";
            for (const auto& m : morphs) {
                for (const auto* view : views) {
                    const IdentityEmbedding me = view->embed(m.image);
                    auto emit = [&](const std::string& subject, const std::string& src) {
                        for (int label : ds.eval_labels()) {
                            if (ds.identity(label).id_string() != subject) continue;
                            for (int idx : ds.image_indices_of(label)) {
                                const auto& probe = ds.images[static_cast<std::size_t>(idx)];
                                if (probe.image_id == src) continue;
                                const IdentityEmbedding pe = view->embed(probe.pixels);
                                os << m.morph_id << '\t' << m.variant << '\t' << subject << '\t'
                                   << format_double(cosine_similarity(me.values, pe.values)) << '\t'
                                   << view->name() << '\n';
                            }
                        }
                    };
                    emit(m.id_a, m.src_image_a);
                    emit(m.id_b, m.src_image_b);
                }
            }
            write_text_file(ws.scores_dir() + "/morph_scores_s" + std::to_string(seed) + ".tsv",
                            os.str());
            summary << "s" << seed << ":rows=" << report.rows.size() << " ";
        }
        append_manifest(ws, config, "evaluate vulnerability", summary.str());
        return;
    }

    if (mode == "detectability") {
        if (!file_exists(ws.mad_path())) throw DataError("missing mad checkpoint; run train --target mad");
        auto detector = load_mad(ws.mad_path());

        // held-out half of the pair list (odd indices), mirroring training
        std::set<std::string> train_pairs;
        {
            int pair_index = 0;
            std::set<std::string> seen;
            for (const auto& m : all_morphs) {
                const std::string key = m.id_a + "+" + m.id_b;
                if (seen.insert(key).second) {
                    if (pair_index % 2 == 0) train_pairs.insert(key);
                    ++pair_index;
                }
            }
        }

        std::vector<float> bona_scores;
        for (int idx : ds.eval_image_indices()) {
            bona_scores.push_back(
                static_cast<float>(detector->score(ds.images[static_cast<std::size_t>(idx)].pixels)));
        }

        std::set<std::string> variants;
        for (const auto& m : all_morphs) variants.insert(m.variant);

        std::map<std::string, DetectionReport> reports;
        std::ostringstream score_os;
        score_os << "# " << kMadScorePolarity << "\n# kind\tid\tscore\tdetector\n";
        for (int idx : ds.eval_image_indices()) {
            const auto& img = ds.images[static_cast<std::size_t>(idx)];
            score_os << "bona\t" << img.image_id << '\t'
                     << format_double(detector->score(img.pixels)) << '\t' << detector->config().name
                     << '\n';
        }
        for (const std::string& variant : variants) {
            std::vector<float> attack_scores;
            for (const auto& m : all_morphs) {
                if (m.variant != variant) continue;
                if (train_pairs.count(m.id_a + "+" + m.id_b)) continue;  // cross-attack protocol
                const float s = static_cast<float>(detector->score(m.image));
                attack_scores.push_back(s);
                score_os << "attack\t" << m.morph_id << '\t' << format_double(s) << '\t'
                         << detector->config().name << '\n';
            }
            if (attack_scores.empty()) continue;
            reports[variant] = compute_detection_metrics(bona_scores, attack_scores, config.bpcer_points);
        }
        if (reports.empty()) throw DataError("cmd_evaluate: no held-out morphs to score");

        write_text_file(ws.reports_dir() + "/detectability.json",
                        detection_reports_to_json(reports, detector->config().name));
        write_text_file(ws.reports_dir() + "/detectability.txt",
                        detection_reports_to_table(reports, detector->config().name));
        write_text_file(ws.scores_dir() + "/mad_scores.tsv", score_os.str());

        std::ostringstream summary;
        for (const auto& [variant, rep] : reports) {
            summary << variant << ":EER=" << format_double(rep.eer_percent) << "% ";
        }
        append_manifest(ws, config, "evaluate detectability", summary.str());
        return;
    }

    throw ParameterError("cmd_evaluate: unknown mode '" + mode + "'");
}

void cmd_report(const ExperimentConfig& config) {
    Workspace ws{config.output_dir};
    if (!file_exists(ws.reports_dir())) throw DataError("cmd_report: no reports directory");
    std::ostringstream out;
    namespace fs = std::filesystem;
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(ws.reports_dir())) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            names.push_back(entry.path().string());
        }
    }
    std::sort(names.begin(), names.end());
    for (const auto& name : names) {
        out << "==== " << fs::path(name).filename().string() << " ====\n"
            << read_text_file(name) << "\n";
    }
    std::fputs(out.str().c_str(), stdout);
    append_manifest(ws, config, "report", "tables=" + std::to_string(names.size()));
}

}  // namespace morphlab
