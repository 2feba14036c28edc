// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "morphlab/errors.hpp"
#include "morphlab/experiment.hpp"
#include "morphlab/io.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string output_dir;
    std::optional<double> lambda;
    std::optional<double> omega;
    std::optional<int> steps;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config JSON (defaults when omitted)");
    cmd->add_option("--out", opts.output_dir, "output directory override");
    cmd->add_option("--lambda", opts.lambda, "interpolation weight of source A");
    cmd->add_option("--omega", opts.omega, "guidance strength");
    cmd->add_option("--steps", opts.steps, "inference steps override");
    cmd->add_option("--seed", opts.seed, "morph seed override (replaces the seed list)");
    cmd->add_option("--threads", opts.threads, "worker threads (0 = auto)");
}

morphlab::ExperimentConfig resolve_config(const CommonOpts& opts) {
    morphlab::ExperimentConfig config = morphlab::ExperimentConfig::defaults();
    if (!opts.config_path.empty()) {
        config = morphlab::ExperimentConfig::from_json(morphlab::read_text_file(opts.config_path));
    }
    if (!opts.output_dir.empty()) config.output_dir = opts.output_dir;
    if (opts.lambda) config.morph.lambda = *opts.lambda;
    if (opts.omega) config.morph.omega = *opts.omega;
    if (opts.steps) {
        config.morph.num_inference_steps = *opts.steps;
        config.num_inference_steps = *opts.steps;
    }
    if (opts.seed) config.morph_seeds = {*opts.seed};
    if (opts.threads) config.threads = *opts.threads;
    return config;
}

std::vector<std::pair<std::string, std::string>> parse_pairs(const std::vector<std::string>& raw) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& item : raw) {
        const auto sep = item.find(':');
        if (sep == std::string::npos || sep == 0 || sep + 1 == item.size()) {
            throw morphlab::ParameterError("bad pair '" + item + "', expected idA:idB");
        }
        pairs.emplace_back(item.substr(0, sep), item.substr(sep + 1));
    }
    return pairs;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"morphlab: desk-scale diffusion face-morphing laboratory"};
    app.require_subcommand(1);

    CommonOpts synth_opts, train_opts, morph_opts, eval_opts, report_opts;

    CLI::App* synth = app.add_subcommand("synth-data", "generate the synthetic identity dataset");
    add_common(synth, synth_opts);

    CLI::App* train = app.add_subcommand("train", "train a model");
    add_common(train, train_opts);
    std::string target = "denoiser";
    train->add_option("--target", target, "denoiser | embedder | mad")->required();

    CLI::App* morph = app.add_subcommand("morph", "generate morphs");
    add_common(morph, morph_opts);
    std::vector<std::string> raw_pairs;
    bool auto_select = false;
    std::string variant_override;
    morph->add_option("--pair", raw_pairs, "explicit pair idA:idB (repeatable)");
    morph->add_flag("--auto", auto_select, "auto-select most similar pairs per attribute group");
    morph->add_option("--variant", variant_override,
                      "single variant or 'all' (overrides config list)");

    CLI::App* evaluate = app.add_subcommand("evaluate", "run the evaluation protocol");
    add_common(evaluate, eval_opts);
    std::string mode;
    evaluate->add_option("--mode", mode, "vulnerability | detectability")->required();

    CLI::App* report = app.add_subcommand("report", "print the stored report tables");
    add_common(report, report_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            morphlab::cmd_synth_data(resolve_config(synth_opts));
        } else if (train->parsed()) {
            morphlab::cmd_train(resolve_config(train_opts), target);
        } else if (morph->parsed()) {
            morphlab::ExperimentConfig config = resolve_config(morph_opts);
            if (!variant_override.empty()) config.morph_variants = {variant_override};
            morphlab::cmd_morph(config, parse_pairs(raw_pairs), auto_select);
        } else if (evaluate->parsed()) {
            morphlab::cmd_evaluate(resolve_config(eval_opts), mode);
        } else if (report->parsed()) {
            morphlab::cmd_report(resolve_config(report_opts));
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
