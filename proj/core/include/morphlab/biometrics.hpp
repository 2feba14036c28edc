// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "morphlab/identity.hpp"
#include "morphlab/synthetic.hpp"
#include "morphlab/tensor.hpp"

namespace morphlab {

// Score polarity, fixed project-wide: verification scores are cosine
// similarities (higher = same identity); detector scores are attack
// likelihoods (higher = attack).
inline constexpr const char* kFrScorePolarity = "FR scores: cosine similarity, higher = same identity";
inline constexpr const char* kMadScorePolarity = "MAD scores: attack likelihood, higher = attack";

struct ScoreSet {
    std::vector<float> genuine;
    std::vector<float> impostor;
};

struct MorphPair {
    std::string id_a;
    std::string id_b;
    float similarity = 0.0f;
    std::string group;
};

struct PairSelection {
    std::vector<MorphPair> pairs;  // descending similarity, ties by lexicographic ids
    bool truncated = false;        // set when k exceeded the available pairs of a group
};

// Top-k most similar cross-identity pairs within each attribute group.
// `embeddings` holds one embedding per identity (source_id = identity label);
// `groups` is parallel to it.
PairSelection select_pairs(const std::vector<IdentityEmbedding>& embeddings,
                           const std::vector<std::string>& groups, int k_per_group);

// Smallest threshold tau drawn from the observed scores (plus +infinity) such
// that fraction(impostor >= tau) <= fmr_target. A match is declared when
// score >= tau.
double calibrate_threshold(const std::vector<float>& impostor_scores, double fmr_target);

struct MorphComparisonRecord {
    std::string morph_id;
    std::vector<float> scores_vs_a;  // one entry per probe of subject A
    std::vector<float> scores_vs_b;
    std::string embedder_id;
};

// Min-rule over the two subjects, max over each subject's probes: a morph
// succeeds when min_subject(max_probe(score)) >= tau.
double compute_mmpmr(const std::vector<MorphComparisonRecord>& records, double tau);

struct DetectionOperatingPoint {
    double tau = 0.0;
    double apcer = 0.0;  // fraction
    double bpcer = 0.0;  // fraction
};

struct DetectionReport {
    double eer_percent = 0.0;
    double eer_tau = 0.0;
    std::map<int, double> apcer_at_bpcer_percent;  // operating point % -> APCER %
    std::vector<DetectionOperatingPoint> trace;    // exhaustive threshold sweep
};

// Classification rule: attack if score >= tau. BPCER(tau) = frac(bona >= tau),
// APCER(tau) = frac(attack < tau). The EER threshold minimizes |APCER - BPCER|
// over the observed-score sweep; the reported EER is their mean there. Each
// APCER@BPCER=x% uses the smallest tau with BPCER <= x%.
DetectionReport compute_detection_metrics(const std::vector<float>& bona_scores,
                                          const std::vector<float>& attack_scores,
                                          const std::vector<int>& bpcer_points_percent = {1, 10, 20});

struct MorphEntry {
    std::string morph_id;
    std::string variant;
    std::string id_a;  // identity string of source A
    std::string id_b;
    std::string src_image_a;  // image id used for generation (excluded from probes)
    std::string src_image_b;
    Tensor image;
};

struct VulnerabilityRow {
    std::string embedder;
    std::string variant;
    std::vector<double> fmr_targets;
    std::vector<double> taus;    // parallel to fmr_targets
    std::vector<double> mmpmr;   // parallel to fmr_targets
    int n_morphs = 0;
};

struct VulnerabilityReport {
    std::vector<double> fmr_targets;
    std::vector<VulnerabilityRow> rows;
    std::map<std::string, ScoreSet> eval_scores;  // per embedder, from the eval split
};

// Full vulnerability protocol: per embedder, calibrate thresholds on the
// eval-split impostor distribution, score every morph against probe images of
// both its sources, and report MMPMR per variant and threshold.
VulnerabilityReport build_vulnerability_report(const std::vector<MorphEntry>& morphs,
                                               const std::vector<const IdentityEmbedder*>& embedders,
                                               const ToyDataset& dataset,
                                               const std::vector<double>& fmr_targets = {0.01, 0.001});

std::string vulnerability_report_to_json(const VulnerabilityReport& report);
std::string vulnerability_report_to_table(const VulnerabilityReport& report);

// Detectability reports keyed by morph variant.
std::string detection_reports_to_json(const std::map<std::string, DetectionReport>& by_variant,
                                      const std::string& detector_name);
std::string detection_reports_to_table(const std::map<std::string, DetectionReport>& by_variant,
                                       const std::string& detector_name);

}  // namespace morphlab
