// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/biometrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "morphlab/errors.hpp"

namespace morphlab {

PairSelection select_pairs(const std::vector<IdentityEmbedding>& embeddings,
                           const std::vector<std::string>& groups, int k_per_group) {
    if (embeddings.size() != groups.size()) {
        throw ParameterError("select_pairs: embeddings and groups must be parallel");
    }
    if (k_per_group < 1) throw ParameterError("select_pairs: k must be >= 1");

    std::set<std::string> group_names(groups.begin(), groups.end());
    PairSelection out;

    for (const std::string& g : group_names) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            if (groups[i] == g) members.push_back(i);
        }
        std::set<std::string> ids;
        for (std::size_t m : members) ids.insert(embeddings[m].source_id);
        if (ids.size() < 2) {
            throw ParameterError("select_pairs: group '" + g + "' has fewer than 2 identities");
        }

        // all cross-identity similarities, deduplicated by unordered id pair
        // keeping the highest similarity
        std::map<std::pair<std::string, std::string>, float> best;
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                const auto& ea = embeddings[members[i]];
                const auto& eb = embeddings[members[j]];
                if (ea.source_id == eb.source_id) continue;
                auto key = std::minmax(ea.source_id, eb.source_id);
                const float sim = static_cast<float>(cosine_similarity(ea.values, eb.values));
                auto it = best.find(key);
                if (it == best.end() || sim > it->second) best[key] = sim;
            }
        }

        std::vector<MorphPair> group_pairs;
        for (const auto& [key, sim] : best) {
            group_pairs.push_back(MorphPair{key.first, key.second, sim, g});
        }
        std::sort(group_pairs.begin(), group_pairs.end(), [](const MorphPair& a, const MorphPair& b) {
            if (a.similarity != b.similarity) return a.similarity > b.similarity;
            if (a.id_a != b.id_a) return a.id_a < b.id_a;
            return a.id_b < b.id_b;
        });
        if (k_per_group < static_cast<int>(group_pairs.size())) {
            group_pairs.resize(static_cast<std::size_t>(k_per_group));
        } else if (k_per_group > static_cast<int>(group_pairs.size())) {
            out.truncated = true;
        }
        out.pairs.insert(out.pairs.end(), group_pairs.begin(), group_pairs.end());
    }

    std::sort(out.pairs.begin(), out.pairs.end(), [](const MorphPair& a, const MorphPair& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        if (a.id_a != b.id_a) return a.id_a < b.id_a;
        return a.id_b < b.id_b;
    });
    return out;
}

double calibrate_threshold(const std::vector<float>& impostor_scores, double fmr_target) {
    if (impostor_scores.empty()) throw ParameterError("calibrate_threshold: empty impostor scores");
    if (!(fmr_target > 0.0 && fmr_target < 1.0)) {
        throw ParameterError("calibrate_threshold: fmr_target must be in (0, 1)");
    }
    std::vector<float> sorted = impostor_scores;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    // Candidates are the observed scores in ascending order; fraction(>= tau)
    // is non-increasing, so the first candidate satisfying the budget is the
    // smallest.
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && sorted[i] == sorted[i - 1]) continue;
        const std::size_t count_ge = n - i;
        if (static_cast<double>(count_ge) / static_cast<double>(n) <= fmr_target) {
            return sorted[i];
        }
    }
    return std::numeric_limits<double>::infinity();
}

namespace {

void check_cosine_range(const std::vector<float>& scores, const char* where) {
    for (float s : scores) {
        if (!(s >= -1.0f - 1e-5f && s <= 1.0f + 1e-5f)) {
            throw ParameterError(std::string(where) + ": cosine score outside [-1, 1]");
        }
    }
}

double subject_score(const std::vector<float>& probe_scores, const char* where) {
    if (probe_scores.empty()) throw ParameterError(std::string(where) + ": record without probes");
    check_cosine_range(probe_scores, where);
    return *std::max_element(probe_scores.begin(), probe_scores.end());
}

}  // namespace

double compute_mmpmr(const std::vector<MorphComparisonRecord>& records, double tau) {
    if (records.empty()) throw ParameterError("compute_mmpmr: empty records");
    std::size_t successes = 0;
    for (const auto& r : records) {
        const double sa = subject_score(r.scores_vs_a, "compute_mmpmr");
        const double sb = subject_score(r.scores_vs_b, "compute_mmpmr");
        if (std::min(sa, sb) >= tau) ++successes;
    }
    return static_cast<double>(successes) / static_cast<double>(records.size());
}

DetectionReport compute_detection_metrics(const std::vector<float>& bona_scores,
                                          const std::vector<float>& attack_scores,
                                          const std::vector<int>& bpcer_points_percent) {
    if (bona_scores.empty() || attack_scores.empty()) {
        throw ParameterError("compute_detection_metrics: empty score list");
    }

    std::vector<double> candidates;
    candidates.reserve(bona_scores.size() + attack_scores.size() + 1);
    for (float s : bona_scores) candidates.push_back(s);
    for (float s : attack_scores) candidates.push_back(s);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    candidates.push_back(std::numeric_limits<double>::infinity());

    std::vector<float> bona_sorted = bona_scores;
    std::vector<float> attack_sorted = attack_scores;
    std::sort(bona_sorted.begin(), bona_sorted.end());
    std::sort(attack_sorted.begin(), attack_sorted.end());
    const double nb = static_cast<double>(bona_sorted.size());
    const double na = static_cast<double>(attack_sorted.size());

    auto bpcer_at = [&](double tau) {
        const auto it = std::lower_bound(bona_sorted.begin(), bona_sorted.end(), tau);
        return static_cast<double>(bona_sorted.end() - it) / nb;
    };
    auto apcer_at = [&](double tau) {
        const auto it = std::lower_bound(attack_sorted.begin(), attack_sorted.end(), tau);
        return static_cast<double>(it - attack_sorted.begin()) / na;
    };

    DetectionReport report;
    double best_gap = std::numeric_limits<double>::infinity();
    for (double tau : candidates) {
        DetectionOperatingPoint pt;
        pt.tau = tau;
        pt.bpcer = bpcer_at(tau);
        pt.apcer = apcer_at(tau);
        report.trace.push_back(pt);
        const double gap = std::abs(pt.apcer - pt.bpcer);
        if (gap < best_gap) {
            best_gap = gap;
            report.eer_percent = 100.0 * (pt.apcer + pt.bpcer) / 2.0;
            report.eer_tau = tau;
        }
    }

    for (int point : bpcer_points_percent) {
        const double budget = static_cast<double>(point) / 100.0;
        double chosen_apcer = 1.0;
        for (double tau : candidates) {
            if (bpcer_at(tau) <= budget) {
                chosen_apcer = apcer_at(tau);
                break;
            }
        }
        report.apcer_at_bpcer_percent[point] = 100.0 * chosen_apcer;
    }
    return report;
}

VulnerabilityReport build_vulnerability_report(const std::vector<MorphEntry>& morphs,
                                               const std::vector<const IdentityEmbedder*>& embedders,
                                               const ToyDataset& dataset,
                                               const std::vector<double>& fmr_targets) {
    if (morphs.empty()) throw DataError("build_vulnerability_report: no morphs");
    if (embedders.empty()) throw DataError("build_vulnerability_report: no embedders");

    const std::vector<int> eval_idx = dataset.eval_image_indices();
    if (eval_idx.empty()) throw DataError("build_vulnerability_report: empty eval split");

    std::set<std::string> variants;
    for (const auto& m : morphs) variants.insert(m.variant);

    VulnerabilityReport report;
    report.fmr_targets = fmr_targets;

    for (const IdentityEmbedder* embedder : embedders) {
        // embed the eval split once
        std::vector<IdentityEmbedding> eval_emb(eval_idx.size());
        for (std::size_t i = 0; i < eval_idx.size(); ++i) {
            eval_emb[i] = embedder->embed(dataset.images[static_cast<std::size_t>(eval_idx[i])].pixels);
        }

        ScoreSet scores;
        for (std::size_t i = 0; i < eval_idx.size(); ++i) {
            for (std::size_t j = i + 1; j < eval_idx.size(); ++j) {
                const auto& a = dataset.images[static_cast<std::size_t>(eval_idx[i])];
                const auto& b = dataset.images[static_cast<std::size_t>(eval_idx[j])];
                const float sim =
                    static_cast<float>(cosine_similarity(eval_emb[i].values, eval_emb[j].values));
                if (a.identity_label == b.identity_label) {
                    scores.genuine.push_back(sim);
                } else {
                    scores.impostor.push_back(sim);
                }
            }
        }
        report.eval_scores[embedder->name()] = scores;

        std::vector<double> taus;
        for (double target : fmr_targets) taus.push_back(calibrate_threshold(scores.impostor, target));

        // probe lookup: identity string -> eval image indices
        std::map<std::string, std::vector<int>> probes_of;
        for (int idx : eval_idx) {
            const auto& img = dataset.images[static_cast<std::size_t>(idx)];
            probes_of[dataset.identity(img.identity_label).id_string()].push_back(idx);
        }

        for (const std::string& variant : variants) {
            std::vector<MorphComparisonRecord> records;
            for (const auto& m : morphs) {
                if (m.variant != variant) continue;
                MorphComparisonRecord rec;
                rec.morph_id = m.morph_id;
                rec.embedder_id = embedder->name();
                const IdentityEmbedding morph_emb = embedder->embed(m.image);
                auto gather = [&](const std::string& subject, const std::string& src_image,
                                  std::vector<float>& out) {
                    auto it = probes_of.find(subject);
                    if (it == probes_of.end()) {
                        throw DataError("build_vulnerability_report: no probes for " + subject);
                    }
                    for (int idx : it->second) {
                        const auto& probe = dataset.images[static_cast<std::size_t>(idx)];
                        if (probe.image_id == src_image) continue;  // exclude the generation source
                        const IdentityEmbedding pe = embedder->embed(probe.pixels);
                        out.push_back(static_cast<float>(cosine_similarity(morph_emb.values, pe.values)));
                    }
                    if (out.empty()) {
                        throw DataError("build_vulnerability_report: subject " + subject +
                                        " has no probe images besides the source");
                    }
                };
                gather(m.id_a, m.src_image_a, rec.scores_vs_a);
                gather(m.id_b, m.src_image_b, rec.scores_vs_b);
                records.push_back(std::move(rec));
            }
            if (records.empty()) continue;

            VulnerabilityRow row;
            row.embedder = embedder->name();
            row.variant = variant;
            row.fmr_targets = fmr_targets;
            row.taus = taus;
            row.n_morphs = static_cast<int>(records.size());
            for (double tau : taus) row.mmpmr.push_back(compute_mmpmr(records, tau));
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

std::string vulnerability_report_to_json(const VulnerabilityReport& report) {
    nlohmann::json j;
    j["polarity"] = kFrScorePolarity;
    j["fmr_targets"] = report.fmr_targets;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::json r;
        r["embedder"] = row.embedder;
        r["variant"] = row.variant;
        r["taus"] = row.taus;
        r["mmpmr"] = row.mmpmr;
        r["n_morphs"] = row.n_morphs;
        rows.push_back(r);
    }
    j["rows"] = rows;
    return j.dump(2);
}

std::string vulnerability_report_to_table(const VulnerabilityReport& report) {
    std::ostringstream os;
    os << "# " << kFrScorePolarity << "\n";
    os << "embedder            variant                   n     ";
    for (double t : report.fmr_targets) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "MMPMR@FMR%-7.3g", t * 100.0);
        os << buf;
    }
    os << "\n";
    for (const auto& row : report.rows) {
        char line[256];
        std::snprintf(line, sizeof(line), "%-20s%-26s%-6d", row.embedder.c_str(),
                      row.variant.c_str(), row.n_morphs);
        os << line;
        for (double v : row.mmpmr) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%-15.4f", v);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

std::string detection_reports_to_json(const std::map<std::string, DetectionReport>& by_variant,
                                      const std::string& detector_name) {
    nlohmann::json j;
    j["polarity"] = kMadScorePolarity;
    j["detector"] = detector_name;
    nlohmann::json rows = nlohmann::json::object();
    for (const auto& [variant, rep] : by_variant) {
        nlohmann::json r;
        r["eer_percent"] = rep.eer_percent;
        nlohmann::json ap = nlohmann::json::object();
        for (const auto& [pt, v] : rep.apcer_at_bpcer_percent) ap[std::to_string(pt)] = v;
        r["apcer_at_bpcer_percent"] = ap;
        nlohmann::json trace = nlohmann::json::array();
        for (const auto& op : rep.trace) {
            trace.push_back({{"tau", std::isfinite(op.tau) ? op.tau : 1e308},
                             {"apcer", op.apcer},
                             {"bpcer", op.bpcer}});
        }
        r["det_points"] = trace;
        rows[variant] = r;
    }
    j["variants"] = rows;
    return j.dump(2);
}

std::string detection_reports_to_table(const std::map<std::string, DetectionReport>& by_variant,
                                       const std::string& detector_name) {
    std::ostringstream os;
    os << "# " << kMadScorePolarity << "\n";
    os << "detector: " << detector_name << "\n";
    os << "variant                   EER%      ";
    if (!by_variant.empty()) {
        for (const auto& [pt, v] : by_variant.begin()->second.apcer_at_bpcer_percent) {
            (void)v;
            char buf[32];
            std::snprintf(buf, sizeof(buf), "APCER@B%-7d", pt);
            os << buf;
        }
    }
    os << "\n";
    for (const auto& [variant, rep] : by_variant) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-26s%-10.2f", variant.c_str(), rep.eer_percent);
        os << line;
        for (const auto& [pt, v] : rep.apcer_at_bpcer_percent) {
            (void)pt;
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%-14.2f", v);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace morphlab
