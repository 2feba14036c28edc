// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace morphlab {

enum class ScheduleKind { linear, cosine };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& s);

// Noise variance schedule over T discrete steps. Timestep convention:
// beta(t)/alpha(t) are defined for t in [1, T]; alpha_bar(t) for t in [0, T]
// with alpha_bar(0) = 1 (t = 0 is the clean latent). Scalars are kept in
// double so the running products stay accurate over long schedules.
class VarianceSchedule {
public:
    int num_steps() const { return num_steps_; }
    double beta(int t) const;
    double alpha(int t) const;
    double alpha_bar(int t) const;
    ScheduleKind kind() const { return kind_; }
    double beta_start() const { return beta_start_; }
    double beta_end() const { return beta_end_; }

    // Ascending grid of S+1 timesteps t_0 = 0 < t_1 < ... < t_S = T, evenly
    // spaced. Sampling walks it backwards, inversion forwards.
    std::vector<int> timestep_grid(int num_inference_steps) const;

    // Structured-text round trip (keys: kind, T, beta_start, beta_end).
    std::string to_json() const;
    static VarianceSchedule from_json(const std::string& text);

    friend VarianceSchedule build_schedule(int num_steps, double beta_start, double beta_end,
                                           ScheduleKind kind);

private:
    VarianceSchedule() = default;

    int num_steps_ = 0;
    ScheduleKind kind_ = ScheduleKind::linear;
    double beta_start_ = 0.0;
    double beta_end_ = 0.0;
    std::vector<double> betas_;       // betas_[t-1] = beta_t
    std::vector<double> alpha_bars_;  // alpha_bars_[t], size T+1, alpha_bars_[0] = 1
};

VarianceSchedule build_schedule(int num_steps, double beta_start, double beta_end,
                                ScheduleKind kind);

}  // namespace morphlab
