// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/schedule.hpp"

#include <cmath>
#include <numbers>

#include <json.hpp>

#include "morphlab/errors.hpp"

namespace morphlab {

std::string to_string(ScheduleKind kind) {
    return kind == ScheduleKind::linear ? "linear" : "cosine";
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "linear") return ScheduleKind::linear;
    if (s == "cosine") return ScheduleKind::cosine;
    throw ParameterError("unknown schedule kind: " + s);
}

double VarianceSchedule::beta(int t) const {
    if (t < 1 || t > num_steps_) throw ParameterError("beta: timestep out of range");
    return betas_[static_cast<std::size_t>(t - 1)];
}

double VarianceSchedule::alpha(int t) const {
    return 1.0 - beta(t);
}

double VarianceSchedule::alpha_bar(int t) const {
    if (t < 0 || t > num_steps_) throw ParameterError("alpha_bar: timestep out of range");
    return alpha_bars_[static_cast<std::size_t>(t)];
}

std::vector<int> VarianceSchedule::timestep_grid(int num_inference_steps) const {
    if (num_inference_steps < 1 || num_inference_steps > num_steps_) {
        throw ParameterError("timestep_grid: num_inference_steps must be in [1, T]");
    }
    std::vector<int> grid(static_cast<std::size_t>(num_inference_steps) + 1);
    for (int i = 0; i <= num_inference_steps; ++i) {
        grid[static_cast<std::size_t>(i)] = static_cast<int>(std::llround(
            static_cast<double>(i) * static_cast<double>(num_steps_) / num_inference_steps));
    }
    return grid;
}

std::string VarianceSchedule::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind_);
    j["T"] = num_steps_;
    j["beta_start"] = beta_start_;
    j["beta_end"] = beta_end_;
    return j.dump(2);
}

VarianceSchedule VarianceSchedule::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    return build_schedule(j.at("T").get<int>(), j.at("beta_start").get<double>(),
                          j.at("beta_end").get<double>(),
                          schedule_kind_from_string(j.at("kind").get<std::string>()));
}

VarianceSchedule build_schedule(int num_steps, double beta_start, double beta_end,
                                ScheduleKind kind) {
    if (num_steps < 1) throw ParameterError("build_schedule: T must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
        throw ParameterError("build_schedule: require 0 < beta_start <= beta_end < 1");
    }

    VarianceSchedule s;
    s.num_steps_ = num_steps;
    s.kind_ = kind;
    s.beta_start_ = beta_start;
    s.beta_end_ = beta_end;
    s.betas_.resize(static_cast<std::size_t>(num_steps));

    if (kind == ScheduleKind::linear) {
        for (int t = 1; t <= num_steps; ++t) {
            const double frac = num_steps == 1 ? 0.0 : static_cast<double>(t - 1) / (num_steps - 1);
            s.betas_[static_cast<std::size_t>(t - 1)] = beta_start + (beta_end - beta_start) * frac;
        }
    } else {
        // Squared-cosine alpha_bar curve; betas derived from consecutive ratios
        // and clamped away from 1 to keep every step invertible.
        const double shift = 0.008;
        auto f = [&](double t) {
            const double x = (t / num_steps + shift) / (1.0 + shift) * std::numbers::pi / 2.0;
            const double c = std::cos(x);
            return c * c;
        };
        const double f0 = f(0.0);
        double prev = 1.0;
        for (int t = 1; t <= num_steps; ++t) {
            const double cur = f(static_cast<double>(t)) / f0;
            double beta = 1.0 - cur / prev;
            beta = std::min(beta, 0.999);
            beta = std::max(beta, 1e-8);
            s.betas_[static_cast<std::size_t>(t - 1)] = beta;
            prev = cur;
        }
    }

    s.alpha_bars_.resize(static_cast<std::size_t>(num_steps) + 1);
    s.alpha_bars_[0] = 1.0;
    for (int t = 1; t <= num_steps; ++t) {
        s.alpha_bars_[static_cast<std::size_t>(t)] =
            s.alpha_bars_[static_cast<std::size_t>(t - 1)] * (1.0 - s.betas_[static_cast<std::size_t>(t - 1)]);
    }
    return s;
}

}  // namespace morphlab
