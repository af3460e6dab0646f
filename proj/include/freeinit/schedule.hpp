// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <nlohmann/json.hpp>

#include <string>

#include "freeinit/tensor.hpp"

namespace freeinit {

enum class ScheduleKind { linear, scaled_linear };

std::string to_string(ScheduleKind k);
ScheduleKind schedule_kind_from_string(const std::string& s);

/// Variance schedule beta_1..beta_T with derived alpha and cumulative
/// alpha-bar. Timesteps are 1-based in the API; t = 0 means "clean" and has
/// alpha_bar(0) = 1.
class NoiseSchedule {
public:
    NoiseSchedule(ScheduleKind kind, int steps, double beta_start, double beta_end);

    ScheduleKind kind() const { return kind_; }
    int steps() const { return static_cast<int>(betas_.size()); }
    double beta_start() const { return beta_start_; }
    double beta_end() const { return beta_end_; }

    double beta(int t) const { return betas_[check(t) - 1]; }
    double alpha(int t) const { return 1.0 - beta(t); }
    double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bars_[check(t) - 1]; }

    const Eigen::ArrayXd& betas() const { return betas_; }
    const Eigen::ArrayXd& alpha_bars() const { return alpha_bars_; }

    /// Throws ParameterError unless 1 <= t <= T.
    int check(int t) const;

private:
    ScheduleKind kind_;
    double beta_start_;
    double beta_end_;
    Eigen::ArrayXd betas_;
    Eigen::ArrayXd alpha_bars_;
};

NoiseSchedule make_schedule(ScheduleKind kind, int steps, double beta_start, double beta_end);

/// scaled_linear, T = 1000, 0.00085 -> 0.012.
NoiseSchedule sd_schedule();

/// sqrt(abar_t) * z0 + sqrt(1 - abar_t) * eps.
VideoTensor q_sample(const VideoTensor& z0, int t, const VideoTensor& eps,
                     const NoiseSchedule& s);

/// abar_t / (1 - abar_t).
double snr_weight(int t, const NoiseSchedule& s);

nlohmann::json to_json(const NoiseSchedule& s);
NoiseSchedule schedule_from_json(const nlohmann::json& j);

} // namespace freeinit
