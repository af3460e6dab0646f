// SPDX-License-Identifier: Apache-2.0
#include "freeinit/schedule.hpp"

#include <cmath>

namespace freeinit {

std::string to_string(ScheduleKind k)
{
    return k == ScheduleKind::linear ? "linear" : "scaled_linear";
}

ScheduleKind schedule_kind_from_string(const std::string& s)
{
    if (s == "linear")
        return ScheduleKind::linear;
    if (s == "scaled_linear")
        return ScheduleKind::scaled_linear;
    throw ParameterError("unknown schedule kind \"" + s + "\"");
}

NoiseSchedule::NoiseSchedule(ScheduleKind kind, int steps, double beta_start, double beta_end)
    : kind_(kind), beta_start_(beta_start), beta_end_(beta_end)
{
    if (steps < 1)
        throw ParameterError("schedule: T must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw ParameterError("schedule: require 0 < beta_start <= beta_end < 1");

    betas_.resize(steps);
    const double denom = steps > 1 ? static_cast<double>(steps - 1) : 1.0;
    for (int i = 0; i < steps; ++i) {
        const double frac = static_cast<double>(i) / denom;
        if (kind == ScheduleKind::linear) {
            betas_[i] = beta_start + (beta_end - beta_start) * frac;
        } else {
            const double lo = std::sqrt(beta_start);
            const double hi = std::sqrt(beta_end);
            const double r = lo + (hi - lo) * frac;
            betas_[i] = r * r;
        }
    }

    alpha_bars_.resize(steps);
    double acc = 1.0;
    for (int i = 0; i < steps; ++i) {
        acc *= 1.0 - betas_[i];
        alpha_bars_[i] = acc;
    }
}

int NoiseSchedule::check(int t) const
{
    if (t < 1 || t > steps())
        throw ParameterError("timestep " + std::to_string(t) + " outside [1, " +
                             std::to_string(steps()) + "]");
    return t;
}

NoiseSchedule make_schedule(ScheduleKind kind, int steps, double beta_start, double beta_end)
{
    return NoiseSchedule(kind, steps, beta_start, beta_end);
}

NoiseSchedule sd_schedule()
{
    return NoiseSchedule(ScheduleKind::scaled_linear, 1000, 0.00085, 0.012);
}

VideoTensor q_sample(const VideoTensor& z0, int t, const VideoTensor& eps,
                     const NoiseSchedule& s)
{
    require_same_shape(z0.shape(), eps.shape(), "q_sample");
    const double ab = s.alpha_bar(s.check(t));
    const auto signal = static_cast<float>(std::sqrt(ab));
    const auto noise = static_cast<float>(std::sqrt(1.0 - ab));
    return VideoTensor(z0.shape(), signal * z0.values() + noise * eps.values());
}

double snr_weight(int t, const NoiseSchedule& s)
{
    const double ab = s.alpha_bar(s.check(t));
    return ab / (1.0 - ab);
}

nlohmann::json to_json(const NoiseSchedule& s)
{
    return {{"kind", to_string(s.kind())},
            {"T", s.steps()},
            {"beta_start", s.beta_start()},
            {"beta_end", s.beta_end()}};
}

NoiseSchedule schedule_from_json(const nlohmann::json& j)
{
    for (const auto& [key, _] : j.items())
        if (key != "kind" && key != "T" && key != "beta_start" && key != "beta_end")
            throw ConfigError("schedule: unknown key \"" + key + "\"");
    return NoiseSchedule(schedule_kind_from_string(j.value("kind", std::string("scaled_linear"))),
                         j.value("T", 1000), j.value("beta_start", 0.00085),
                         j.value("beta_end", 0.012));
}

} // namespace freeinit
