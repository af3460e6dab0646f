// SPDX-License-Identifier: Apache-2.0
#include "freeinit/sampler.hpp"

#include <cmath>
#include <string>

namespace freeinit {

namespace {

// round(num / den) with ties away from zero, for non-negative operands.
int round_half_up_div(std::int64_t num, std::int64_t den)
{
    return static_cast<int>((2 * num + den) / (2 * den));
}

void require_finite(const VideoTensor& t, const char* where, int step)
{
    if (!t.all_finite())
        throw NumericError(std::string(where) + ": non-finite values at t=" +
                           std::to_string(step));
}

} // namespace

StepPlan make_step_plan(int total_steps, int n_steps)
{
    if (total_steps < 1)
        throw ParameterError("step plan: T must be >= 1");
    if (n_steps < 1 || n_steps > total_steps)
        throw ParameterError("step plan: n_steps must be in [1, " + std::to_string(total_steps) +
                             "], got " + std::to_string(n_steps));
    StepPlan plan;
    plan.timesteps.reserve(static_cast<std::size_t>(n_steps));
    for (int k = 0; k < n_steps; ++k) {
        // T - k*T/n = T*(n-k)/n
        const int t = round_half_up_div(static_cast<std::int64_t>(total_steps) * (n_steps - k),
                                        n_steps);
        if (plan.timesteps.empty() || t < plan.timesteps.back())
            plan.timesteps.push_back(t);
    }
    return plan;
}

VideoTensor ddim_step(const VideoTensor& z_t, int t, int t_prev, const VideoTensor& eps_pred,
                      const NoiseSchedule& s)
{
    require_same_shape(z_t.shape(), eps_pred.shape(), "ddim_step");
    s.check(t);
    if (t_prev < 0 || t_prev >= t)
        throw ParameterError("ddim_step: require t > t_prev >= 0, got t=" + std::to_string(t) +
                             " t_prev=" + std::to_string(t_prev));
    const double ab = s.alpha_bar(t);
    const double ab_prev = s.alpha_bar(t_prev);

    const Eigen::ArrayXd zt = z_t.values().cast<double>();
    const Eigen::ArrayXd eps = eps_pred.values().cast<double>();
    const Eigen::ArrayXd x0 = (zt - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
    const Eigen::ArrayXd out = std::sqrt(ab_prev) * x0 + std::sqrt(1.0 - ab_prev) * eps;
    return VideoTensor(z_t.shape(), out.cast<float>());
}

VideoTensor guided_eps(const EpsModel& model, const VideoTensor& z_t, int t, int cond, double w)
{
    if (cond == kUnconditional || w == 0.0)
        return model.predict(z_t, t, kUnconditional);
    if (w == 1.0)
        return model.predict(z_t, t, cond);
    auto [eps_u, eps_c] = model.predict_guided(z_t, t, cond);
    const auto wf = static_cast<float>(w);
    eps_u.values() += wf * (eps_c.values() - eps_u.values());
    return eps_u;
}

VideoTensor ddim_sample(const EpsModel& model, const VideoTensor& z_T, const StepPlan& plan,
                        int cond, double w, const NoiseSchedule& s)
{
    if (plan.timesteps.empty())
        throw ParameterError("ddim_sample: empty step plan");
    VideoTensor z = z_T;
    for (std::size_t k = 0; k < plan.size(); ++k) {
        const int t = plan.timesteps[k];
        const VideoTensor eps = guided_eps(model, z, t, cond, w);
        require_finite(eps, "ddim_sample: model output", t);
        z = ddim_step(z, t, plan.next(k), eps, s);
        require_finite(z, "ddim_sample: latent", t);
    }
    return z;
}

std::vector<int> coarse_to_fine_steps(int ddim_steps, int iterations)
{
    if (iterations < 1)
        throw ParameterError("coarse_to_fine_steps: N must be >= 1");
    if (ddim_steps < iterations)
        throw ParameterError("coarse_to_fine_steps: require T_steps >= N");
    std::vector<int> steps;
    for (int i = 0; i < iterations; ++i) {
        const int ti = round_half_up_div(static_cast<std::int64_t>(ddim_steps) * (i + 1),
                                         iterations);
        if (steps.empty() || ti > steps.back())
            steps.push_back(ti);
    }
    return steps;
}

void FreeInitConfig::validate() const
{
    if (iterations < 0)
        throw ParameterError("freeinit: iterations must be >= 0");
    if (ddim_steps < 1)
        throw ParameterError("freeinit: ddim_steps must be >= 1");
    if (guidance_weight < 0.0)
        throw ParameterError("freeinit: guidance weight must be >= 0");
    if (coarse_to_fine && iterations > 0 && ddim_steps < iterations)
        throw ParameterError("freeinit: coarse-to-fine needs ddim_steps >= iterations");
    filter.validate();
}

nlohmann::json to_json(const FreeInitConfig& c)
{
    return {{"iterations", c.iterations},
            {"filter", {{"family", to_string(c.filter.family)},
                        {"d0", c.filter.d0},
                        {"order", c.filter.order}}},
            {"ddim_steps", c.ddim_steps},
            {"coarse_to_fine", c.coarse_to_fine},
            {"guidance_weight", c.guidance_weight},
            {"reuse_eps", c.reuse_eps},
            {"noise_reinit", c.noise_reinit},
            {"seed", c.seed}};
}

std::vector<int> pass_step_counts(const FreeInitConfig& c)
{
    std::vector<int> counts(static_cast<std::size_t>(c.iterations) + 1, c.ddim_steps);
    if (c.coarse_to_fine && c.iterations > 0) {
        const std::vector<int> ladder = coarse_to_fine_steps(c.ddim_steps, c.iterations);
        for (int i = 1; i <= c.iterations; ++i)
            counts[static_cast<std::size_t>(i)] =
                ladder[std::min<std::size_t>(static_cast<std::size_t>(i - 1), ladder.size() - 1)];
    }
    return counts;
}

VideoTensor initial_noise(const Shape& shape, std::uint64_t seed)
{
    RngState rng = RngState(seed).substream("eps");
    return gaussian_tensor(shape, rng);
}

VideoTensor diffuse_to_terminal(const VideoTensor& z0, const VideoTensor& eps,
                                const NoiseSchedule& s)
{
    return q_sample(z0, s.steps(), eps, s);
}

FreeInitResult freeinit_sample(const EpsModel& model, const FreeInitConfig& config,
                               const Shape& shape, int cond, const NoiseSchedule& s)
{
    config.validate();
    require_valid(shape);
    const RngState root(config.seed);
    const VideoTensor eps = initial_noise(shape, config.seed);
    const FrequencyMask mask = make_mask(config.filter, shape.frames, shape.height, shape.width);
    const std::vector<int> counts = pass_step_counts(config);

    FreeInitResult result;
    VideoTensor z = eps;
    for (int i = 0; i <= config.iterations; ++i) {
        const int n_steps = counts[static_cast<std::size_t>(i)];
        const StepPlan plan = make_step_plan(s.steps(), std::min(n_steps, s.steps()));
        result.initial_latents.push_back(z);
        result.steps_per_pass.push_back(static_cast<int>(plan.size()));
        VideoTensor z0 = ddim_sample(model, z, plan, cond, config.guidance_weight, s);
        result.iterations.push_back(z0);

        if (i == config.iterations)
            break;

        const std::string tag = std::to_string(i);
        VideoTensor diffused;
        if (config.reuse_eps) {
            diffused = diffuse_to_terminal(z0, eps, s);
        } else {
            RngState fresh = root.substream("diffuse:" + tag);
            diffused = diffuse_to_terminal(z0, gaussian_tensor(shape, fresh), s);
        }
        if (config.noise_reinit) {
            RngState eta_rng = root.substream("eta:" + tag);
            const VideoTensor eta = gaussian_tensor(shape, eta_rng);
            z = reinitialize_noise(diffused, eta, mask);
        } else {
            z = std::move(diffused);
        }
    }
    result.final = result.iterations.back();
    return result;
}

} // namespace freeinit
