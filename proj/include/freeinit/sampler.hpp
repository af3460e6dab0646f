// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <utility>
#include <vector>

#include "freeinit/schedule.hpp"
#include "freeinit/spectral.hpp"
#include "freeinit/tensor.hpp"

namespace freeinit {

/// Class label passed to the model; kUnconditional selects the null class.
inline constexpr int kUnconditional = -1;

/// Epsilon-prediction network interface. `predict` must be reentrant: it is
/// called concurrently from independent sampling runs.
class EpsModel {
public:
    virtual ~EpsModel() = default;
    virtual VideoTensor predict(const VideoTensor& z_t, int t, int cond) const = 0;

    /// Unconditional and conditional predictions for the same input. The
    /// default makes two predict() calls; models may evaluate both at once.
    virtual std::pair<VideoTensor, VideoTensor> predict_guided(const VideoTensor& z_t, int t,
                                                               int cond) const
    {
        return {predict(z_t, t, kUnconditional), predict(z_t, t, cond)};
    }
};

/// Ordered, strictly decreasing DDIM timesteps; the first is T and the final
/// transition of a pass targets t = 0.
struct StepPlan {
    std::vector<int> timesteps;

    std::size_t size() const { return timesteps.size(); }
    /// Target of the k-th step (0 after the last one).
    int next(std::size_t k) const { return k + 1 < timesteps.size() ? timesteps[k + 1] : 0; }
};

/// Uniform plan: t_k = round_half_up(T - k*T/n) for k = 0..n-1.
StepPlan make_step_plan(int total_steps, int n_steps);

/// Deterministic DDIM update from t to t_prev (eta = 0, abar_0 = 1).
VideoTensor ddim_step(const VideoTensor& z_t, int t, int t_prev, const VideoTensor& eps_pred,
                      const NoiseSchedule& s);

/// Classifier-free guidance: eps_u + w * (eps_c - eps_u). Skips the unused
/// evaluation when w is 0 or 1, or when `cond` is unconditional.
VideoTensor guided_eps(const EpsModel& model, const VideoTensor& z_t, int t, int cond, double w);

VideoTensor ddim_sample(const EpsModel& model, const VideoTensor& z_T, const StepPlan& plan,
                        int cond, double w, const NoiseSchedule& s);

/// Per-iteration DDIM step counts T_i = round_half_up(T_steps * (i+1) / N),
/// i = 0..N-1.
std::vector<int> coarse_to_fine_steps(int ddim_steps, int iterations);

struct FreeInitConfig {
    int iterations = 4;
    FilterSpec filter{};
    int ddim_steps = 25;
    /// Refinement iterations 1..N use coarse_to_fine_steps(ddim_steps, N);
    /// the initial pass keeps ddim_steps.
    bool coarse_to_fine = false;
    double guidance_weight = 7.5;
    /// Diffuse with the original epsilon (true) or a fresh draw.
    bool reuse_eps = true;
    /// false skips the spectral mixing and restarts from z_T directly.
    bool noise_reinit = true;
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json to_json(const FreeInitConfig& c);

struct FreeInitResult {
    VideoTensor final;
    /// Clean sample after each pass; index 0 is vanilla DDIM.
    std::vector<VideoTensor> iterations;
    /// Initial latent of each pass.
    std::vector<VideoTensor> initial_latents;
    /// DDIM step count used by each pass.
    std::vector<int> steps_per_pass;
};

/// Step counts for passes 0..N under `c`.
std::vector<int> pass_step_counts(const FreeInitConfig& c);

/// Initial noise epsilon for a seed (substream "eps").
VideoTensor initial_noise(const Shape& shape, std::uint64_t seed);

/// Diffuse a clean sample back to t = T with the given noise.
VideoTensor diffuse_to_terminal(const VideoTensor& z0, const VideoTensor& eps,
                                const NoiseSchedule& s);

/// Iterative noise refinement: sample, diffuse back to T with the original
/// noise, replace the high band with fresh Gaussian noise, sample again.
FreeInitResult freeinit_sample(const EpsModel& model, const FreeInitConfig& config,
                               const Shape& shape, int cond, const NoiseSchedule& s);

} // namespace freeinit
