// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <vector>

#include "freeinit/dataset.hpp"
#include "freeinit/denoiser.hpp"
#include "freeinit/schedule.hpp"

namespace freeinit {

struct TrainOptions {
    int epochs = 8;
    double learning_rate = 1e-3;
    int batch_size = 8;
    /// Probability of replacing the label with the null class.
    double cond_drop_prob = 0.1;
    double ema_decay = 0.98;
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json to_json(const TrainOptions& o);

struct TrainReport {
    /// Loss of the very first minibatch, before any update.
    double initial_loss = 0.0;
    std::vector<double> epoch_losses;
    double final_ema_loss = 0.0;
    /// Seconds; reported on the console only so that artifacts stay
    /// byte-identical across runs.
    double wallclock_seconds = 0.0;
    std::uint64_t seed = 0;
};

nlohmann::json to_json(const TrainReport& r);

/// Adam with bias correction over a flat parameter vector.
template <typename Scalar>
class Adam {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    explicit Adam(Index size, double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);
    void step(Vector& params, const Vector& grad);

private:
    double lr_, beta1_, beta2_, eps_;
    long steps_ = 0;
    Vector m_, v_;
};

extern template class Adam<float>;
extern template class Adam<double>;

/// Called after every epoch with (epoch index, mean loss).
using EpochCallback = std::function<void(int, double)>;

/// Epsilon-MSE training with uniform t in [1, T] and label dropout.
/// Deterministic given options.seed. Throws NumericError on a non-finite loss.
TrainReport train(ToyDenoiser<float>& model, const std::vector<LabeledVideo>& dataset,
                  const NoiseSchedule& schedule, const TrainOptions& options,
                  const EpochCallback& on_epoch = {});

/// Builds one minibatch of noisy examples from `videos` (indices into
/// `dataset`) drawing t, eps and label dropout from `rng`.
std::vector<TrainExample> make_batch(const std::vector<LabeledVideo>& dataset,
                                     const std::vector<std::size_t>& videos,
                                     const NoiseSchedule& schedule, double cond_drop_prob,
                                     RngState& rng);

/// Mean epsilon-MSE of `model` on fresh noise over `dataset`.
double evaluate_loss(const ToyDenoiser<float>& model, const std::vector<LabeledVideo>& dataset,
                     const NoiseSchedule& schedule, std::uint64_t seed, int batch_size = 8);

} // namespace freeinit
