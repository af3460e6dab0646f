// SPDX-License-Identifier: Apache-2.0
#include "freeinit/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace freeinit {

void TrainOptions::validate() const
{
    if (epochs < 0)
        throw ParameterError("train: epochs must be >= 0");
    if (!(learning_rate > 0.0))
        throw ParameterError("train: learning rate must be positive");
    if (batch_size < 1)
        throw ParameterError("train: batch size must be >= 1");
    if (cond_drop_prob < 0.0 || cond_drop_prob > 1.0)
        throw ParameterError("train: cond_drop_prob must be in [0, 1]");
    if (ema_decay < 0.0 || ema_decay >= 1.0)
        throw ParameterError("train: ema_decay must be in [0, 1)");
}

nlohmann::json to_json(const TrainOptions& o)
{
    return {{"epochs", o.epochs},
            {"learning_rate", o.learning_rate},
            {"batch_size", o.batch_size},
            {"cond_drop_prob", o.cond_drop_prob},
            {"ema_decay", o.ema_decay},
            {"seed", o.seed}};
}

nlohmann::json to_json(const TrainReport& r)
{
    return {{"initial_loss", r.initial_loss},
            {"epoch_losses", r.epoch_losses},
            {"final_ema_loss", r.final_ema_loss},
            {"seed", r.seed}};
}

template <typename Scalar>
Adam<Scalar>::Adam(Index size, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Vector::Zero(size)),
      v_(Vector::Zero(size))
{
}

template <typename Scalar>
void Adam<Scalar>::step(Vector& params, const Vector& grad)
{
    ++steps_;
    const auto b1 = static_cast<Scalar>(beta1_);
    const auto b2 = static_cast<Scalar>(beta2_);
    m_ = b1 * m_ + (1 - b1) * grad;
    v_ = b2 * v_ + (1 - b2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    const auto step_size = static_cast<Scalar>(lr_ / c1);
    const auto denom_scale = static_cast<Scalar>(1.0 / std::sqrt(c2));
    params.array() -= step_size * m_.array() /
                      (v_.array().sqrt() * denom_scale + static_cast<Scalar>(eps_));
}

template class Adam<float>;
template class Adam<double>;

std::vector<TrainExample> make_batch(const std::vector<LabeledVideo>& dataset,
                                     const std::vector<std::size_t>& videos,
                                     const NoiseSchedule& schedule, double cond_drop_prob,
                                     RngState& rng)
{
    std::vector<TrainExample> batch;
    batch.reserve(videos.size());
    for (std::size_t idx : videos) {
        const LabeledVideo& item = dataset.at(idx);
        TrainExample ex;
        ex.t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(schedule.steps())));
        ex.cond = rng.uniform() < cond_drop_prob ? kUnconditional : item.label;
        ex.target = gaussian_tensor(item.video.shape(), rng);
        ex.noisy = q_sample(item.video, ex.t, ex.target, schedule);
        batch.push_back(std::move(ex));
    }
    return batch;
}

TrainReport train(ToyDenoiser<float>& model, const std::vector<LabeledVideo>& dataset,
                  const NoiseSchedule& schedule, const TrainOptions& options,
                  const EpochCallback& on_epoch)
{
    options.validate();
    if (dataset.empty())
        throw ParameterError("train: dataset is empty");

    const auto start = std::chrono::steady_clock::now();
    TrainReport report;
    report.seed = options.seed;

    const RngState root = RngState(options.seed).substream("train");
    Adam<float> optimizer(model.parameter_count(), options.learning_rate);
    ToyDenoiser<float>::Vector grad;
    std::vector<std::size_t> order(dataset.size());
    bool first = true;
    double ema = 0.0;

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        RngState shuffle = root.substream("shuffle:" + std::to_string(epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle.below(i)]);

        RngState noise = root.substream("noise:" + std::to_string(epoch));
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(options.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(options.batch_size));
            const std::vector<std::size_t> ids(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                               order.begin() + static_cast<std::ptrdiff_t>(end));
            const auto batch = make_batch(dataset, ids, schedule, options.cond_drop_prob, noise);
            const double loss = model.loss_and_gradient(batch, grad);
            if (!std::isfinite(loss) || !grad.allFinite())
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batches) + " (loss=" +
                                   std::to_string(loss) + ")");
            if (first) {
                report.initial_loss = loss;
                ema = loss;
                first = false;
            }
            ema = options.ema_decay * ema + (1.0 - options.ema_decay) * loss;
            optimizer.step(model.parameters(), grad);
            total += loss;
            ++batches;
        }
        const double mean_loss = total / static_cast<double>(batches);
        report.epoch_losses.push_back(mean_loss);
        if (on_epoch)
            on_epoch(epoch, mean_loss);
    }
    report.final_ema_loss = ema;
    report.wallclock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

double evaluate_loss(const ToyDenoiser<float>& model, const std::vector<LabeledVideo>& dataset,
                     const NoiseSchedule& schedule, std::uint64_t seed, int batch_size)
{
    if (dataset.empty())
        throw ParameterError("evaluate_loss: dataset is empty");
    RngState rng = RngState(seed).substream("eval");
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t begin = 0; begin < dataset.size(); begin += static_cast<std::size_t>(batch_size)) {
        std::vector<std::size_t> ids;
        for (std::size_t i = begin; i < std::min(dataset.size(), begin + static_cast<std::size_t>(batch_size)); ++i)
            ids.push_back(i);
        const auto batch = make_batch(dataset, ids, schedule, 0.0, rng);
        total += static_cast<double>(model.loss(batch)) * static_cast<double>(ids.size());
        count += ids.size();
    }
    return total / static_cast<double>(count);
}

} // namespace freeinit
