// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "freeinit/analysis.hpp"
#include "freeinit/dataset.hpp"
#include "freeinit/denoiser.hpp"
#include "freeinit/sampler.hpp"
#include "freeinit/schedule.hpp"
#include "freeinit/train.hpp"

namespace freeinit {

inline constexpr int kConfigSchema = 1;

struct ModelSection {
    int hidden = 32;
    int time_embed_dim = 32;
    int res_blocks = 2;
    /// Weights stem relative to output_dir (".fin" and ".json" appended).
    std::string weights = "model";
    TrainOptions training{};
};

struct SamplerSection {
    FreeInitConfig freeinit{};
    /// Class label used by sample and freeinit.
    int cls = 0;
};

struct AnalysisSection {
    std::vector<double> band_edges{0.25, 0.5, 1.0};
    std::vector<int> snr_ts{1, 50, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
    /// Number of dataset videos averaged by the snr command.
    int snr_videos = 64;
    std::vector<double> mix_ratios{0.0, 0.2, 0.5, 0.8, 1.0};
    /// Dataset index of the video used by the mix command.
    int mix_video = 0;
    std::vector<std::string> ablate_families{"gaussian"};
    std::vector<double> ablate_d0s{0.25};
    std::vector<int> ablate_iterations{4};
    std::vector<bool> ablate_reuse_eps{true};
    std::vector<bool> ablate_noise_reinit{true, false};
    std::vector<int> ablate_classes{0, 1, 2, 3};
    int ablate_runs = 8;
    /// Write PGM frames next to tensor outputs.
    bool pgm = false;
    double pgm_lo = -1.0;
    double pgm_hi = 1.0;
};

/// Everything an experiment needs. One root seed feeds the dataset, model
/// initialization, training and sampling through named substreams.
struct ExperimentConfig {
    SyntheticVideoConfig dataset{};
    ScheduleKind schedule_kind = ScheduleKind::scaled_linear;
    int schedule_steps = 1000;
    double beta_start = 0.00085;
    double beta_end = 0.012;
    ModelSection model{};
    SamplerSection sampler{};
    AnalysisSection analysis{};
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    /// Pushes the root seed into every stage.
    void propagate_seed();
    void validate() const;

    NoiseSchedule schedule() const;
    DenoiserConfig denoiser() const;
    BandSpec bands() const;
    AblationGrid ablation_grid() const;
    std::filesystem::path weights_stem() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Missing fields take their defaults; unknown keys and a schema other than
/// 1 throw ConfigError.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
/// Throws ConfigError naming the path if it cannot be read or parsed.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

} // namespace freeinit
