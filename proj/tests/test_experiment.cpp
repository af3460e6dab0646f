// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>

#include "freeinit/experiment.hpp"
#include "helpers.hpp"

using namespace freeinit;
using nlohmann::json;

TEST_CASE("experiment config defaults")
{
    const ExperimentConfig c = experiment_config_from_json(json::object());
    CHECK(c.seed == 0);
    CHECK(c.schedule_kind == ScheduleKind::scaled_linear);
    CHECK(c.schedule().alpha_bar(1000) == sd_schedule().alpha_bar(1000));
    CHECK(c.sampler.freeinit.iterations == 4);
    CHECK(c.sampler.freeinit.ddim_steps == 25);
    CHECK(c.sampler.freeinit.guidance_weight == 7.5);
    CHECK(c.sampler.freeinit.filter.family == FilterFamily::gaussian);
    CHECK(c.sampler.freeinit.filter.d0 == 0.25);
    CHECK(c.bands().size() == 4);
    CHECK(c.ablation_grid().points() == 2);
    CHECK(c.weights_stem() == std::filesystem::path("out") / "model");
}

TEST_CASE("experiment config round trip")
{
    ExperimentConfig c;
    c.seed = 77;
    c.dataset.frames = 4;
    c.dataset.n_videos = 12;
    c.model.hidden = 8;
    c.model.training.epochs = 2;
    c.sampler.freeinit.iterations = 2;
    c.sampler.freeinit.filter = {FilterFamily::butterworth, 0.4, 2};
    c.sampler.freeinit.noise_reinit = false;
    c.sampler.cls = 3;
    c.analysis.ablate_d0s = {0.1, 0.25};
    c.analysis.snr_ts = {1, 1000};
    c.output_dir = "elsewhere";
    c.propagate_seed();

    const json j = to_json(c);
    CHECK(j.at("schema") == kConfigSchema);
    const ExperimentConfig back = experiment_config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.dataset.seed == 77);
    CHECK(back.model.training.seed == 77);
    CHECK(back.sampler.freeinit.seed == 77);
    CHECK(back.sampler.freeinit.filter.family == FilterFamily::butterworth);
    CHECK(back.ablation_grid().points() == 4);

    const auto path = testing::scratch_dir("experiment") / "cfg.json";
    std::ofstream(path) << j.dump(2);
    CHECK(to_json(load_experiment_config(path)) == j);
}

TEST_CASE("experiment config rejects bad input")
{
    CHECK_THROWS_AS(experiment_config_from_json({{"sead", 1}}), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json({{"schema", 2}}), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json({{"sampler", {{"iters", 2}}}}), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json({{"sampler", {{"class", 9}}}}), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json({{"sampler", {{"filter", {{"d0", -1.0}}}}}}),
                    ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json({{"analysis", {{"band_edges", {0.5, 0.25}}}}}),
                    ConfigError);
    CHECK_THROWS_AS(load_experiment_config("/nonexistent/cfg.json"), ConfigError);

    const auto path = testing::scratch_dir("experiment_bad") / "cfg.json";
    std::ofstream(path) << "{ not json";
    CHECK_THROWS_AS(load_experiment_config(path), ConfigError);
}
