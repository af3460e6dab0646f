// SPDX-License-Identifier: Apache-2.0
// freeinit: train the toy denoiser, sample with and without noise
// reinitialization, and run the spectral analyses.
#include <CLI11.hpp>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "freeinit/analysis.hpp"
#include "freeinit/experiment.hpp"
#include "freeinit/runtime.hpp"
#include "freeinit/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace freeinit;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kNumeric = 3, kMissing = 4 };

struct CommonOptions {
    std::string config_path;
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
};

struct SampleOptions {
    std::optional<int> cls;
    std::optional<int> steps;
    std::optional<double> guidance;
};

struct FreeInitOptions {
    std::optional<int> iters;
    std::optional<std::string> filter;
    std::optional<double> d0;
    bool no_reinit = false;
    bool fresh_eps = false;
    bool coarse_to_fine = false;
    bool dump_iters = false;
};

void add_common(CLI::App* cmd, CommonOptions& o)
{
    cmd->add_option("-c,--config", o.config_path, "Experiment config (JSON); defaults if omitted");
    cmd->add_option("-o,--output-dir", o.output_dir, "Overrides output_dir");
    cmd->add_option("--seed", o.seed, "Overrides the root seed");
}

void add_sample(CLI::App* cmd, SampleOptions& o)
{
    cmd->add_option("--class", o.cls, "Class label (-1 = unconditional)");
    cmd->add_option("--steps", o.steps, "DDIM steps");
    cmd->add_option("--guidance", o.guidance, "Guidance weight");
}

ExperimentConfig resolve(const CommonOptions& o)
{
    ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{}
                                               : load_experiment_config(o.config_path);
    if (o.output_dir)
        c.output_dir = *o.output_dir;
    if (o.seed)
        c.seed = *o.seed;
    c.propagate_seed();
    return c;
}

void apply(const SampleOptions& o, ExperimentConfig& c)
{
    if (o.cls)
        c.sampler.cls = *o.cls;
    if (o.steps)
        c.sampler.freeinit.ddim_steps = *o.steps;
    if (o.guidance)
        c.sampler.freeinit.guidance_weight = *o.guidance;
}

fs::path prepare_output(const ExperimentConfig& c, const std::string& command)
{
    c.validate();
    const fs::path dir(c.output_dir);
    fs::create_directories(dir);
    write_text_file(dir / (command + "_config.json"), to_json(c).dump(2) + "\n");
    return dir;
}

void write_json(const fs::path& path, const nlohmann::json& j)
{
    write_text_file(path, j.dump(2) + "\n");
}

ToyDenoiser<float> load_model(const ExperimentConfig& c)
{
    ToyDenoiser<float> model = load_weights(c.weights_stem());
    DenoiserConfig expected = c.denoiser();
    expected.seed = model.config().seed;
    if (!(model.config() == expected))
        throw ConfigError("weights " + c.weights_stem().string() +
                          " were trained for a different model/dataset configuration");
    return model;
}

void maybe_export(const ExperimentConfig& c, const VideoTensor& v, const fs::path& dir)
{
    if (!c.analysis.pgm)
        return;
    fs::create_directories(dir);
    export_frames_pgm(v, dir, c.analysis.pgm_lo, c.analysis.pgm_hi);
}

std::string join(const std::vector<int>& v)
{
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
    return s + "]";
}

int cmd_train(const ExperimentConfig& c)
{
    const fs::path dir = prepare_output(c, "train");
    const auto data = gen_dataset(c.dataset);
    ToyDenoiser<float> model(c.denoiser());
    std::cout << "training on " << data.size() << " videos, " << model.parameter_count()
              << " parameters\n";
    const TrainReport report =
        train(model, data, c.schedule(), c.model.training, [](int epoch, double loss) {
            std::cout << "epoch " << epoch << " loss " << format_number(loss) << std::endl;
        });
    save_weights(model, c.weights_stem(),
                 {{"training", to_json(c.model.training)}, {"report", to_json(report)}});
    write_json(dir / "train_report.json", to_json(report));

    std::ostringstream csv;
    csv << "epoch,loss\n";
    for (std::size_t e = 0; e < report.epoch_losses.size(); ++e)
        csv << e << ',' << format_number(report.epoch_losses[e]) << '\n';
    write_text_file(dir / "train_losses.csv", csv.str());
    std::cout << "initial loss " << format_number(report.initial_loss) << ", final EMA loss "
              << format_number(report.final_ema_loss) << " (" << report.wallclock_seconds
              << " s)\n";
    return kOk;
}

int cmd_sample(const ExperimentConfig& c)
{
    const fs::path dir = prepare_output(c, "sample");
    const ToyDenoiser<float> model = load_model(c);
    const NoiseSchedule s = c.schedule();
    const FreeInitConfig& f = c.sampler.freeinit;
    const StepPlan plan = make_step_plan(s.steps(), f.ddim_steps);
    const VideoTensor eps = initial_noise(model.config().shape(), f.seed);
    const VideoTensor z0 = ddim_sample(model, eps, plan, c.sampler.cls, f.guidance_weight, s);
    save_tensor(z0, dir / "sample_z0.fin");
    const ConsistencyScore score = temporal_consistency(z0);
    write_json(dir / "sample.json", {{"seed", f.seed},
                                     {"class", c.sampler.cls},
                                     {"ddim_steps", f.ddim_steps},
                                     {"guidance_weight", f.guidance_weight},
                                     {"consistency", score.score},
                                     {"degenerate", score.degenerate}});
    maybe_export(c, z0, dir / "sample_frames");
    std::cout << "consistency " << format_number(score.score) << "\n";
    return kOk;
}

int cmd_freeinit(ExperimentConfig c, const FreeInitOptions& o)
{
    FreeInitConfig& f = c.sampler.freeinit;
    if (o.iters)
        f.iterations = *o.iters;
    if (o.filter)
        f.filter.family = filter_family_from_string(*o.filter);
    if (o.d0)
        f.filter.d0 = *o.d0;
    if (o.no_reinit)
        f.noise_reinit = false;
    if (o.fresh_eps)
        f.reuse_eps = false;
    if (o.coarse_to_fine)
        f.coarse_to_fine = true;

    const fs::path dir = prepare_output(c, "freeinit");
    const ToyDenoiser<float> model = load_model(c);
    const NoiseSchedule s = c.schedule();
    if (f.coarse_to_fine && f.iterations > 0)
        std::cout << "coarse-to-fine steps: " << join(coarse_to_fine_steps(f.ddim_steps, f.iterations))
                  << "\n";
    const FreeInitResult r = freeinit_sample(model, f, model.config().shape(), c.sampler.cls, s);
    std::cout << "steps per pass: " << join(r.steps_per_pass) << "\n";

    save_tensor(r.final, dir / "freeinit_z0.fin");
    std::ostringstream csv;
    csv << "iteration,steps,consistency,degenerate\n";
    nlohmann::json scores = nlohmann::json::array();
    for (std::size_t i = 0; i < r.iterations.size(); ++i) {
        const ConsistencyScore score = temporal_consistency(r.iterations[i]);
        csv << i << ',' << r.steps_per_pass[i] << ',' << format_number(score.score) << ','
            << (score.degenerate ? 1 : 0) << '\n';
        scores.push_back(score.score);
        std::cout << "iteration " << i << " consistency " << format_number(score.score) << "\n";
        if (o.dump_iters) {
            char name[32];
            std::snprintf(name, sizeof name, "iter_%02zu_z0.fin", i);
            save_tensor(r.iterations[i], dir / name);
        }
    }
    write_text_file(dir / "freeinit_scores.csv", csv.str());
    nlohmann::json summary = {{"config", to_json(f)},
                              {"class", c.sampler.cls},
                              {"steps_per_pass", r.steps_per_pass},
                              {"consistency", scores}};
    if (f.coarse_to_fine && f.iterations > 0)
        summary["coarse_to_fine_steps"] = coarse_to_fine_steps(f.ddim_steps, f.iterations);
    write_json(dir / "freeinit.json", summary);
    maybe_export(c, r.final, dir / "freeinit_frames");
    return kOk;
}

int cmd_snr(ExperimentConfig c, const std::string& input, std::optional<int> videos)
{
    if (videos)
        c.analysis.snr_videos = *videos;
    const fs::path dir = prepare_output(c, "snr");
    const NoiseSchedule s = c.schedule();
    std::vector<LabeledVideo> data;
    std::string source;
    if (!input.empty()) {
        data.push_back({load_tensor(input), kUnconditional});
        source = input;
    } else {
        SyntheticVideoConfig dc = c.dataset;
        dc.n_videos = std::min(dc.n_videos, c.analysis.snr_videos);
        data = gen_dataset(dc);
        source = "synthetic";
    }
    SpectrumReport report = dataset_snr_report(data, s, c.bands(), c.analysis.snr_ts, c.seed);
    report.metadata = {{"source", source}, {"schedule", to_json(s)}, {"seed", c.seed}};
    std::ostringstream csv;
    write_snr_csv(report, csv);
    write_text_file(dir / "snr.csv", csv.str());
    write_json(dir / "snr.json", to_json(report));
    const std::size_t last = report.ts.size() - 1;
    for (std::size_t j = 0; j < report.bands.size(); ++j)
        std::cout << "band " << j << " SNR_dB at t=" << report.ts[last] << ": "
                  << format_number(report.bands[j].snr_db[last]) << "\n";
    return kOk;
}

int cmd_mix(ExperimentConfig c, std::optional<int> video)
{
    if (video)
        c.analysis.mix_video = *video;
    const fs::path dir = prepare_output(c, "mix");
    const ToyDenoiser<float> model = load_model(c);
    SyntheticVideoConfig dc = c.dataset;
    if (c.analysis.mix_video >= dc.n_videos)
        throw ConfigError("analysis.mix_video is outside the dataset");
    dc.n_videos = c.analysis.mix_video + 1;
    const LabeledVideo item = gen_dataset(dc).back();

    MixingOptions mo;
    mo.keep_ratios = c.analysis.mix_ratios;
    mo.cond = item.label;
    mo.guidance_weight = c.sampler.freeinit.guidance_weight;
    mo.ddim_steps = c.sampler.freeinit.ddim_steps;
    mo.seed = c.seed;
    const MixingResult r = mixing_experiment(model, item.video, c.schedule(), mo);

    std::ostringstream csv;
    csv << "ratio,kept_bins,l2,consistency,consistency_gap\n";
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const MixingRow& row = r.rows[i];
        csv << format_number(row.ratio) << ',' << row.kept_bins << ',' << format_number(row.l2)
            << ',' << format_number(row.consistency) << ',' << format_number(row.consistency_gap)
            << '\n';
        rows.push_back({{"ratio", row.ratio},
                        {"kept_bins", row.kept_bins},
                        {"l2", row.l2},
                        {"consistency", row.consistency},
                        {"consistency_gap", row.consistency_gap}});
        char name[32];
        std::snprintf(name, sizeof name, "mix_%02zu_z0.fin", i);
        save_tensor(r.outputs[i], dir / name);
        std::cout << "ratio " << format_number(row.ratio) << " l2 " << format_number(row.l2)
                  << "\n";
    }
    write_text_file(dir / "mix.csv", csv.str());
    write_json(dir / "mix.json",
               {{"video", c.analysis.mix_video}, {"class", item.label}, {"rows", rows}});
    maybe_export(c, r.reference, dir / "mix_reference_frames");
    return kOk;
}

int cmd_ablate(ExperimentConfig c, std::optional<int> runs)
{
    if (runs)
        c.analysis.ablate_runs = *runs;
    const fs::path dir = prepare_output(c, "ablate");
    const ToyDenoiser<float> model = load_model(c);
    const AblationResult r = ablation_run(model, c.ablation_grid(), model.config().shape(),
                                          c.schedule(), worker_threads());
    std::ostringstream csv;
    write_ablation_csv(r, csv);
    write_text_file(dir / "ablation.csv", csv.str());
    write_json(dir / "ablation.json", to_json(r));
    for (std::size_t p = 0; p < r.summary.size(); ++p) {
        const AblationSummary& s = r.summary[p];
        std::cout << "point " << p << " " << to_string(s.point.filter.family) << " d0="
                  << format_number(s.point.filter.d0) << " N=" << s.point.iterations
                  << " reuse_eps=" << s.point.reuse_eps << " NR=" << s.point.noise_reinit
                  << " mean " << format_number(s.mean) << "\n";
    }
    return kOk;
}

int cmd_metrics(const ExperimentConfig& c, const std::vector<std::string>& inputs)
{
    const fs::path dir = prepare_output(c, "metrics");
    std::ostringstream csv;
    csv << "file,frames,consistency,degenerate,mean,variance\n";
    for (const auto& path : inputs) {
        const VideoTensor v = load_tensor(path);
        const ConsistencyScore score = temporal_consistency(v);
        csv << path << ',' << v.shape().frames << ',' << format_number(score.score) << ','
            << (score.degenerate ? 1 : 0) << ',' << format_number(mean(v)) << ','
            << format_number(variance(v)) << '\n';
        std::cout << path << " consistency " << format_number(score.score) << "\n";
    }
    write_text_file(dir / "metrics.csv", csv.str());
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    tune_allocator();
    CLI::App app{"FreeInit noise reinitialization toolkit"};
    app.require_subcommand(1);

    CommonOptions common;
    SampleOptions sample;
    FreeInitOptions fi;
    std::string snr_input;
    std::optional<int> snr_videos, mix_video, ablate_runs;
    std::vector<std::string> metric_inputs;

    auto* train_cmd = app.add_subcommand("train", "Train the toy denoiser");
    add_common(train_cmd, common);

    auto* sample_cmd = app.add_subcommand("sample", "Plain DDIM sampling");
    add_common(sample_cmd, common);
    add_sample(sample_cmd, sample);

    auto* fi_cmd = app.add_subcommand("freeinit", "Sampling with noise reinitialization");
    add_common(fi_cmd, common);
    add_sample(fi_cmd, sample);
    fi_cmd->add_option("--iters", fi.iters, "Refinement iterations N");
    fi_cmd->add_option("--filter", fi.filter, "ideal | gaussian | butterworth");
    fi_cmd->add_option("--d0", fi.d0, "Normalized stop frequency");
    fi_cmd->add_flag("--no-reinit", fi.no_reinit, "Restart from z_T without spectral mixing");
    fi_cmd->add_flag("--fresh-eps", fi.fresh_eps, "Diffuse with new noise instead of the original");
    fi_cmd->add_flag("--coarse-to-fine", fi.coarse_to_fine, "Increasing step counts per iteration");
    fi_cmd->add_flag("--dump-iters", fi.dump_iters, "Write iter_XX_z0.fin per pass");

    auto* snr_cmd = app.add_subcommand("snr", "Per-band SNR of the forward process");
    add_common(snr_cmd, common);
    snr_cmd->add_option("--input", snr_input, "Tensor file instead of the synthetic dataset");
    snr_cmd->add_option("--videos", snr_videos, "Number of dataset videos to average");

    auto* mix_cmd = app.add_subcommand("mix", "Low-frequency mixing experiment");
    add_common(mix_cmd, common);
    add_sample(mix_cmd, sample);
    mix_cmd->add_option("--video", mix_video, "Dataset index of the source video");

    auto* ablate_cmd = app.add_subcommand("ablate", "Ablation grid over filters and iterations");
    add_common(ablate_cmd, common);
    add_sample(ablate_cmd, sample);
    ablate_cmd->add_option("--runs", ablate_runs, "Seeded runs per grid point");

    auto* metrics_cmd = app.add_subcommand("metrics", "Temporal consistency of tensor files");
    add_common(metrics_cmd, common);
    metrics_cmd->add_option("--input", metric_inputs, "Tensor files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        ExperimentConfig c = resolve(common);
        apply(sample, c);
        if (*train_cmd)
            return cmd_train(c);
        if (*sample_cmd)
            return cmd_sample(c);
        if (*fi_cmd)
            return cmd_freeinit(c, fi);
        if (*snr_cmd)
            return cmd_snr(c, snr_input, snr_videos);
        if (*mix_cmd)
            return cmd_mix(c, mix_video);
        if (*ablate_cmd)
            return cmd_ablate(c, ablate_runs);
        if (*metrics_cmd)
            return cmd_metrics(c, metric_inputs);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const MissingArtifactError& e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return kMissing;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
