// SPDX-License-Identifier: Apache-2.0
//
// Runs each acceptance criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion. Usage: freeinit_acceptance [work_dir]
//
// The default-config model is trained with the CLI into work_dir and reused
// on later runs while its saved config matches the current defaults.
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "freeinit/experiment.hpp"
#include "freeinit/runtime.hpp"
#include "freeinit/tensor_io.hpp"

using namespace freeinit;
namespace fs = std::filesystem;

namespace {

const char* const kBinary = FREEINIT_CLI_PATH;

// Reference values from a 50-digit cumulative product.
constexpr double kLinearAlphaBarT = 4.0358297653756833148e-5;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double cpu_seconds(std::clock_t since)
{
    return static_cast<double>(std::clock() - since) / CLOCKS_PER_SEC;
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

VideoTensor random_tensor(const Shape& shape, std::uint64_t seed)
{
    RngState rng(seed);
    return gaussian_tensor(shape, rng);
}

bool bit_equal(const VideoTensor& a, const VideoTensor& b)
{
    return a.shape() == b.shape() &&
           std::equal(a.data(), a.data() + a.numel(), b.data(), [](float x, float y) {
               return std::memcmp(&x, &y, sizeof x) == 0;
           });
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& args, const fs::path& log)
{
    const std::string cmd = std::string(kBinary) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------------------

Outcome spectral_correctness()
{
    const std::clock_t start = std::clock();
    double worst_round = 0.0, worst_parseval = 0.0;
    for (const Shape& shape : {Shape{8, 1, 32, 32}, Shape{16, 4, 64, 64}, Shape{5, 3, 7, 9},
                               Shape{1, 1, 16, 16}}) {
        const VideoTensor x = random_tensor(shape, 11);
        const Spectrum sp = fft3(x);
        worst_round = std::max(worst_round, relative_l2_error(ifft3(sp), x));
        const double n = static_cast<double>(shape.frames * shape.height * shape.width);
        worst_parseval = std::max(worst_parseval, std::abs(sp.energy() / n / squared_norm(x) - 1.0));
    }

    const Shape shape{16, 4, 64, 64};
    const VideoTensor z = random_tensor(shape, 12), eta = random_tensor(shape, 13);
    const FrequencyMask m = make_mask({FilterFamily::ideal, 0.25, 1}, 16, 64, 64);
    const Spectrum so = fft3(reinitialize_noise(z, eta, m)), sz = fft3(z), se = fft3(eta);
    double worst_bin = 0.0;
    for (Index f = 0; f < shape.frames; ++f)
        for (Index c = 0; c < shape.channels; ++c)
            for (Index h = 0; h < shape.height; ++h)
                for (Index w = 0; w < shape.width; ++w) {
                    const auto& ref = m(f, h, w) == 1.0 ? sz(f, c, h, w) : se(f, c, h, w);
                    worst_bin = std::max(worst_bin, std::abs(so(f, c, h, w) - ref));
                }
    const double rms = std::sqrt(sz.energy() / static_cast<double>(sz.values().size()));
    const double mixing = worst_bin / rms;
    const double secs = cpu_seconds(start);
    return {worst_round <= 1e-5 && worst_parseval <= 1e-4 && mixing <= 1e-5 && secs < 10.0,
            "round trip " + num(worst_round) + ", Parseval " + num(worst_parseval) +
                ", ideal mixing " + num(mixing) + " (relative to bin rms), " + num(secs) + " s"};
}

Outcome schedule_forward()
{
    bool monotone = true;
    for (const NoiseSchedule& s : {make_schedule(ScheduleKind::linear, 1000, 1e-4, 0.02), sd_schedule()})
        for (int t = 1; t <= s.steps(); ++t)
            monotone = monotone && s.alpha_bar(t) < s.alpha_bar(t - 1);
    const NoiseSchedule lin = make_schedule(ScheduleKind::linear, 1000, 1e-4, 0.02);
    const double rel = std::abs(lin.alpha_bar(1000) / kLinearAlphaBarT - 1.0);

    const NoiseSchedule s = sd_schedule();
    const Shape shape{10, 1, 100, 100};
    const double n = static_cast<double>(shape.numel());
    double worst_sigmas = 0.0;
    for (int t : {1, 100, 500, 1000}) {
        const VideoTensor zt = q_sample(random_tensor(shape, 20 + t), t, random_tensor(shape, 40 + t), s);
        worst_sigmas = std::max(worst_sigmas, std::abs(variance(zt) - 1.0) / std::sqrt(2.0 / n));
    }
    return {monotone && rel <= 1e-9 && worst_sigmas <= 3.0,
            std::string("monotone ") + (monotone ? "yes" : "no") + ", alpha_bar_1000 rel err " +
                num(rel) + ", q_sample variance within " + num(worst_sigmas) + " sigma"};
}

Outcome ddim_algebra(const EpsModel& model, const ExperimentConfig& cfg)
{
    const NoiseSchedule s = cfg.schedule();
    const Shape shape = cfg.dataset.shape();
    const VideoTensor z0 = random_tensor(shape, 1), eps = random_tensor(shape, 2);
    double worst = 0.0;
    for (int t : {1, 10, 250, 500, 999, 1000})
        worst = std::max(worst, max_abs_diff(ddim_step(q_sample(z0, t, eps, s), t, 0, eps, s), z0));

    const FreeInitResult a = freeinit_sample(model, cfg.sampler.freeinit, shape, 1, s);
    const FreeInitResult b = freeinit_sample(model, cfg.sampler.freeinit, shape, 1, s);
    bool same = a.iterations.size() == b.iterations.size();
    for (std::size_t i = 0; same && i < a.iterations.size(); ++i)
        same = bit_equal(a.iterations[i], b.iterations[i]);
    return {worst <= 1e-5 && same, "inversion max error " + num(worst) +
                                       ", repeated sampling bit-exact " + (same ? "yes" : "no")};
}

Outcome snr_analysis(const ExperimentConfig& cfg)
{
    const std::clock_t start = std::clock();
    SyntheticVideoConfig dc = cfg.dataset;
    dc.n_videos = cfg.analysis.snr_videos;
    const auto data = gen_dataset(dc);
    std::vector<int> ts;
    for (int t = 1; t <= cfg.schedule_steps; ++t)
        ts.push_back(t);
    const NoiseSchedule s = cfg.schedule();
    const BandSpec bands = cfg.bands();
    const SpectrumReport r = dataset_snr_report(data, s, bands, ts, cfg.seed);

    bool decreasing = true;
    for (const auto& b : r.bands)
        for (std::size_t k = 1; k < ts.size(); ++k)
            decreasing = decreasing && b.snr_db[k] < b.snr_db[k - 1];
    const double gap = r.bands.front().snr_db.back() - r.bands.back().snr_db.back();

    // Scale law on one video and its noise.
    const VideoTensor& z0 = data.front().video;
    RngState rng(cfg.seed);
    const VideoTensor eps = gaussian_tensor(z0.shape(), rng);
    const SpectrumReport one = snr_report(z0, eps, s, bands, ts);
    const SpectrumReport loud = snr_report(VideoTensor(z0.shape(), 10.0f * z0.values()), eps, s, bands, ts);
    double shift_err = 0.0;
    for (std::size_t j = 0; j < one.bands.size(); ++j)
        for (std::size_t k = 0; k < ts.size(); ++k)
            shift_err = std::max(shift_err,
                                 std::abs(loud.bands[j].snr_db[k] - one.bands[j].snr_db[k] - 20.0));
    const double secs = cpu_seconds(start);
    const double low_at_t = r.bands.front().snr_db.back();
    return {decreasing && gap >= 20.0 && shift_err <= 1e-6 && secs < 60.0,
            std::string("strictly decreasing ") + (decreasing ? "yes" : "no") + ", low-high gap at T " +
                num(gap) + " dB, low band at T " + num(low_at_t) + " dB (0 dB crossing " +
                (low_at_t > 0.0 ? "reached" : "not reached") + "), scale shift error " +
                num(shift_err) + " dB, " + num(secs) + " s"};
}

Outcome mixing_trend(const EpsModel& model, const ExperimentConfig& cfg)
{
    const int runs = 10;
    SyntheticVideoConfig dc = cfg.dataset;
    dc.n_videos = runs;
    const auto data = gen_dataset(dc);
    int monotone = 0;
    double worst_full = 0.0;
    std::string curves;
    for (int i = 0; i < runs; ++i) {
        MixingOptions o;
        o.keep_ratios = {0.0, 0.2, 0.5, 0.8, 1.0};
        o.cond = data[static_cast<std::size_t>(i)].label;
        o.guidance_weight = cfg.sampler.freeinit.guidance_weight;
        o.ddim_steps = cfg.sampler.freeinit.ddim_steps;
        o.seed = cfg.seed + static_cast<std::uint64_t>(i);
        const MixingResult r = mixing_experiment(model, data[static_cast<std::size_t>(i)].video,
                                                 cfg.schedule(), o);
        bool ok = true;
        for (std::size_t k = 1; k < r.rows.size(); ++k)
            ok = ok && r.rows[k].l2 <= r.rows[k - 1].l2;
        monotone += ok ? 1 : 0;
        worst_full = std::max(worst_full, r.rows.back().l2);
        if (i < 2) {
            curves += " run" + std::to_string(i) + "=[";
            for (std::size_t k = 0; k < r.rows.size(); ++k)
                curves += (k ? " " : "") + num(r.rows[k].l2);
            curves += "]";
        }
    }
    return {monotone >= 8 && worst_full == 0.0,
            std::to_string(monotone) + "/10 runs non-increasing, r=1 distance " + num(worst_full) +
                "," + curves};
}

Outcome freeinit_efficacy(const EpsModel& model, const ExperimentConfig& cfg)
{
    const std::clock_t start = std::clock();
    AblationGrid g = cfg.ablation_grid();
    g.families = {FilterFamily::gaussian};
    g.d0s = {0.25};
    g.iterations = {4};
    g.reuse_eps = {true};
    g.noise_reinit = {true, false};
    g.runs = 25;
    const AblationResult r = ablation_run(model, g, cfg.dataset.shape(), cfg.schedule(), worker_threads());
    const AblationSummary& on = r.summary[0];
    const AblationSummary& off = r.summary[1];
    const auto& m = on.mean_by_iteration;
    const double secs = cpu_seconds(start);
    std::string by_iter;
    for (double v : m)
        by_iter += (by_iter.empty() ? "" : " ") + num(v);
    return {on.improved_fraction >= 0.8 && m[4] >= m[0] + 0.02 && on.mean >= off.mean && secs < 900.0,
            "improved 0->1 in " + num(100.0 * on.improved_fraction) + "% of 25 runs, mean by iteration [" +
                by_iter + "], GLPF mean " + num(on.mean) + " vs NR-off " + num(off.mean) + ", " +
                num(secs) + " s"};
}

Outcome coarse_to_fine()
{
    const std::vector<int> steps = coarse_to_fine_steps(50, 4);
    int sum = 0;
    for (int v : steps)
        sum += v;
    std::string s;
    for (int v : steps)
        s += (s.empty() ? "" : ",") + std::to_string(v);
    return {steps == std::vector<int>{13, 25, 38, 50} && sum < 4 * 50,
            "[" + s + "], total " + std::to_string(sum) + " < " + std::to_string(4 * 50)};
}

Outcome model_training(const fs::path& work)
{
    // Finite differences in double on a small model.
    DenoiserConfig dcfg;
    dcfg.frames = 3;
    dcfg.height = 8;
    dcfg.width = 8;
    dcfg.hidden = 6;
    dcfg.time_embed_dim = 8;
    dcfg.seed = 3;
    ToyDenoiser<double> model(dcfg);
    RngState init(5);
    const ParamInfo& head = model.param("head.w");
    for (Index i = 0; i < head.size(); ++i)
        model.parameters()[head.offset + i] = 0.1 * init.normal();
    SyntheticVideoConfig tiny;
    tiny.frames = 3;
    tiny.height = 8;
    tiny.width = 8;
    tiny.n_videos = 2;
    tiny.radius_min = 1.0;
    tiny.radius_max = 2.0;
    const auto data = gen_dataset(tiny);
    RngState batch_rng(9);
    const auto batch = make_batch(data, {0, 1}, sd_schedule(), 0.5, batch_rng);
    ToyDenoiser<double>::Vector grad;
    model.loss_and_gradient(batch, grad);
    RngState pick(6);
    double worst = 0.0;
    const double h = 1e-3;
    for (Index k = 0; k < std::max<Index>(model.parameter_count() / 100, 20); ++k) {
        const auto i = static_cast<Index>(pick.below(static_cast<std::uint64_t>(model.parameter_count())));
        const double old = model.parameters()[i];
        model.parameters()[i] = old + h;
        const double up = model.loss(batch);
        model.parameters()[i] = old - h;
        const double down = model.loss(batch);
        model.parameters()[i] = old;
        const double fd = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-6}));
    }

    // Loss reduction of the default-config run.
    const auto report = nlohmann::json::parse(slurp(work / "model" / "train_report.json"));
    const double initial = report.at("initial_loss").get<double>();
    const double final_loss = report.at("epoch_losses").back().get<double>();

    // Determinism: two short trainings from the same seed.
    SyntheticVideoConfig small = tiny;
    small.n_videos = 16;
    const auto small_data = gen_dataset(small);
    TrainOptions opt;
    opt.epochs = 2;
    opt.batch_size = 4;
    ToyDenoiser<float> a(DenoiserConfig{3, 1, 8, 8, 6, 8, 4, 1, 7});
    ToyDenoiser<float> b(DenoiserConfig{3, 1, 8, 8, 6, 8, 4, 1, 7});
    train(a, small_data, sd_schedule(), opt);
    train(b, small_data, sd_schedule(), opt);
    const bool same = a.parameters().size() == b.parameters().size() &&
                      std::memcmp(a.parameters().data(), b.parameters().data(),
                                  sizeof(float) * static_cast<std::size_t>(a.parameter_count())) == 0;
    return {worst <= 1e-2 && final_loss < 0.5 * initial && same,
            "gradient check max rel err " + num(worst) + ", loss " + num(initial) + " -> " +
                num(final_loss) + " (last epoch mean), deterministic " + (same ? "yes" : "no")};
}

Outcome cli_reproducibility(const fs::path& work)
{
    const fs::path dir = work / "cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "cfg.json") << R"({
  "dataset": {"frames": 4, "height": 16, "width": 16, "n_videos": 16},
  "model": {"hidden": 8, "time_embed_dim": 8, "res_blocks": 1,
            "training": {"epochs": 1, "batch_size": 4}},
  "sampler": {"ddim_steps": 8, "iterations": 2}
})";
    const std::string cfg = " -c " + (dir / "cfg.json").string();
    bool ok = true;
    std::vector<std::string> outputs[2];
    for (int k = 0; k < 2; ++k) {
        const fs::path out = dir / ("run" + std::to_string(k));
        const std::string o = cfg + " -o " + out.string();
        ok = ok && run_cli("train" + o, dir / "log") == 0;
        ok = ok && run_cli("freeinit --dump-iters" + o, dir / "log") == 0;
        ok = ok && run_cli("sample" + o, dir / "log") == 0;
        for (const char* f : {"model.fin", "model.json", "train_report.json", "train_losses.csv",
                              "freeinit_z0.fin", "freeinit_scores.csv", "freeinit.json",
                              "iter_00_z0.fin", "iter_01_z0.fin", "iter_02_z0.fin", "sample_z0.fin",
                              "sample.json"})
            outputs[k].push_back(slurp(out / f));
    }
    const bool identical = ok && outputs[0] == outputs[1];
    const fs::path zero = dir / "run0";
    ok = ok && run_cli("freeinit --iters 0" + cfg + " -o " + zero.string(), dir / "log") == 0;
    const bool n0 = ok && slurp(zero / "freeinit_z0.fin") == slurp(zero / "sample_z0.fin");
    return {ok && identical && n0, std::string("commands ok ") + (ok ? "yes" : "no") +
                                       ", byte-identical artifacts " + (identical ? "yes" : "no") +
                                       ", --iters 0 equals sample " + (n0 ? "yes" : "no")};
}

// Trains the default-config model with the CLI unless an up-to-date copy exists.
ToyDenoiser<float> default_model(const ExperimentConfig& cfg, const fs::path& work)
{
    const fs::path dir = work / "model";
    ExperimentConfig c = cfg;
    c.output_dir = dir.string();
    const std::string wanted = to_json(c).dump(2) + "\n";
    if (!fs::exists(dir / "model.fin") || slurp(dir / "train_config.json") != wanted ||
        !fs::exists(dir / "train_report.json")) {
        fs::create_directories(dir);
        std::ofstream(dir / "cfg.json") << wanted;
        std::cout << "training the default model into " << dir << std::endl;
        if (run_cli("train -c " + (dir / "cfg.json").string(), dir / "train.log") != 0)
            throw std::runtime_error("training failed, see " + (dir / "train.log").string());
    }
    return load_weights(dir / "model");
}

} // namespace

int main(int argc, char** argv)
{
    tune_allocator();
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::current_path() / "acceptance_work";
    fs::create_directories(work);

    ExperimentConfig cfg;
    cfg.propagate_seed();
    cfg.validate();
    const ToyDenoiser<float> model = default_model(cfg, work);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 spectral correctness", spectral_correctness},
        {"2 schedule and forward process", schedule_forward},
        {"3 DDIM algebra and determinism", [&] { return ddim_algebra(model, cfg); }},
        {"4 per-band SNR analysis", [&] { return snr_analysis(cfg); }},
        {"5 low-frequency mixing trend", [&] { return mixing_trend(model, cfg); }},
        {"6 FreeInit efficacy", [&] { return freeinit_efficacy(model, cfg); }},
        {"7 coarse-to-fine schedule", coarse_to_fine},
        {"8 model training", [&] { return model_training(work); }},
        {"9 CLI reproducibility", [&] { return cli_reproducibility(work); }},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << name << ": " << o.detail << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
