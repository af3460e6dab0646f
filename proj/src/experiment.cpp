// SPDX-License-Identifier: Apache-2.0
#include "freeinit/experiment.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

namespace freeinit {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& section)
{
    if (!j.is_object())
        throw ConfigError(section + ": expected an object");
}

void reject_unknown(const json& j, const std::string& section,
                    std::initializer_list<const char*> known)
{
    require_object(j, section);
    const std::set<std::string> keys(known.begin(), known.end());
    for (const auto& [key, _] : j.items())
        if (!keys.contains(key))
            throw ConfigError(section + ": unknown key \"" + key + "\"");
}

template <typename T>
void read(const json& j, const char* key, T& out)
{
    if (j.contains(key))
        out = j.at(key).get<T>();
}

json dataset_json(const SyntheticVideoConfig& d)
{
    json j = to_json(d);
    j.erase("seed");
    return j;
}

SyntheticVideoConfig dataset_from_json(const json& j)
{
    reject_unknown(j, "dataset",
                   {"frames", "height", "width", "n_videos", "classes", "blobs_min", "blobs_max",
                    "radius_min", "radius_max", "amplitude_min", "amplitude_max", "velocity_min",
                    "velocity_max", "background_amplitude", "background_level", "jitter"});
    SyntheticVideoConfig d;
    read(j, "frames", d.frames);
    read(j, "height", d.height);
    read(j, "width", d.width);
    read(j, "n_videos", d.n_videos);
    if (j.contains("classes")) {
        d.classes.clear();
        for (const auto& name : j.at("classes"))
            d.classes.push_back(motion_class_from_string(name.get<std::string>()));
    }
    read(j, "blobs_min", d.blobs_min);
    read(j, "blobs_max", d.blobs_max);
    read(j, "radius_min", d.radius_min);
    read(j, "radius_max", d.radius_max);
    read(j, "amplitude_min", d.amplitude_min);
    read(j, "amplitude_max", d.amplitude_max);
    read(j, "velocity_min", d.velocity_min);
    read(j, "velocity_max", d.velocity_max);
    read(j, "background_amplitude", d.background_amplitude);
    read(j, "background_level", d.background_level);
    read(j, "jitter", d.jitter);
    return d;
}

json training_json(const TrainOptions& t)
{
    json j = to_json(t);
    j.erase("seed");
    return j;
}

TrainOptions training_from_json(const json& j)
{
    reject_unknown(j, "model.training",
                   {"epochs", "learning_rate", "batch_size", "cond_drop_prob", "ema_decay"});
    TrainOptions t;
    read(j, "epochs", t.epochs);
    read(j, "learning_rate", t.learning_rate);
    read(j, "batch_size", t.batch_size);
    read(j, "cond_drop_prob", t.cond_drop_prob);
    read(j, "ema_decay", t.ema_decay);
    return t;
}

json filter_json(const FilterSpec& f)
{
    return {{"family", to_string(f.family)}, {"d0", f.d0}, {"order", f.order}};
}

FilterSpec filter_from_json(const json& j)
{
    reject_unknown(j, "sampler.filter", {"family", "d0", "order"});
    FilterSpec f;
    if (j.contains("family"))
        f.family = filter_family_from_string(j.at("family").get<std::string>());
    read(j, "d0", f.d0);
    read(j, "order", f.order);
    return f;
}

json sampler_json(const SamplerSection& s)
{
    const FreeInitConfig& f = s.freeinit;
    return {{"iterations", f.iterations},
            {"filter", filter_json(f.filter)},
            {"ddim_steps", f.ddim_steps},
            {"coarse_to_fine", f.coarse_to_fine},
            {"guidance_weight", f.guidance_weight},
            {"reuse_eps", f.reuse_eps},
            {"noise_reinit", f.noise_reinit},
            {"class", s.cls}};
}

SamplerSection sampler_from_json(const json& j)
{
    reject_unknown(j, "sampler",
                   {"iterations", "filter", "ddim_steps", "coarse_to_fine", "guidance_weight",
                    "reuse_eps", "noise_reinit", "class"});
    SamplerSection s;
    FreeInitConfig& f = s.freeinit;
    read(j, "iterations", f.iterations);
    if (j.contains("filter"))
        f.filter = filter_from_json(j.at("filter"));
    read(j, "ddim_steps", f.ddim_steps);
    read(j, "coarse_to_fine", f.coarse_to_fine);
    read(j, "guidance_weight", f.guidance_weight);
    read(j, "reuse_eps", f.reuse_eps);
    read(j, "noise_reinit", f.noise_reinit);
    read(j, "class", s.cls);
    return s;
}

json analysis_json(const AnalysisSection& a)
{
    return {{"band_edges", a.band_edges},
            {"snr_ts", a.snr_ts},
            {"snr_videos", a.snr_videos},
            {"mix_ratios", a.mix_ratios},
            {"mix_video", a.mix_video},
            {"ablate",
             {{"families", a.ablate_families},
              {"d0s", a.ablate_d0s},
              {"iterations", a.ablate_iterations},
              {"reuse_eps", a.ablate_reuse_eps},
              {"noise_reinit", a.ablate_noise_reinit},
              {"classes", a.ablate_classes},
              {"runs", a.ablate_runs}}},
            {"pgm", a.pgm},
            {"pgm_range", {a.pgm_lo, a.pgm_hi}}};
}

AnalysisSection analysis_from_json(const json& j)
{
    reject_unknown(j, "analysis",
                   {"band_edges", "snr_ts", "snr_videos", "mix_ratios", "mix_video", "ablate",
                    "pgm", "pgm_range"});
    AnalysisSection a;
    read(j, "band_edges", a.band_edges);
    read(j, "snr_ts", a.snr_ts);
    read(j, "snr_videos", a.snr_videos);
    read(j, "mix_ratios", a.mix_ratios);
    read(j, "mix_video", a.mix_video);
    if (j.contains("ablate")) {
        const json& g = j.at("ablate");
        reject_unknown(g, "analysis.ablate",
                       {"families", "d0s", "iterations", "reuse_eps", "noise_reinit", "classes",
                        "runs"});
        read(g, "families", a.ablate_families);
        read(g, "d0s", a.ablate_d0s);
        read(g, "iterations", a.ablate_iterations);
        read(g, "reuse_eps", a.ablate_reuse_eps);
        read(g, "noise_reinit", a.ablate_noise_reinit);
        read(g, "classes", a.ablate_classes);
        read(g, "runs", a.ablate_runs);
    }
    read(j, "pgm", a.pgm);
    if (j.contains("pgm_range")) {
        const auto range = j.at("pgm_range").get<std::vector<double>>();
        if (range.size() != 2)
            throw ConfigError("analysis.pgm_range: expected [lo, hi]");
        a.pgm_lo = range[0];
        a.pgm_hi = range[1];
    }
    return a;
}

} // namespace

void ExperimentConfig::propagate_seed()
{
    dataset.seed = seed;
    model.training.seed = seed;
    sampler.freeinit.seed = seed;
}

void ExperimentConfig::validate() const
{
    try {
        dataset.validate();
        schedule();
        denoiser().validate();
        model.training.validate();
        sampler.freeinit.validate();
        if (sampler.cls < kUnconditional || sampler.cls >= kMotionClassCount)
            throw ConfigError("sampler.class must be -1 (unconditional) or a motion class label");
        if (model.weights.empty())
            throw ConfigError("model.weights must not be empty");
        bands().validate(dataset.frames, dataset.height, dataset.width);
        for (int t : analysis.snr_ts)
            if (t < 1 || t > schedule_steps)
                throw ConfigError("analysis.snr_ts: t=" + std::to_string(t) + " outside [1, T]");
        if (analysis.snr_videos < 1)
            throw ConfigError("analysis.snr_videos must be >= 1");
        for (double r : analysis.mix_ratios)
            if (!(r >= 0.0 && r <= 1.0))
                throw ConfigError("analysis.mix_ratios: values must be in [0, 1]");
        if (analysis.mix_video < 0)
            throw ConfigError("analysis.mix_video must be >= 0");
        ablation_grid().validate();
        for (int c : analysis.ablate_classes)
            if (c < kUnconditional || c >= kMotionClassCount)
                throw ConfigError("analysis.ablate.classes: invalid label " + std::to_string(c));
        if (!(analysis.pgm_lo < analysis.pgm_hi))
            throw ConfigError("analysis.pgm_range: lo must be below hi");
        if (output_dir.empty())
            throw ConfigError("output_dir must not be empty");
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
}

NoiseSchedule ExperimentConfig::schedule() const
{
    return make_schedule(schedule_kind, schedule_steps, beta_start, beta_end);
}

DenoiserConfig ExperimentConfig::denoiser() const
{
    DenoiserConfig d;
    d.frames = dataset.frames;
    d.channels = 1;
    d.height = dataset.height;
    d.width = dataset.width;
    d.hidden = model.hidden;
    d.time_embed_dim = model.time_embed_dim;
    d.n_classes = kMotionClassCount;
    d.res_blocks = model.res_blocks;
    d.seed = seed;
    return d;
}

BandSpec ExperimentConfig::bands() const
{
    return BandSpec::from_edges(analysis.band_edges);
}

AblationGrid ExperimentConfig::ablation_grid() const
{
    AblationGrid g;
    g.families.clear();
    for (const auto& name : analysis.ablate_families)
        g.families.push_back(filter_family_from_string(name));
    g.d0s = analysis.ablate_d0s;
    g.iterations = analysis.ablate_iterations;
    g.reuse_eps = analysis.ablate_reuse_eps;
    g.noise_reinit = analysis.ablate_noise_reinit;
    g.classes = analysis.ablate_classes;
    g.runs = analysis.ablate_runs;
    g.base_seed = seed;
    g.ddim_steps = sampler.freeinit.ddim_steps;
    g.guidance_weight = sampler.freeinit.guidance_weight;
    g.butterworth_order = sampler.freeinit.filter.order;
    return g;
}

std::filesystem::path ExperimentConfig::weights_stem() const
{
    return std::filesystem::path(output_dir) / model.weights;
}

nlohmann::json to_json(const ExperimentConfig& c)
{
    return {{"schema", kConfigSchema},
            {"seed", c.seed},
            {"output_dir", c.output_dir},
            {"dataset", dataset_json(c.dataset)},
            {"schedule",
             {{"kind", to_string(c.schedule_kind)},
              {"T", c.schedule_steps},
              {"beta_start", c.beta_start},
              {"beta_end", c.beta_end}}},
            {"model",
             {{"hidden", c.model.hidden},
              {"time_embed_dim", c.model.time_embed_dim},
              {"res_blocks", c.model.res_blocks},
              {"weights", c.model.weights},
              {"training", training_json(c.model.training)}}},
            {"sampler", sampler_json(c.sampler)},
            {"analysis", analysis_json(c.analysis)}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j)
{
    ExperimentConfig c;
    try {
        reject_unknown(j, "config",
                       {"schema", "seed", "output_dir", "dataset", "schedule", "model", "sampler",
                        "analysis"});
        const int schema = j.value("schema", kConfigSchema);
        if (schema != kConfigSchema)
            throw ConfigError("config: unsupported schema " + std::to_string(schema) +
                              " (expected " + std::to_string(kConfigSchema) + ")");
        read(j, "seed", c.seed);
        read(j, "output_dir", c.output_dir);
        if (j.contains("dataset"))
            c.dataset = dataset_from_json(j.at("dataset"));
        if (j.contains("schedule")) {
            const json& s = j.at("schedule");
            reject_unknown(s, "schedule", {"kind", "T", "beta_start", "beta_end"});
            if (s.contains("kind"))
                c.schedule_kind = schedule_kind_from_string(s.at("kind").get<std::string>());
            read(s, "T", c.schedule_steps);
            read(s, "beta_start", c.beta_start);
            read(s, "beta_end", c.beta_end);
        }
        if (j.contains("model")) {
            const json& m = j.at("model");
            reject_unknown(m, "model",
                           {"hidden", "time_embed_dim", "res_blocks", "weights", "training"});
            read(m, "hidden", c.model.hidden);
            read(m, "time_embed_dim", c.model.time_embed_dim);
            read(m, "res_blocks", c.model.res_blocks);
            read(m, "weights", c.model.weights);
            if (m.contains("training"))
                c.model.training = training_from_json(m.at("training"));
        }
        if (j.contains("sampler"))
            c.sampler = sampler_from_json(j.at("sampler"));
        if (j.contains("analysis"))
            c.analysis = analysis_from_json(j.at("analysis"));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
    c.propagate_seed();
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse config file " + path.string() + ": " + e.what());
    }
    return experiment_config_from_json(j);
}

} // namespace freeinit
