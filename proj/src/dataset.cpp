// SPDX-License-Identifier: Apache-2.0
#include "freeinit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace freeinit {

namespace {

double uniform_in(RngState& rng, double lo, double hi)
{
    return lo + (hi - lo) * rng.uniform();
}

// Signed toroidal offset in [-n/2, n/2).
double wrap(double d, double n)
{
    double r = std::fmod(d + n / 2.0, n);
    if (r < 0.0)
        r += n;
    return r - n / 2.0;
}

Index wrap_index(Index i, Index n)
{
    return ((i % n) + n) % n;
}

} // namespace

std::string to_string(MotionClass c)
{
    switch (c) {
    case MotionClass::static_scene:
        return "static";
    case MotionClass::drift_left:
        return "drift-left";
    case MotionClass::drift_right:
        return "drift-right";
    case MotionClass::orbit:
        return "orbit";
    }
    return "unknown";
}

MotionClass motion_class_from_string(const std::string& s)
{
    if (s == "static")
        return MotionClass::static_scene;
    if (s == "drift-left")
        return MotionClass::drift_left;
    if (s == "drift-right")
        return MotionClass::drift_right;
    if (s == "orbit")
        return MotionClass::orbit;
    throw ParameterError("unknown motion class \"" + s + "\"");
}

void SyntheticVideoConfig::validate() const
{
    require_valid(shape());
    if (n_videos < 1)
        throw ParameterError("dataset: n_videos must be >= 1");
    if (classes.empty())
        throw ParameterError("dataset: at least one motion class required");
    if (blobs_min < 0 || blobs_max < blobs_min)
        throw ParameterError("dataset: invalid blob count range");
    if (!(radius_min > 0.0 && radius_max >= radius_min))
        throw ParameterError("dataset: invalid radius range");
    if (velocity_max < velocity_min)
        throw ParameterError("dataset: invalid velocity range");
    if (jitter < 0.0)
        throw ParameterError("dataset: jitter must be >= 0");
}

nlohmann::json to_json(const SyntheticVideoConfig& c)
{
    nlohmann::json classes = nlohmann::json::array();
    for (auto m : c.classes)
        classes.push_back(to_string(m));
    return {{"frames", c.frames},
            {"height", c.height},
            {"width", c.width},
            {"n_videos", c.n_videos},
            {"classes", classes},
            {"blobs_min", c.blobs_min},
            {"blobs_max", c.blobs_max},
            {"radius_min", c.radius_min},
            {"radius_max", c.radius_max},
            {"amplitude_min", c.amplitude_min},
            {"amplitude_max", c.amplitude_max},
            {"velocity_min", c.velocity_min},
            {"velocity_max", c.velocity_max},
            {"background_amplitude", c.background_amplitude},
            {"background_level", c.background_level},
            {"jitter", c.jitter},
            {"seed", c.seed}};
}

SceneParams draw_scene(const SyntheticVideoConfig& cfg, MotionClass motion, RngState& rng)
{
    SceneParams scene;
    scene.motion = motion;
    const int n_blobs =
        cfg.blobs_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(
                            cfg.blobs_max - cfg.blobs_min + 1)));
    for (int b = 0; b < n_blobs; ++b) {
        SceneParams::Blob blob{};
        blob.cx = uniform_in(rng, 0.0, static_cast<double>(cfg.width));
        blob.cy = uniform_in(rng, 0.0, static_cast<double>(cfg.height));
        blob.radius = uniform_in(rng, cfg.radius_min, cfg.radius_max);
        blob.amplitude = uniform_in(rng, cfg.amplitude_min, cfg.amplitude_max);
        blob.orbit_radius = uniform_in(rng, 3.0, 6.0);
        blob.orbit_phase = uniform_in(rng, 0.0, 2.0 * std::numbers::pi);
        scene.blobs.push_back(blob);
    }
    scene.velocity = uniform_in(rng, cfg.velocity_min, cfg.velocity_max);
    scene.wave_x = static_cast<int>(rng.below(2));
    scene.wave_y = static_cast<int>(rng.below(2));
    scene.phase = uniform_in(rng, 0.0, 2.0 * std::numbers::pi);
    if (cfg.jitter > 0.0) {
        scene.jitter.resize(static_cast<std::size_t>(cfg.frames) * scene.blobs.size());
        for (auto& j : scene.jitter)
            j = 1.0 + cfg.jitter * rng.normal();
    }
    return scene;
}

VideoTensor render_scene(const SyntheticVideoConfig& cfg, const SceneParams& scene)
{
    VideoTensor video(cfg.shape());
    const double W = static_cast<double>(cfg.width);
    const double H = static_cast<double>(cfg.height);
    const std::size_t n_blobs = scene.blobs.size();

    for (Index f = 0; f < cfg.frames; ++f) {
        // Whole-scene pan, split into an integer roll and a fractional part
        // so integer velocities reproduce frame 0 exactly.
        double pan = 0.0;
        if (scene.motion == MotionClass::drift_left)
            pan = -scene.velocity * static_cast<double>(f);
        else if (scene.motion == MotionClass::drift_right)
            pan = scene.velocity * static_cast<double>(f);
        const double pan_int = std::floor(pan);
        const double pan_frac = pan - pan_int;
        const auto roll = static_cast<Index>(pan_int);

        for (Index y = 0; y < cfg.height; ++y) {
            for (Index xi = 0; xi < cfg.width; ++xi) {
                const double x = static_cast<double>(wrap_index(xi - roll, cfg.width)) - pan_frac;
                const double yd = static_cast<double>(y);
                double v = cfg.background_level +
                           cfg.background_amplitude *
                               std::cos(2.0 * std::numbers::pi *
                                            (scene.wave_x * x / W + scene.wave_y * yd / H) +
                                        scene.phase);
                for (std::size_t b = 0; b < n_blobs; ++b) {
                    const auto& blob = scene.blobs[b];
                    double bx = blob.cx;
                    double by = blob.cy;
                    if (scene.motion == MotionClass::orbit) {
                        const double angle = blob.orbit_phase + static_cast<double>(f) *
                                                                    scene.velocity /
                                                                    blob.orbit_radius;
                        bx += blob.orbit_radius * std::cos(angle);
                        by += blob.orbit_radius * std::sin(angle);
                    }
                    const double dx = wrap(x - bx, W);
                    const double dy = wrap(yd - by, H);
                    double amp = blob.amplitude;
                    if (!scene.jitter.empty())
                        amp *= scene.jitter[static_cast<std::size_t>(f) * n_blobs + b];
                    v += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * blob.radius * blob.radius));
                }
                video(f, 0, y, xi) = static_cast<float>(std::clamp(v, -1.0, 1.0));
            }
        }
    }
    return video;
}

std::vector<LabeledVideo> gen_dataset(const SyntheticVideoConfig& cfg)
{
    cfg.validate();
    const RngState root = RngState(cfg.seed).substream("dataset");
    std::vector<LabeledVideo> out;
    out.reserve(static_cast<std::size_t>(cfg.n_videos));
    for (int i = 0; i < cfg.n_videos; ++i) {
        const MotionClass motion = cfg.classes[static_cast<std::size_t>(i) % cfg.classes.size()];
        RngState rng = root.substream("video:" + std::to_string(i));
        const SceneParams scene = draw_scene(cfg, motion, rng);
        out.push_back({render_scene(cfg, scene), static_cast<int>(motion)});
    }
    return out;
}

} // namespace freeinit
