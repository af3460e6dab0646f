// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "freeinit/tensor.hpp"

namespace freeinit {

/// Motion classes of the synthetic videos; the integer value is the class
/// label used for conditioning.
enum class MotionClass : int { static_scene = 0, drift_left = 1, drift_right = 2, orbit = 3 };

inline constexpr int kMotionClassCount = 4;

std::string to_string(MotionClass c);
MotionClass motion_class_from_string(const std::string& s);

/// Smooth Gaussian blobs over a low-frequency periodic background on a
/// torus. Drift classes pan the whole scene; orbit moves each blob on a
/// circle; static keeps everything fixed. Values are clamped to [-1, 1].
struct SyntheticVideoConfig {
    Index frames = 8;
    Index height = 32;
    Index width = 32;
    int n_videos = 2000;
    std::vector<MotionClass> classes{MotionClass::static_scene, MotionClass::drift_left,
                                     MotionClass::drift_right, MotionClass::orbit};
    int blobs_min = 1;
    int blobs_max = 3;
    double radius_min = 2.5;
    double radius_max = 5.0;
    double amplitude_min = 0.6;
    double amplitude_max = 1.0;
    /// Pixels per frame.
    double velocity_min = 0.5;
    double velocity_max = 1.5;
    double background_amplitude = 0.3;
    double background_level = -0.4;
    /// Relative per-frame blob amplitude noise.
    double jitter = 0.02;
    std::uint64_t seed = 0;

    Shape shape() const { return {frames, 1, height, width}; }
    void validate() const;
};

nlohmann::json to_json(const SyntheticVideoConfig& c);

struct LabeledVideo {
    VideoTensor video;
    int label = 0;
};

/// Parameters of one synthetic scene; render_scene is a pure function of it.
struct SceneParams {
    MotionClass motion = MotionClass::static_scene;
    struct Blob {
        double cx, cy, radius, amplitude, orbit_radius, orbit_phase;
    };
    std::vector<Blob> blobs;
    double velocity = 1.0;
    int wave_x = 0;
    int wave_y = 0;
    double phase = 0.0;
    /// amplitude multiplier per (frame, blob); empty means no jitter.
    std::vector<double> jitter;
};

SceneParams draw_scene(const SyntheticVideoConfig& cfg, MotionClass motion, RngState& rng);

VideoTensor render_scene(const SyntheticVideoConfig& cfg, const SceneParams& scene);

/// Deterministic given cfg.seed; classes are assigned round-robin over
/// cfg.classes.
std::vector<LabeledVideo> gen_dataset(const SyntheticVideoConfig& cfg);

} // namespace freeinit
