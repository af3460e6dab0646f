// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "freeinit/dataset.hpp"
#include "freeinit/sampler.hpp"
#include "freeinit/schedule.hpp"
#include "freeinit/spectral.hpp"
#include "freeinit/tensor.hpp"

namespace freeinit {

/// Largest normalized radius on the centered grid (all three axes at -1).
inline constexpr double kMaxRadius = 1.7320508075688772;

/// Half-open interval [lo, hi) of normalized radius d; the last band of a
/// BandSpec also includes its upper edge.
struct Band {
    double lo = 0.0;
    double hi = 0.0;
};

struct BandSpec {
    std::vector<Band> bands;

    /// Bands [0, e0), [e0, e1), ..., [e_last, sqrt(3)].
    static BandSpec from_edges(const std::vector<double>& interior_edges);
    /// Edges {0.25, 0.5, 1.0}: four bands.
    static BandSpec standard();

    std::size_t size() const { return bands.size(); }
    /// Index of the band holding radius d, or -1.
    int band_of(double d) const;
    /// Throws ParameterError unless bands are contiguous from 0 to sqrt(3),
    /// and ParameterError naming the band if one holds no bin of the grid.
    void validate(Index frames, Index height, Index width) const;
    /// Band index per bin of the centered grid (FrequencyMask layout).
    std::vector<int> assign(Index frames, Index height, Index width) const;
};

struct BandSnr {
    Band band;
    Index bins = 0;
    /// sum of |FFT3(z0)|^2 and |FFT3(eps)|^2 over the band, channels pooled.
    double signal_energy = 0.0;
    double noise_energy = 0.0;
    /// One value per entry of SpectrumReport::ts.
    std::vector<double> snr_db;
};

struct SpectrumReport {
    std::vector<int> ts;
    std::vector<BandSnr> bands;
    Shape shape;
    /// Number of (z0, eps) pairs averaged; 1 for a single video.
    int videos = 1;
    nlohmann::json metadata = nlohmann::json::object();
};

/// Per-band energies of one tensor, channels pooled.
std::vector<double> band_energies(const VideoTensor& x, const BandSpec& bands);

/// SNR_dB(t, band) = 10 log10(abar_t / (1 - abar_t) * E_z0(band) / E_eps(band)).
/// Bands with zero noise energy report +inf, zero signal energy -inf.
SpectrumReport snr_report(const VideoTensor& z0, const VideoTensor& eps, const NoiseSchedule& s,
                          const BandSpec& bands, const std::vector<int>& ts);

/// Mean of per-video SNR_dB over `videos`, each paired with fresh noise from
/// substream "snr:<i>" of `seed`.
SpectrumReport dataset_snr_report(const std::vector<LabeledVideo>& videos,
                                  const NoiseSchedule& s, const BandSpec& bands,
                                  const std::vector<int>& ts, std::uint64_t seed);

nlohmann::json to_json(const SpectrumReport& r);
/// Columns t,band,d_lo,d_hi,bins,snr_db.
void write_snr_csv(const SpectrumReport& r, std::ostream& out);

struct ConsistencyScore {
    double score = 0.0;
    /// True if some frame had zero variance and its similarity was taken as 0.
    bool degenerate = false;
};

/// Mean cosine similarity between mean-subtracted frame 0 and each later
/// frame. Requires at least two frames.
ConsistencyScore temporal_consistency(const VideoTensor& v);

/// Ideal mask keeping the lowest-radius bins, about fraction r of all bins.
/// Bins at equal radius are kept or dropped together, so the selected count
/// is the largest tie-closed prefix not exceeding round(r * bins); masks are
/// nested in r and r = 1 keeps everything.
FrequencyMask ratio_mask(double r, Index frames, Index height, Index width);

struct MixingOptions {
    std::vector<double> keep_ratios{0.0, 0.2, 0.5, 0.8, 1.0};
    int cond = kUnconditional;
    double guidance_weight = 7.5;
    int ddim_steps = 25;
    std::uint64_t seed = 0;
};

struct MixingRow {
    double ratio = 0.0;
    Index kept_bins = 0;
    /// L2 distance to the full-z_T output.
    double l2 = 0.0;
    double consistency = 0.0;
    /// |consistency - consistency of the full-z_T output|.
    double consistency_gap = 0.0;
};

struct MixingResult {
    std::vector<MixingRow> rows;
    std::vector<VideoTensor> outputs;
    VideoTensor reference;
};

/// Diffuses `z0_real` to T with noise eps, keeps the low band selected by
/// each keep ratio, fills the rest from one shared eta, samples, and compares
/// against sampling from the unmodified z_T.
MixingResult mixing_experiment(const EpsModel& model, const VideoTensor& z0_real,
                               const NoiseSchedule& s, const MixingOptions& options);

struct AblationGrid {
    std::vector<FilterFamily> families{FilterFamily::gaussian};
    std::vector<double> d0s{0.25};
    std::vector<int> iterations{4};
    std::vector<bool> reuse_eps{true};
    std::vector<bool> noise_reinit{true};
    /// Run j uses class classes[j % size] and seed base_seed + j.
    std::vector<int> classes{0};
    int runs = 1;
    std::uint64_t base_seed = 0;
    int ddim_steps = 25;
    double guidance_weight = 7.5;
    int butterworth_order = 4;

    std::size_t points() const;
    void validate() const;
};

struct AblationPoint {
    FilterSpec filter;
    int iterations = 0;
    bool reuse_eps = true;
    bool noise_reinit = true;
};

/// Grid points in row-major order over (family, d0, N, reuse_eps, NR).
std::vector<AblationPoint> expand_grid(const AblationGrid& grid);

struct AblationRow {
    std::size_t point = 0;
    int run = 0;
    int cls = 0;
    std::uint64_t seed = 0;
    /// Consistency of the sample after each pass 0..N.
    std::vector<double> scores;
    bool degenerate = false;
};

struct AblationSummary {
    AblationPoint point;
    double mean = 0.0;
    double stddev = 0.0;
    /// Mean over runs of the pass-i score.
    std::vector<double> mean_by_iteration;
    /// Fraction of runs whose pass-1 score beats pass 0 (0 when N = 0).
    double improved_fraction = 0.0;
};

struct AblationResult {
    std::vector<AblationPoint> points;
    std::vector<AblationRow> rows;
    std::vector<AblationSummary> summary;
};

/// Runs every (point, run) pair on `threads` workers. Results are ordered
/// by (point, run) and independent of the thread count.
AblationResult ablation_run(const EpsModel& model, const AblationGrid& grid, const Shape& shape,
                            const NoiseSchedule& s, int threads = 1);

/// Header: point,family,d0,order,iterations,reuse_eps,noise_reinit,run,class,
/// seed,score_final,score_iter0..score_iterK (K = largest N in the grid).
void write_ablation_csv(const AblationResult& r, std::ostream& out);
nlohmann::json to_json(const AblationResult& r);

} // namespace freeinit
