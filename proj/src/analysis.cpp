// SPDX-License-Identifier: Apache-2.0
#include "freeinit/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "freeinit/tensor_io.hpp"

namespace freeinit {

BandSpec BandSpec::from_edges(const std::vector<double>& interior_edges)
{
    BandSpec spec;
    double lo = 0.0;
    for (double e : interior_edges) {
        spec.bands.push_back({lo, e});
        lo = e;
    }
    spec.bands.push_back({lo, kMaxRadius});
    return spec;
}

BandSpec BandSpec::standard()
{
    return from_edges({0.25, 0.5, 1.0});
}

int BandSpec::band_of(double d) const
{
    for (std::size_t j = 0; j < bands.size(); ++j) {
        const bool last = j + 1 == bands.size();
        if (d >= bands[j].lo && (d < bands[j].hi || (last && d <= bands[j].hi)))
            return static_cast<int>(j);
    }
    return -1;
}

std::vector<int> BandSpec::assign(Index frames, Index height, Index width) const
{
    const Eigen::ArrayXd d2 = squared_radius_grid(frames, height, width);
    std::vector<int> out(static_cast<std::size_t>(d2.size()));
    for (Index i = 0; i < d2.size(); ++i)
        out[static_cast<std::size_t>(i)] = band_of(std::sqrt(d2[i]));
    return out;
}

void BandSpec::validate(Index frames, Index height, Index width) const
{
    if (bands.empty())
        throw ParameterError("bands: at least one band required");
    if (bands.front().lo != 0.0)
        throw ParameterError("bands: first band must start at 0");
    for (std::size_t j = 0; j < bands.size(); ++j) {
        if (!(bands[j].hi > bands[j].lo))
            throw ParameterError("bands: band " + std::to_string(j) + " is not increasing");
        if (j + 1 < bands.size() && bands[j].hi != bands[j + 1].lo)
            throw ParameterError("bands: gap or overlap after band " + std::to_string(j));
    }
    if (bands.back().hi < kMaxRadius)
        throw ParameterError("bands: last band must reach sqrt(3)");

    std::vector<Index> counts(bands.size(), 0);
    for (int b : assign(frames, height, width))
        if (b >= 0)
            ++counts[static_cast<std::size_t>(b)];
    for (std::size_t j = 0; j < bands.size(); ++j)
        if (counts[j] == 0)
            throw ParameterError("bands: empty band " + std::to_string(j) + " [" +
                                 format_number(bands[j].lo) + ", " +
                                 format_number(bands[j].hi) + ") for grid " +
                                 std::to_string(frames) + "x" + std::to_string(height) + "x" +
                                 std::to_string(width));
}

namespace {

std::vector<double> energies_from_spectrum(const Spectrum& sp, const std::vector<int>& owner,
                                           std::size_t n_bands)
{
    const Shape& sh = sp.shape();
    std::vector<double> e(n_bands, 0.0);
    for (Index f = 0; f < sh.frames; ++f)
        for (Index c = 0; c < sh.channels; ++c)
            for (Index h = 0; h < sh.height; ++h)
                for (Index w = 0; w < sh.width; ++w) {
                    const int b =
                        owner[static_cast<std::size_t>((f * sh.height + h) * sh.width + w)];
                    if (b >= 0)
                        e[static_cast<std::size_t>(b)] += std::norm(sp(f, c, h, w));
                }
    return e;
}

double snr_db(double weight, double signal, double noise)
{
    if (noise == 0.0)
        return signal == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                             : std::numeric_limits<double>::infinity();
    if (signal == 0.0)
        return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(weight * signal / noise);
}

nlohmann::json number_or_string(double v)
{
    if (std::isfinite(v))
        return v;
    return format_number(v);
}

} // namespace

std::vector<double> band_energies(const VideoTensor& x, const BandSpec& bands)
{
    const Shape& sh = x.shape();
    bands.validate(sh.frames, sh.height, sh.width);
    return energies_from_spectrum(fft3(x), bands.assign(sh.frames, sh.height, sh.width),
                                  bands.size());
}

SpectrumReport snr_report(const VideoTensor& z0, const VideoTensor& eps, const NoiseSchedule& s,
                          const BandSpec& bands, const std::vector<int>& ts)
{
    require_same_shape(z0.shape(), eps.shape(), "snr_report");
    const Shape& sh = z0.shape();
    bands.validate(sh.frames, sh.height, sh.width);
    for (int t : ts)
        if (t < 1 || t > s.steps())
            throw ParameterError("snr_report: t=" + std::to_string(t) + " outside [1, " +
                                 std::to_string(s.steps()) + "]");

    const std::vector<int> owner = bands.assign(sh.frames, sh.height, sh.width);
    const auto signal = energies_from_spectrum(fft3(z0), owner, bands.size());
    const auto noise = energies_from_spectrum(fft3(eps), owner, bands.size());

    SpectrumReport r;
    r.ts = ts;
    r.shape = sh;
    for (std::size_t j = 0; j < bands.size(); ++j) {
        BandSnr b;
        b.band = bands.bands[j];
        b.bins = std::count(owner.begin(), owner.end(), static_cast<int>(j)) * sh.channels;
        b.signal_energy = signal[j];
        b.noise_energy = noise[j];
        for (int t : ts)
            b.snr_db.push_back(snr_db(snr_weight(t, s), signal[j], noise[j]));
        r.bands.push_back(std::move(b));
    }
    return r;
}

SpectrumReport dataset_snr_report(const std::vector<LabeledVideo>& videos,
                                  const NoiseSchedule& s, const BandSpec& bands,
                                  const std::vector<int>& ts, std::uint64_t seed)
{
    if (videos.empty())
        throw ParameterError("dataset_snr_report: no videos");
    const RngState root(seed);
    SpectrumReport total;
    for (std::size_t i = 0; i < videos.size(); ++i) {
        RngState rng = root.substream("snr:" + std::to_string(i));
        const VideoTensor eps = gaussian_tensor(videos[i].video.shape(), rng);
        SpectrumReport one = snr_report(videos[i].video, eps, s, bands, ts);
        if (i == 0) {
            total = std::move(one);
            continue;
        }
        require_same_shape(total.shape, one.shape, "dataset_snr_report");
        for (std::size_t j = 0; j < total.bands.size(); ++j) {
            total.bands[j].signal_energy += one.bands[j].signal_energy;
            total.bands[j].noise_energy += one.bands[j].noise_energy;
            for (std::size_t k = 0; k < ts.size(); ++k)
                total.bands[j].snr_db[k] += one.bands[j].snr_db[k];
        }
    }
    const double n = static_cast<double>(videos.size());
    for (auto& b : total.bands) {
        b.signal_energy /= n;
        b.noise_energy /= n;
        for (double& v : b.snr_db)
            v /= n;
    }
    total.videos = static_cast<int>(videos.size());
    return total;
}

nlohmann::json to_json(const SpectrumReport& r)
{
    nlohmann::json bands = nlohmann::json::array();
    for (const auto& b : r.bands) {
        nlohmann::json snr = nlohmann::json::array();
        for (double v : b.snr_db)
            snr.push_back(number_or_string(v));
        bands.push_back({{"d_lo", b.band.lo},
                         {"d_hi", b.band.hi},
                         {"bins", b.bins},
                         {"signal_energy", b.signal_energy},
                         {"noise_energy", b.noise_energy},
                         {"snr_db", snr}});
    }
    return {{"ts", r.ts},
            {"shape", {r.shape.frames, r.shape.channels, r.shape.height, r.shape.width}},
            {"videos", r.videos},
            {"bands", bands},
            {"metadata", r.metadata}};
}

void write_snr_csv(const SpectrumReport& r, std::ostream& out)
{
    out << "t,band,d_lo,d_hi,bins,snr_db\n";
    for (std::size_t k = 0; k < r.ts.size(); ++k)
        for (std::size_t j = 0; j < r.bands.size(); ++j) {
            const auto& b = r.bands[j];
            out << r.ts[k] << ',' << j << ',' << format_number(b.band.lo) << ','
                << format_number(b.band.hi) << ',' << b.bins << ','
                << format_number(b.snr_db[k]) << '\n';
        }
}

ConsistencyScore temporal_consistency(const VideoTensor& v)
{
    const Shape& sh = v.shape();
    if (sh.frames < 2)
        throw ParameterError("temporal_consistency: need at least 2 frames, got " +
                             std::to_string(sh.frames));
    auto centered = [&](Index f) {
        Eigen::ArrayXd x = v.frame(f).cast<double>();
        return (x - x.mean()).eval();
    };
    const Eigen::ArrayXd first = centered(0);
    const double first_norm = std::sqrt(first.square().sum());

    ConsistencyScore out;
    double total = 0.0;
    for (Index f = 1; f < sh.frames; ++f) {
        const Eigen::ArrayXd x = centered(f);
        const double norm = std::sqrt(x.square().sum());
        if (first_norm == 0.0 || norm == 0.0) {
            out.degenerate = true;
            continue;
        }
        total += std::clamp((first * x).sum() / (first_norm * norm), -1.0, 1.0);
    }
    out.score = total / static_cast<double>(sh.frames - 1);
    return out;
}

FrequencyMask ratio_mask(double r, Index frames, Index height, Index width)
{
    if (!(r >= 0.0 && r <= 1.0))
        throw ParameterError("ratio_mask: keep ratio must be in [0, 1]");
    const Eigen::ArrayXd d2 = squared_radius_grid(frames, height, width);
    const Index n = d2.size();
    const auto target = static_cast<Index>(std::floor(r * static_cast<double>(n) + 0.5));

    std::vector<double> sorted(d2.begin(), d2.end());
    std::sort(sorted.begin(), sorted.end());
    // Largest radius whose whole tie group still fits in `target` bins.
    double threshold = -1.0;
    Index i = 0;
    while (i < n) {
        Index j = i;
        while (j < n && sorted[static_cast<std::size_t>(j)] == sorted[static_cast<std::size_t>(i)])
            ++j;
        if (j > target)
            break;
        threshold = sorted[static_cast<std::size_t>(i)];
        i = j;
    }
    Eigen::ArrayXd values = (d2 <= threshold).cast<double>();
    return FrequencyMask(frames, height, width, std::move(values));
}

MixingResult mixing_experiment(const EpsModel& model, const VideoTensor& z0_real,
                               const NoiseSchedule& s, const MixingOptions& options)
{
    const Shape& sh = z0_real.shape();
    require_valid(sh);
    if (options.keep_ratios.empty())
        throw ParameterError("mixing_experiment: no keep ratios");
    if (options.ddim_steps < 1 || options.ddim_steps > s.steps())
        throw ParameterError("mixing_experiment: ddim_steps must be in [1, T]");

    const RngState root = RngState(options.seed).substream("mix");
    RngState eps_rng = root.substream("eps");
    RngState eta_rng = root.substream("eta");
    const VideoTensor eps = gaussian_tensor(sh, eps_rng);
    const VideoTensor eta = gaussian_tensor(sh, eta_rng);
    const VideoTensor z_T = q_sample(z0_real, s.steps(), eps, s);
    const StepPlan plan = make_step_plan(s.steps(), options.ddim_steps);

    auto run = [&](const VideoTensor& init) {
        return ddim_sample(model, init, plan, options.cond, options.guidance_weight, s);
    };

    MixingResult result;
    result.reference = run(z_T);
    const double ref_consistency = temporal_consistency(result.reference).score;

    for (double r : options.keep_ratios) {
        const FrequencyMask mask = ratio_mask(r, sh.frames, sh.height, sh.width);
        const auto kept = static_cast<Index>(mask.values().sum());
        VideoTensor out;
        // Empty and full masks skip the transform so r = 1 reproduces the
        // reference exactly and r = 0 starts from eta itself.
        if (kept == mask.size())
            out = result.reference;
        else if (kept == 0)
            out = run(eta);
        else
            out = run(reinitialize_noise(z_T, eta, mask));

        MixingRow row;
        row.ratio = r;
        row.kept_bins = kept;
        row.l2 = l2_distance(out, result.reference);
        row.consistency = temporal_consistency(out).score;
        row.consistency_gap = std::abs(row.consistency - ref_consistency);
        result.rows.push_back(row);
        result.outputs.push_back(std::move(out));
    }
    return result;
}

std::size_t AblationGrid::points() const
{
    return families.size() * d0s.size() * iterations.size() * reuse_eps.size() *
           noise_reinit.size();
}

void AblationGrid::validate() const
{
    if (points() == 0)
        throw ParameterError("ablation: every grid axis needs at least one value");
    if (classes.empty())
        throw ParameterError("ablation: at least one class required");
    if (runs < 1)
        throw ParameterError("ablation: runs must be >= 1");
    for (double d0 : d0s)
        FilterSpec{FilterFamily::gaussian, d0, butterworth_order}.validate();
    for (int n : iterations)
        if (n < 0)
            throw ParameterError("ablation: iteration counts must be >= 0");
}

std::vector<AblationPoint> expand_grid(const AblationGrid& grid)
{
    std::vector<AblationPoint> out;
    for (FilterFamily fam : grid.families)
        for (double d0 : grid.d0s)
            for (int n : grid.iterations)
                for (bool reuse : grid.reuse_eps)
                    for (bool nr : grid.noise_reinit)
                        out.push_back({FilterSpec{fam, d0, grid.butterworth_order}, n, reuse, nr});
    return out;
}

AblationResult ablation_run(const EpsModel& model, const AblationGrid& grid, const Shape& shape,
                            const NoiseSchedule& s, int threads)
{
    grid.validate();
    require_valid(shape);
    AblationResult result;
    result.points = expand_grid(grid);
    const std::size_t runs = static_cast<std::size_t>(grid.runs);
    const std::size_t jobs = result.points.size() * runs;
    result.rows.resize(jobs);

    auto job = [&](std::size_t index) {
        const std::size_t p = index / runs;
        const int run = static_cast<int>(index % runs);
        const AblationPoint& point = result.points[p];
        FreeInitConfig config;
        config.iterations = point.iterations;
        config.filter = point.filter;
        config.ddim_steps = grid.ddim_steps;
        config.guidance_weight = grid.guidance_weight;
        config.reuse_eps = point.reuse_eps;
        config.noise_reinit = point.noise_reinit;
        config.seed = grid.base_seed + static_cast<std::uint64_t>(run);

        AblationRow row;
        row.point = p;
        row.run = run;
        row.cls = grid.classes[static_cast<std::size_t>(run) % grid.classes.size()];
        row.seed = config.seed;
        const FreeInitResult fr = freeinit_sample(model, config, shape, row.cls, s);
        for (const auto& z0 : fr.iterations) {
            const ConsistencyScore c = temporal_consistency(z0);
            row.scores.push_back(c.score);
            row.degenerate = row.degenerate || c.degenerate;
        }
        result.rows[index] = std::move(row);
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), jobs);
    if (workers <= 1) {
        for (std::size_t i = 0; i < jobs; ++i)
            job(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < jobs; i = next++) {
                    try {
                        job(i);
                    } catch (...) {
                        const std::lock_guard lock(failure_mutex);
                        if (!failure)
                            failure = std::current_exception();
                        next = jobs;
                    }
                }
            });
        for (auto& t : pool)
            t.join();
        if (failure)
            std::rethrow_exception(failure);
    }

    for (std::size_t p = 0; p < result.points.size(); ++p) {
        AblationSummary sum;
        sum.point = result.points[p];
        const std::size_t passes = static_cast<std::size_t>(sum.point.iterations) + 1;
        sum.mean_by_iteration.assign(passes, 0.0);
        std::vector<double> finals;
        std::size_t improved = 0;
        for (std::size_t r = 0; r < runs; ++r) {
            const AblationRow& row = result.rows[p * runs + r];
            finals.push_back(row.scores.back());
            for (std::size_t i = 0; i < passes; ++i)
                sum.mean_by_iteration[i] += row.scores[i];
            if (passes > 1 && row.scores[1] > row.scores[0])
                ++improved;
        }
        const double n = static_cast<double>(runs);
        for (double& m : sum.mean_by_iteration)
            m /= n;
        sum.mean = std::accumulate(finals.begin(), finals.end(), 0.0) / n;
        if (runs > 1) {
            double ss = 0.0;
            for (double f : finals)
                ss += (f - sum.mean) * (f - sum.mean);
            sum.stddev = std::sqrt(ss / (n - 1.0));
        }
        sum.improved_fraction = static_cast<double>(improved) / n;
        result.summary.push_back(std::move(sum));
    }
    return result;
}

void write_ablation_csv(const AblationResult& r, std::ostream& out)
{
    int max_n = 0;
    for (const auto& p : r.points)
        max_n = std::max(max_n, p.iterations);
    out << "point,family,d0,order,iterations,reuse_eps,noise_reinit,run,class,seed,score_final";
    for (int i = 0; i <= max_n; ++i)
        out << ",score_iter" << i;
    out << '\n';
    for (const auto& row : r.rows) {
        const AblationPoint& p = r.points[row.point];
        out << row.point << ',' << to_string(p.filter.family) << ','
            << format_number(p.filter.d0) << ',' << p.filter.order << ',' << p.iterations << ','
            << (p.reuse_eps ? 1 : 0) << ',' << (p.noise_reinit ? 1 : 0) << ',' << row.run << ','
            << row.cls << ',' << row.seed << ',' << format_number(row.scores.back());
        for (int i = 0; i <= max_n; ++i) {
            out << ',';
            if (static_cast<std::size_t>(i) < row.scores.size())
                out << format_number(row.scores[static_cast<std::size_t>(i)]);
        }
        out << '\n';
    }
}

nlohmann::json to_json(const AblationResult& r)
{
    nlohmann::json points = nlohmann::json::array();
    for (std::size_t p = 0; p < r.summary.size(); ++p) {
        const AblationSummary& s = r.summary[p];
        points.push_back({{"point", p},
                          {"family", to_string(s.point.filter.family)},
                          {"d0", s.point.filter.d0},
                          {"order", s.point.filter.order},
                          {"iterations", s.point.iterations},
                          {"reuse_eps", s.point.reuse_eps},
                          {"noise_reinit", s.point.noise_reinit},
                          {"mean", s.mean},
                          {"std", s.stddev},
                          {"mean_by_iteration", s.mean_by_iteration},
                          {"improved_fraction", s.improved_fraction}});
    }
    return {{"points", points}, {"rows", r.rows.size()}};
}

} // namespace freeinit
