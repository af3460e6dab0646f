// SPDX-License-Identifier: Apache-2.0
#include "freeinit/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <vector>

namespace freeinit {

namespace {

using cplx = std::complex<double>;

// In-place 1D transforms along one axis of a contiguous (F, H, W) block.
class AxisTransformer {
public:
    AxisTransformer() { fft_.SetFlag(Eigen::FFT<double>::Unscaled); }

    void run(std::vector<cplx>& block, Index frames, Index height, Index width, bool inverse)
    {
        transform_axis(block, frames * height, width, 1, [&](Index line) {
            return line * width;
        }, inverse);
        transform_axis(block, frames * width, height, width, [&](Index line) {
            return (line / width) * height * width + line % width;
        }, inverse);
        transform_axis(block, height * width, frames, height * width, [&](Index line) {
            return line;
        }, inverse);
    }

private:
    template <typename Start>
    void transform_axis(std::vector<cplx>& block, Index lines, Index n, Index stride,
                        Start start, bool inverse)
    {
        if (n == 1)
            return;
        in_.resize(static_cast<std::size_t>(n));
        out_.resize(static_cast<std::size_t>(n));
        for (Index line = 0; line < lines; ++line) {
            const Index base = start(line);
            for (Index i = 0; i < n; ++i)
                in_[i] = block[base + i * stride];
            if (inverse)
                fft_.inv(out_, in_);
            else
                fft_.fwd(out_, in_);
            for (Index i = 0; i < n; ++i)
                block[base + i * stride] = out_[i];
        }
    }

    Eigen::FFT<double> fft_;
    std::vector<cplx> in_;
    std::vector<cplx> out_;
};

// Natural FFT index holding the frequency stored at centered index i.
inline Index natural_index(Index i, Index n)
{
    return (i - n / 2 + n) % n;
}

} // namespace

Spectrum::Spectrum(const Shape& shape) : shape_(shape)
{
    require_valid(shape);
    values_ = Eigen::ArrayXcd::Zero(shape.numel());
}

Spectrum fft3(const VideoTensor& x)
{
    const Shape& s = x.shape();
    Spectrum out(s);
    std::vector<cplx> block(static_cast<std::size_t>(s.frames * s.height * s.width));
    AxisTransformer fft;

    for (Index c = 0; c < s.channels; ++c) {
        for (Index f = 0; f < s.frames; ++f)
            for (Index h = 0; h < s.height; ++h)
                for (Index w = 0; w < s.width; ++w)
                    block[(f * s.height + h) * s.width + w] = x(f, c, h, w);

        fft.run(block, s.frames, s.height, s.width, false);

        for (Index f = 0; f < s.frames; ++f) {
            const Index nf = natural_index(f, s.frames);
            for (Index h = 0; h < s.height; ++h) {
                const Index nh = natural_index(h, s.height);
                for (Index w = 0; w < s.width; ++w)
                    out(f, c, h, w) = block[(nf * s.height + nh) * s.width +
                                            natural_index(w, s.width)];
            }
        }
    }
    return out;
}

InverseResult ifft3_checked(const Spectrum& spec)
{
    const Shape& s = spec.shape();
    InverseResult result{VideoTensor(s), 0.0};
    std::vector<cplx> block(static_cast<std::size_t>(s.frames * s.height * s.width));
    AxisTransformer fft;
    const double scale = 1.0 / static_cast<double>(s.frames * s.height * s.width);
    double max_real = 0.0;
    double max_imag = 0.0;

    for (Index c = 0; c < s.channels; ++c) {
        for (Index f = 0; f < s.frames; ++f) {
            const Index nf = natural_index(f, s.frames);
            for (Index h = 0; h < s.height; ++h) {
                const Index nh = natural_index(h, s.height);
                for (Index w = 0; w < s.width; ++w)
                    block[(nf * s.height + nh) * s.width + natural_index(w, s.width)] =
                        spec(f, c, h, w);
            }
        }

        fft.run(block, s.frames, s.height, s.width, true);

        for (Index f = 0; f < s.frames; ++f)
            for (Index h = 0; h < s.height; ++h)
                for (Index w = 0; w < s.width; ++w) {
                    const cplx v = block[(f * s.height + h) * s.width + w] * scale;
                    max_real = std::max(max_real, std::abs(v.real()));
                    max_imag = std::max(max_imag, std::abs(v.imag()));
                    result.real(f, c, h, w) = static_cast<float>(v.real());
                }
    }
    result.imaginary_residue = max_real > 0.0 ? max_imag / max_real : max_imag;
    return result;
}

VideoTensor ifft3(const Spectrum& s)
{
    return ifft3_checked(s).real;
}

std::string to_string(FilterFamily f)
{
    switch (f) {
    case FilterFamily::ideal:
        return "ideal";
    case FilterFamily::gaussian:
        return "gaussian";
    case FilterFamily::butterworth:
        return "butterworth";
    }
    return "unknown";
}

FilterFamily filter_family_from_string(const std::string& s)
{
    if (s == "ideal" || s == "ilpf")
        return FilterFamily::ideal;
    if (s == "gaussian" || s == "glpf")
        return FilterFamily::gaussian;
    if (s == "butterworth" || s == "blpf")
        return FilterFamily::butterworth;
    throw ParameterError("unknown filter family \"" + s + "\"");
}

void FilterSpec::validate() const
{
    if (!(d0 > 0.0 && d0 <= 1.0))
        throw ParameterError("filter: d0 must be in (0, 1], got " + std::to_string(d0));
    if (order < 1)
        throw ParameterError("filter: order must be >= 1");
}

FrequencyMask::FrequencyMask(Index frames, Index height, Index width, Eigen::ArrayXd values)
    : frames_(frames), height_(height), width_(width), values_(std::move(values))
{
    if (frames < 1 || height < 1 || width < 1)
        throw ShapeError("mask: every dimension must be >= 1");
    if (values_.size() != frames * height * width)
        throw ShapeError("mask: value count does not match grid");
}

FrequencyMask FrequencyMask::constant(Index frames, Index height, Index width, double v)
{
    return FrequencyMask(frames, height, width, Eigen::ArrayXd::Constant(frames * height * width, v));
}

FrequencyMask FrequencyMask::complement() const
{
    return FrequencyMask(frames_, height_, width_, 1.0 - values_);
}

VideoTensor FrequencyMask::to_tensor() const
{
    return VideoTensor(Shape{frames_, 1, height_, width_}, values_.cast<float>());
}

double normalized_frequency(Index i, Index n)
{
    if (n == 1)
        return 0.0;
    return 2.0 * static_cast<double>(i - n / 2) / static_cast<double>(n);
}

Eigen::ArrayXd squared_radius_grid(Index frames, Index height, Index width)
{
    Eigen::ArrayXd d2(frames * height * width);
    for (Index f = 0; f < frames; ++f) {
        const double ut = normalized_frequency(f, frames);
        for (Index h = 0; h < height; ++h) {
            const double uh = normalized_frequency(h, height);
            for (Index w = 0; w < width; ++w) {
                const double uw = normalized_frequency(w, width);
                d2[(f * height + h) * width + w] = ut * ut + uh * uh + uw * uw;
            }
        }
    }
    return d2;
}

double filter_response(const FilterSpec& spec, double d2)
{
    const double d0sq = spec.d0 * spec.d0;
    switch (spec.family) {
    case FilterFamily::ideal:
        return d2 <= d0sq ? 1.0 : 0.0;
    case FilterFamily::gaussian:
        return std::exp(-d2 / (2.0 * d0sq));
    case FilterFamily::butterworth:
        return 1.0 / (1.0 + std::pow(d2 / d0sq, spec.order));
    }
    return 0.0;
}

FrequencyMask make_mask(const FilterSpec& spec, Index frames, Index height, Index width)
{
    spec.validate();
    Eigen::ArrayXd d2 = squared_radius_grid(frames, height, width);
    Eigen::ArrayXd values = d2.unaryExpr([&](double v) { return filter_response(spec, v); });
    return FrequencyMask(frames, height, width, std::move(values));
}

Spectrum apply_mask(const Spectrum& s, const FrequencyMask& m)
{
    if (!m.matches(s.shape()))
        throw ShapeError("mask grid does not match spectrum shape " + to_string(s.shape()));
    const Shape& sh = s.shape();
    Spectrum out(sh);
    for (Index f = 0; f < sh.frames; ++f)
        for (Index c = 0; c < sh.channels; ++c)
            for (Index h = 0; h < sh.height; ++h)
                for (Index w = 0; w < sh.width; ++w)
                    out(f, c, h, w) = s(f, c, h, w) * m(f, h, w);
    return out;
}

VideoTensor low_pass(const VideoTensor& x, const FrequencyMask& m)
{
    return ifft3(apply_mask(fft3(x), m));
}

VideoTensor high_pass(const VideoTensor& x, const FrequencyMask& m)
{
    return ifft3(apply_mask(fft3(x), m.complement()));
}

VideoTensor reinitialize_noise(const VideoTensor& z_t, const VideoTensor& eta,
                               const FrequencyMask& m)
{
    require_same_shape(z_t.shape(), eta.shape(), "reinitialize_noise");
    if (!m.matches(z_t.shape()))
        throw ShapeError("reinitialize_noise: mask grid does not match " +
                         to_string(z_t.shape()));
    Spectrum low = apply_mask(fft3(z_t), m);
    Spectrum high = apply_mask(fft3(eta), m.complement());
    low.values() += high.values();
    return ifft3(low);
}

} // namespace freeinit
