// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <complex>
#include <string>

#include "freeinit/tensor.hpp"

namespace freeinit {

/// 3D (frames, height, width) spectrum of a video tensor, one per channel,
/// stored in the tensor's own index order with every frequency axis
/// centered: index i on an axis of length N holds frequency i - N/2
/// (integer division), so DC sits at (F/2, H/2, W/2).
///
/// The forward transform is unnormalized; the inverse carries 1/(F*H*W).
class Spectrum {
public:
    Spectrum() = default;
    explicit Spectrum(const Shape& shape);

    const Shape& shape() const { return shape_; }
    Eigen::ArrayXcd& values() { return values_; }
    const Eigen::ArrayXcd& values() const { return values_; }

    Index offset(Index f, Index c, Index h, Index w) const
    {
        return ((f * shape_.channels + c) * shape_.height + h) * shape_.width + w;
    }
    std::complex<double>& operator()(Index f, Index c, Index h, Index w)
    {
        return values_[offset(f, c, h, w)];
    }
    const std::complex<double>& operator()(Index f, Index c, Index h, Index w) const
    {
        return values_[offset(f, c, h, w)];
    }

    /// sum |X|^2 over all bins.
    double energy() const { return values_.abs2().sum(); }

private:
    Shape shape_;
    Eigen::ArrayXcd values_;
};

Spectrum fft3(const VideoTensor& x);

struct InverseResult {
    VideoTensor real;
    /// Largest |imag| discarded, relative to the largest |real| (absolute if
    /// the real part is identically zero).
    double imaginary_residue = 0.0;
};

InverseResult ifft3_checked(const Spectrum& s);
/// Inverse transform keeping the real part.
VideoTensor ifft3(const Spectrum& s);

enum class FilterFamily { ideal, gaussian, butterworth };

std::string to_string(FilterFamily f);
FilterFamily filter_family_from_string(const std::string& s);

/// Low-pass filter description. `d0` is the normalized stop frequency on
/// axes scaled to [-1, 1] (Nyquist = 1).
struct FilterSpec {
    FilterFamily family = FilterFamily::gaussian;
    double d0 = 0.25;
    int order = 4;

    void validate() const;
    friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

/// Real mask in [0, 1] over the centered (F, H, W) grid, shared by channels.
class FrequencyMask {
public:
    FrequencyMask() = default;
    FrequencyMask(Index frames, Index height, Index width, Eigen::ArrayXd values);

    static FrequencyMask constant(Index frames, Index height, Index width, double v);

    Index frames() const { return frames_; }
    Index height() const { return height_; }
    Index width() const { return width_; }
    Index size() const { return values_.size(); }

    const Eigen::ArrayXd& values() const { return values_; }
    double operator()(Index f, Index h, Index w) const
    {
        return values_[(f * height_ + h) * width_ + w];
    }

    /// 1 - mask.
    FrequencyMask complement() const;

    /// True if the mask matches the frequency grid of `s`.
    bool matches(const Shape& s) const
    {
        return s.frames == frames_ && s.height == height_ && s.width == width_;
    }

    /// Mask as an (F, 1, H, W) tensor, for export in the tensor file format.
    VideoTensor to_tensor() const;

private:
    Index frames_ = 0;
    Index height_ = 0;
    Index width_ = 0;
    Eigen::ArrayXd values_;
};

/// Normalized coordinate 2*(i - N/2)/N of centered index i on an axis of
/// length N; 0 for N = 1.
double normalized_frequency(Index i, Index n);

/// d^2 = u_t^2 + u_h^2 + u_w^2 for every bin of the centered grid, laid out
/// like FrequencyMask.
Eigen::ArrayXd squared_radius_grid(Index frames, Index height, Index width);

/// Mask value of `spec` at squared normalized radius `d2`.
double filter_response(const FilterSpec& spec, double d2);

FrequencyMask make_mask(const FilterSpec& spec, Index frames, Index height, Index width);

Spectrum apply_mask(const Spectrum& s, const FrequencyMask& m);

/// ifft3(fft3(x) * m).
VideoTensor low_pass(const VideoTensor& x, const FrequencyMask& m);
/// ifft3(fft3(x) * (1 - m)).
VideoTensor high_pass(const VideoTensor& x, const FrequencyMask& m);

/// ifft3(fft3(z_t) * m + fft3(eta) * (1 - m)): keeps the low band of `z_t`
/// and draws the high band from `eta`.
VideoTensor reinitialize_noise(const VideoTensor& z_t, const VideoTensor& eta,
                               const FrequencyMask& m);

} // namespace freeinit
