// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <string_view>

#include "freeinit/error.hpp"

namespace freeinit {

using Index = Eigen::Index;

/// Extent of a video tensor: frames x channels x height x width.
struct Shape {
    Index frames = 1;
    Index channels = 1;
    Index height = 1;
    Index width = 1;

    Index numel() const { return frames * channels * height * width; }
    Index frame_size() const { return channels * height * width; }
    bool valid() const { return frames > 0 && channels > 0 && height > 0 && width > 0; }

    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Throws ShapeError if any extent is zero or negative.
void require_valid(const Shape& s);

/// Throws ShapeError naming `what` unless the shapes agree.
void require_same_shape(const Shape& a, const Shape& b, std::string_view what);

/// Dense real-valued [frames, channels, height, width] array, row-major with
/// width fastest. Storage is float32; reductions accumulate in double.
class VideoTensor {
public:
    using Storage = Eigen::ArrayXf;

    VideoTensor() = default;
    explicit VideoTensor(const Shape& shape);
    VideoTensor(const Shape& shape, float fill);
    VideoTensor(const Shape& shape, Storage values);

    const Shape& shape() const { return shape_; }
    Index numel() const { return values_.size(); }

    Storage& values() { return values_; }
    const Storage& values() const { return values_; }

    float* data() { return values_.data(); }
    const float* data() const { return values_.data(); }

    Index offset(Index f, Index c, Index h, Index w) const
    {
        return ((f * shape_.channels + c) * shape_.height + h) * shape_.width + w;
    }
    float& operator()(Index f, Index c, Index h, Index w) { return values_[offset(f, c, h, w)]; }
    float operator()(Index f, Index c, Index h, Index w) const { return values_[offset(f, c, h, w)]; }

    /// View of one frame (channels*height*width contiguous values).
    Eigen::Map<const Eigen::ArrayXf> frame(Index f) const
    {
        return {values_.data() + f * shape_.frame_size(), shape_.frame_size()};
    }

    bool all_finite() const { return values_.allFinite(); }

private:
    Shape shape_;
    Storage values_;
};

/// Sum of squares accumulated in double.
double squared_norm(const VideoTensor& t);
double mean(const VideoTensor& t);
double variance(const VideoTensor& t);
double max_abs_diff(const VideoTensor& a, const VideoTensor& b);
/// ||a - b|| / ||b||.
double relative_l2_error(const VideoTensor& a, const VideoTensor& b);
double l2_distance(const VideoTensor& a, const VideoTensor& b);

/// Counter-based random stream. The k-th value drawn from a given seed does
/// not depend on how the draws are batched.
class RngState {
public:
    RngState() = default;
    explicit RngState(std::uint64_t seed, std::uint64_t position = 0)
        : seed_(seed), position_(position)
    {
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t position() const { return position_; }

    /// Independent stream keyed by `name`; does not advance this stream.
    RngState substream(std::string_view name) const;

    /// Uniform in the open interval (0, 1).
    double uniform();
    /// Standard normal via Box-Muller (cosine branch) over two counter draws.
    double normal();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    friend bool operator==(const RngState&, const RngState&) = default;

private:
    std::uint64_t next_bits();

    std::uint64_t seed_ = 0;
    std::uint64_t position_ = 0;
};

/// I.i.d. standard-normal tensor, filled in storage order.
VideoTensor gaussian_tensor(const Shape& shape, RngState& rng);

} // namespace freeinit
