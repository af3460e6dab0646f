// SPDX-License-Identifier: Apache-2.0
#include "freeinit/tensor.hpp"

#include <cmath>
#include <numbers>

namespace freeinit {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace

std::string to_string(const Shape& s)
{
    return "(" + std::to_string(s.frames) + "," + std::to_string(s.channels) + "," +
           std::to_string(s.height) + "," + std::to_string(s.width) + ")";
}

void require_valid(const Shape& s)
{
    if (!s.valid())
        throw ShapeError("invalid shape " + to_string(s) + ": every dimension must be >= 1");
}

void require_same_shape(const Shape& a, const Shape& b, std::string_view what)
{
    if (!(a == b))
        throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a) + " vs " +
                         to_string(b));
}

VideoTensor::VideoTensor(const Shape& shape) : VideoTensor(shape, 0.0f) {}

VideoTensor::VideoTensor(const Shape& shape, float fill) : shape_(shape)
{
    require_valid(shape);
    values_ = Storage::Constant(shape.numel(), fill);
}

VideoTensor::VideoTensor(const Shape& shape, Storage values)
    : shape_(shape), values_(std::move(values))
{
    require_valid(shape);
    if (values_.size() != shape.numel())
        throw ShapeError("value count " + std::to_string(values_.size()) +
                         " does not match shape " + to_string(shape));
}

double squared_norm(const VideoTensor& t)
{
    return t.values().cast<double>().square().sum();
}

double mean(const VideoTensor& t)
{
    return t.values().cast<double>().mean();
}

double variance(const VideoTensor& t)
{
    const Eigen::ArrayXd v = t.values().cast<double>();
    const double m = v.mean();
    return (v - m).square().sum() / static_cast<double>(v.size());
}

double max_abs_diff(const VideoTensor& a, const VideoTensor& b)
{
    require_same_shape(a.shape(), b.shape(), "max_abs_diff");
    return (a.values().cast<double>() - b.values().cast<double>()).abs().maxCoeff();
}

double l2_distance(const VideoTensor& a, const VideoTensor& b)
{
    require_same_shape(a.shape(), b.shape(), "l2_distance");
    return std::sqrt((a.values().cast<double>() - b.values().cast<double>()).square().sum());
}

double relative_l2_error(const VideoTensor& a, const VideoTensor& b)
{
    const double denom = std::sqrt(squared_norm(b));
    const double num = l2_distance(a, b);
    return denom > 0.0 ? num / denom : num;
}

RngState RngState::substream(std::string_view name) const
{
    return RngState(mix64(seed_ ^ mix64(fnv1a(name) + kGolden)));
}

std::uint64_t RngState::next_bits()
{
    // splitmix64: the k-th output is mix(state0 + (k+1)*golden), so the stream
    // is addressable by position.
    const std::uint64_t base = mix64(seed_ + kGolden);
    ++position_;
    return mix64(base + position_ * kGolden);
}

double RngState::uniform()
{
    return (static_cast<double>(next_bits() >> 11) + 0.5) * 0x1.0p-53;
}

double RngState::normal()
{
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngState::below(std::uint64_t n)
{
    if (n == 0)
        throw ParameterError("RngState::below: n must be positive");
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

VideoTensor gaussian_tensor(const Shape& shape, RngState& rng)
{
    require_valid(shape);
    VideoTensor out(shape);
    for (Index i = 0; i < out.numel(); ++i)
        out.values()[i] = static_cast<float>(rng.normal());
    return out;
}

} // namespace freeinit
