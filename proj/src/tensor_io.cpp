// SPDX-License-Identifier: Apache-2.0
#include "freeinit/tensor_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace freeinit {

namespace {

static_assert(std::endian::native == std::endian::little,
              "tensor files are little-endian; big-endian hosts need byte swapping");

constexpr std::array<char, 4> kMagic{'F', 'I', 'N', '1'};

template <typename T>
bool read_pod(std::istream& in, T& value)
{
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    return static_cast<std::size_t>(in.gcount()) == sizeof(T);
}

} // namespace

std::uint64_t RawTensor::element_count() const
{
    std::uint64_t n = 1;
    for (auto d : dims)
        n *= d;
    return n;
}

void save_raw_tensor(const RawTensor& t, const std::filesystem::path& path)
{
    if (t.dims.empty() || t.dims.size() > 255)
        throw FormatError("ndim: must be in [1, 255], got " + std::to_string(t.dims.size()));
    if (t.element_count() != t.values.size())
        throw FormatError("dims: product " + std::to_string(t.element_count()) +
                          " does not match payload count " + std::to_string(t.values.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot open " + path.string() + " for writing");
    out.write(kMagic.data(), kMagic.size());
    const auto ndim = static_cast<std::uint8_t>(t.dims.size());
    out.write(reinterpret_cast<const char*>(&ndim), 1);
    out.write(reinterpret_cast<const char*>(t.dims.data()),
              static_cast<std::streamsize>(t.dims.size() * sizeof(std::uint64_t)));
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(float)));
    if (!out)
        throw Error("write failed for " + path.string());
}

RawTensor load_raw_tensor(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingArtifactError("cannot open tensor file " + path.string());

    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != 4 || magic != kMagic)
        throw FormatError(path.string() + ": magic: expected \"FIN1\"");

    std::uint8_t ndim = 0;
    if (!read_pod(in, ndim))
        throw FormatError(path.string() + ": ndim: truncated header");
    if (ndim == 0)
        throw FormatError(path.string() + ": ndim: must be >= 1");

    RawTensor t;
    t.dims.resize(ndim);
    for (auto& d : t.dims) {
        if (!read_pod(in, d))
            throw FormatError(path.string() + ": dims: truncated header");
    }

    // Guard against absurd dims before allocating.
    const auto header_end = in.tellg();
    in.seekg(0, std::ios::end);
    const auto payload_bytes = static_cast<std::uint64_t>(in.tellg() - header_end);
    in.seekg(header_end);

    std::uint64_t count = 1;
    for (auto d : t.dims) {
        if (d != 0 && count > std::numeric_limits<std::uint64_t>::max() / d)
            throw FormatError(path.string() + ": dims: element count overflows");
        count *= d;
    }
    const std::uint64_t expected_bytes = count * sizeof(float);
    if (payload_bytes < expected_bytes)
        throw FormatError(path.string() + ": payload: truncated, expected " +
                          std::to_string(count) + " floats, found " +
                          std::to_string(payload_bytes / sizeof(float)));
    if (payload_bytes > expected_bytes)
        throw FormatError(path.string() + ": dims: product " + std::to_string(count) +
                          " does not match payload of " + std::to_string(payload_bytes) +
                          " bytes");

    t.values.resize(count);
    in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(expected_bytes));
    if (static_cast<std::uint64_t>(in.gcount()) != expected_bytes)
        throw FormatError(path.string() + ": payload: truncated");
    return t;
}

void save_tensor(const VideoTensor& t, const std::filesystem::path& path)
{
    const Shape& s = t.shape();
    RawTensor raw;
    raw.dims = {static_cast<std::uint64_t>(s.frames), static_cast<std::uint64_t>(s.channels),
                static_cast<std::uint64_t>(s.height), static_cast<std::uint64_t>(s.width)};
    raw.values.assign(t.data(), t.data() + t.numel());
    save_raw_tensor(raw, path);
}

VideoTensor load_tensor(const std::filesystem::path& path)
{
    RawTensor raw = load_raw_tensor(path);
    if (raw.dims.size() != 4)
        throw FormatError(path.string() + ": ndim: expected 4 for a video tensor, got " +
                          std::to_string(raw.dims.size()));
    for (auto d : raw.dims)
        if (d == 0)
            throw FormatError(path.string() + ": dims: zero extent");
    Shape s{static_cast<Index>(raw.dims[0]), static_cast<Index>(raw.dims[1]),
            static_cast<Index>(raw.dims[2]), static_cast<Index>(raw.dims[3])};
    VideoTensor t(s);
    std::memcpy(t.data(), raw.values.data(), raw.values.size() * sizeof(float));
    return t;
}

std::uint8_t pgm_level(double v, double lo, double hi)
{
    const double scaled = (v - lo) / (hi - lo) * 255.0;
    const double level = std::floor(scaled + 0.5);
    if (!(level > 0.0))
        return 0;
    if (level >= 255.0)
        return 255;
    return static_cast<std::uint8_t>(level);
}

void export_frames_pgm(const VideoTensor& t, const std::filesystem::path& dir, double lo,
                       double hi)
{
    const Shape& s = t.shape();
    if (s.channels != 1)
        throw ShapeError("export_frames_pgm: unsupported channel count " +
                         std::to_string(s.channels) + " (expected 1)");
    if (!(lo < hi))
        throw ParameterError("export_frames_pgm: min must be < max");

    std::filesystem::create_directories(dir);
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(s.height * s.width));
    for (Index f = 0; f < s.frames; ++f) {
        auto frame = t.frame(f);
        for (Index i = 0; i < frame.size(); ++i)
            pixels[static_cast<std::size_t>(i)] = pgm_level(frame[i], lo, hi);

        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04d.pgm", static_cast<int>(f));
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + (dir / name).string());
        out << "P5\n" << s.width << ' ' << s.height << "\n255\n";
        out.write(reinterpret_cast<const char*>(pixels.data()),
                  static_cast<std::streamsize>(pixels.size()));
    }
}

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out)
        throw Error("write failed: " + path.string());
}

} // namespace freeinit
