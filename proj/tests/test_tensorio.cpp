// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>

#include "freeinit/tensor_io.hpp"
#include "helpers.hpp"

using namespace freeinit;

namespace {

std::string read_bytes(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes)
{
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

std::string error_of(const std::filesystem::path& p)
{
    try {
        load_tensor(p);
    } catch (const FormatError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("gaussian_tensor is deterministic per seed")
{
    const Shape shape{8, 1, 32, 32};
    RngState a(7), b(7);
    CHECK(testing::bit_equal(gaussian_tensor(shape, a), gaussian_tensor(shape, b)));
    CHECK(a == b);
}

TEST_CASE("gaussian_tensor moments for (8,1,32,32), seed 0")
{
    RngState rng(0);
    const VideoTensor x = gaussian_tensor({8, 1, 32, 32}, rng);
    const double n = 8192.0;
    CHECK(std::abs(mean(x)) <= 0.02);
    // 3 sigma of the sample variance of n standard normals is 3 sqrt(2 / n).
    CHECK(std::abs(variance(x) - 1.0) <= 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("gaussian_tensor moments pooled over 64 seeds")
{
    const double n = 64.0 * 8192.0;
    double sum = 0.0, sq = 0.0;
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        RngState rng(seed);
        const VideoTensor x = gaussian_tensor({8, 1, 32, 32}, rng);
        sum += x.values().cast<double>().sum();
        sq += x.values().cast<double>().square().sum();
    }
    const double m = sum / n;
    CHECK(std::abs(m) <= 3.0 / std::sqrt(n));
    CHECK(std::abs(sq / n - m * m - 1.0) <= 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("gaussian_tensor degenerate and invalid shapes")
{
    RngState rng(1);
    const VideoTensor one = gaussian_tensor({1, 1, 1, 1}, rng);
    REQUIRE(one.numel() == 1);
    CHECK(std::isfinite(one.values()[0]));
    CHECK_THROWS_AS(gaussian_tensor({0, 1, 4, 4}, rng), ShapeError);
    CHECK_THROWS_AS(gaussian_tensor({2, 1, 4, -1}, rng), ShapeError);
}

TEST_CASE("rng draws do not depend on batch partitioning")
{
    RngState whole(99);
    std::vector<double> all;
    for (int i = 0; i < 200; ++i)
        all.push_back(whole.normal());
    RngState split(99);
    std::vector<double> parts;
    for (int i = 0; i < 100; ++i)
        parts.push_back(split.normal());
    RngState resumed(split.seed(), split.position());
    for (int i = 0; i < 100; ++i)
        parts.push_back(resumed.normal());
    CHECK(all == parts);
}

TEST_CASE("rng substreams are independent of the parent's position")
{
    RngState a(5);
    RngState b(5);
    b.uniform();
    CHECK(a.substream("eta:0") == b.substream("eta:0"));
    CHECK_FALSE(a.substream("eta:0") == a.substream("eta:1"));
    RngState u(3);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }
}

TEST_CASE("VideoTensor layout is row-major with w fastest")
{
    VideoTensor t({2, 3, 4, 5});
    CHECK(t.numel() == 2 * 3 * 4 * 5);
    t(1, 2, 3, 4) = 7.0f;
    CHECK(t.values()[t.numel() - 1] == 7.0f);
    CHECK(t.offset(0, 0, 0, 1) == 1);
    CHECK(t.offset(0, 0, 1, 0) == 5);
    CHECK(t.offset(0, 1, 0, 0) == 20);
    CHECK(t.offset(1, 0, 0, 0) == 60);
    CHECK_THROWS_AS(VideoTensor({2, 2, 2, 2}, VideoTensor::Storage::Zero(15)), ShapeError);
}

TEST_CASE("save/load round trip is bit exact")
{
    const auto dir = testing::scratch_dir("io_roundtrip");
    for (const Shape& shape : {Shape{1, 1, 1, 1}, Shape{8, 1, 32, 32}, Shape{3, 4, 5, 7},
                               Shape{64, 4, 128, 128}}) {
        const VideoTensor x = testing::random_tensor(shape, 11);
        const auto path = dir / "x.fin";
        save_tensor(x, path);
        CHECK(testing::bit_equal(load_tensor(path), x));
        CHECK(std::filesystem::file_size(path) ==
              4 + 1 + 4 * 8 + static_cast<std::uintmax_t>(shape.numel()) * 4);
    }
}

TEST_CASE("tensor file header layout")
{
    const auto dir = testing::scratch_dir("io_header");
    VideoTensor x({1, 1, 1, 2});
    x.values() << 1.0f, -2.0f;
    save_tensor(x, dir / "h.fin");
    const std::string bytes = read_bytes(dir / "h.fin");
    REQUIRE(bytes.size() == 4 + 1 + 32 + 8);
    CHECK(bytes.substr(0, 4) == "FIN1");
    CHECK(static_cast<unsigned char>(bytes[4]) == 4);
    CHECK(static_cast<unsigned char>(bytes[5 + 24]) == 2);  // last dim, low byte
    float second = 0.0f;
    std::memcpy(&second, bytes.data() + 5 + 32 + 4, 4);
    CHECK(second == -2.0f);
}

TEST_CASE("corrupt tensor files raise format errors naming the field")
{
    const auto dir = testing::scratch_dir("io_corrupt");
    const VideoTensor x = testing::random_tensor({2, 1, 3, 3}, 4);
    save_tensor(x, dir / "good.fin");
    const std::string good = read_bytes(dir / "good.fin");

    write_bytes(dir / "magic.fin", "XXXX" + good.substr(4));
    CHECK(error_of(dir / "magic.fin").find("magic") != std::string::npos);

    write_bytes(dir / "short.fin", good.substr(0, good.size() - 4));
    const std::string truncated = error_of(dir / "short.fin");
    CHECK(truncated.find("payload") != std::string::npos);
    CHECK(truncated.find("truncated") != std::string::npos);

    write_bytes(dir / "long.fin", good + std::string(4, '\0'));
    CHECK(error_of(dir / "long.fin").find("dims") != std::string::npos);

    write_bytes(dir / "header.fin", good.substr(0, 9));
    CHECK(error_of(dir / "header.fin").find("dims") != std::string::npos);

    CHECK_THROWS_AS(load_tensor(dir / "absent.fin"), Error);

    RawTensor flat;
    flat.dims = {3};
    flat.values = {1, 2, 3};
    save_raw_tensor(flat, dir / "flat.fin");
    CHECK(load_raw_tensor(dir / "flat.fin").values == flat.values);
    CHECK_THROWS_AS(load_tensor(dir / "flat.fin"), FormatError);
}

TEST_CASE("pgm export maps [min, max] onto [0, 255]")
{
    const auto dir = testing::scratch_dir("pgm");
    const Shape shape{3, 1, 4, 5};
    auto pixels = [&](float value) {
        export_frames_pgm(VideoTensor(shape, value), dir, -1.0, 1.0);
        const std::string bytes = read_bytes(dir / "frame_0002.pgm");
        const std::string header = "P5\n5 4\n255\n";
        REQUIRE(bytes.substr(0, header.size()) == header);
        REQUIRE(bytes.size() == header.size() + 20);
        return bytes.substr(header.size());
    };
    CHECK(pixels(-1.0f) == std::string(20, '\0'));
    CHECK(pixels(1.0f) == std::string(20, '\xff'));
    CHECK(pixels(0.0f) == std::string(20, static_cast<char>(128)));
    CHECK(pixels(-5.0f) == std::string(20, '\0'));
    CHECK(pgm_level(0.0, -1.0, 1.0) == 128);
    CHECK(pgm_level(0.5, 0.0, 255.0) == 1);

    CHECK(std::filesystem::exists(dir / "frame_0000.pgm"));
    CHECK_FALSE(std::filesystem::exists(dir / "frame_0003.pgm"));
    CHECK_THROWS_AS(export_frames_pgm(VideoTensor({1, 2, 2, 2}), dir, 0, 1), ShapeError);
    CHECK_THROWS_AS(export_frames_pgm(VideoTensor(shape), dir, 1, 1), ParameterError);
}

TEST_CASE("format_number round trips")
{
    for (double v : {0.0, -1.5, 0.1, 1e-300, 4.0358297653756833e-05, 123456789.125}) {
        CHECK(std::stod(format_number(v)) == v);
    }
    CHECK(format_number(1.0 / 0.0) == "inf");
    CHECK(format_number(-1.0 / 0.0) == "-inf");
}
