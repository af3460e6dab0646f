// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <string>

#include "freeinit/tensor.hpp"

namespace testing {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("freeinit_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline freeinit::VideoTensor random_tensor(const freeinit::Shape& shape, std::uint64_t seed)
{
    freeinit::RngState rng(seed);
    return freeinit::gaussian_tensor(shape, rng);
}

inline bool bit_equal(const freeinit::VideoTensor& a, const freeinit::VideoTensor& b)
{
    return a.shape() == b.shape() &&
           std::equal(a.data(), a.data() + a.numel(), b.data(),
                      [](float x, float y) { return std::memcmp(&x, &y, sizeof x) == 0; });
}

} // namespace testing
