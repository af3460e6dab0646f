// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "freeinit/tensor.hpp"

namespace freeinit {

/// N-dimensional float32 payload as stored on disk.
///
/// File layout (little-endian):
///   "FIN1" | ndim:u8 | dims:u64[ndim] | payload:f32[prod(dims)]
struct RawTensor {
    std::vector<std::uint64_t> dims;
    std::vector<float> values;

    std::uint64_t element_count() const;
};

void save_raw_tensor(const RawTensor& t, const std::filesystem::path& path);
RawTensor load_raw_tensor(const std::filesystem::path& path);

/// Writes a 4-dim (F,C,H,W) tensor file.
void save_tensor(const VideoTensor& t, const std::filesystem::path& path);
/// Reads a tensor file; requires ndim == 4.
VideoTensor load_tensor(const std::filesystem::path& path);

/// Writes `frame_%04d.pgm` per frame (binary P5, maxval 255), mapping
/// [lo, hi] linearly onto [0, 255] with clamping and round-half-up.
void export_frames_pgm(const VideoTensor& t, const std::filesystem::path& dir, double lo,
                       double hi);

/// Shortest decimal that round-trips `v`; "inf", "-inf" and "nan" for
/// non-finite values. Used for every number written to CSV.
std::string format_number(double v);

/// Writes `text` to `path`, replacing any existing file.
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Pixel value written for `v` by export_frames_pgm.
std::uint8_t pgm_level(double v, double lo, double hi);

} // namespace freeinit
