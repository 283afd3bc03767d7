#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "deepscan/io/image.hpp"

namespace deepscan::io {

/// Binary PGM (P5) to a single-channel 16-bit uint16 image. Samples are
/// stored as-is; maxval only selects 1- or 2-byte (big-endian) samples.
Image decode_pgm(std::span<const std::uint8_t> bytes);
Image import_pgm(const std::filesystem::path& path);

/// One channel as P5. uint16 images use maxval 2^bits - 1; float32 samples are
/// rounded, clamped to [0, 65535] and written with maxval 65535.
std::vector<std::uint8_t> encode_pgm(const Image& image, std::size_t channel);
void export_pgm(const Image& image, std::size_t channel, const std::filesystem::path& path);

}  // namespace deepscan::io
