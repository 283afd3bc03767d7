#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "deepscan/io/image.hpp"

namespace deepscan::io {

/// MPI1 container, little-endian:
///   "MPI1" | u32 width | u32 height | u16 channels | u16 bits_per_sample |
///   u8 sample_format (0 = uint16, 1 = float32) | planes in channel order.
inline constexpr std::size_t kMpiHeaderBytes = 17;

std::vector<std::uint8_t> encode_mpi(const Image& image);
Image decode_mpi(std::span<const std::uint8_t> bytes);

void write_mpi(const Image& image, const std::filesystem::path& path);
Image read_mpi(const std::filesystem::path& path);

/// Exact encoded size of an image with the given geometry.
std::size_t mpi_file_size(std::size_t width, std::size_t height, std::size_t channels, SampleFormat format);

}  // namespace deepscan::io
