#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "deepscan/models/model.hpp"

namespace deepscan::models {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Little-endian layout: "MPCK" | u32 version | u8 arch (1 patches, 2 unet)
/// | u32 length + `key=value` lines | u32 tensor count | per tensor: u16 name
/// length, name, u8 dtype (0 = f32), u8 rank, rank x u32 dims, f32 data.
/// Parameters come first, then batch-norm running moments that hold data.
std::vector<std::uint8_t> encode_checkpoint(Model& model);

/// Throws BadMagicError, VersionError or TruncatedError (naming the tensor
/// whose data is cut short); other inconsistencies raise FormatError.
Model decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace deepscan::models
