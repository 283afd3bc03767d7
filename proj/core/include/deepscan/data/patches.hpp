#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "deepscan/data/paired.hpp"
#include "deepscan/nn/tensor.hpp"

namespace deepscan::data {

inline constexpr std::size_t kPatchSize = 40;
/// Position of the anchor pixel inside its patch, on both axes. A patch
/// covers rows y-19 ... y+20 and columns x-19 ... x+20.
inline constexpr std::size_t kPatchAnchor = 19;

struct PixelOrigin {
  std::uint32_t y = 0;
  std::uint32_t x = 0;
  friend bool operator==(const PixelOrigin&, const PixelOrigin&) = default;
};

struct PatchSet {
  nn::Tensor inputs;   // [N, C, 40, 40]
  nn::Tensor targets;  // [N, C]
  std::vector<PixelOrigin> origins;
};

/// Writes the zero-padded C x 40 x 40 patch anchored at (y, x) to `out`.
void extract_patch(const io::Image& image, std::size_t y, std::size_t x, float* out);

/// Patches for the given anchors, targets read from `pair.target`.
PatchSet extract_patches(const PairedSample& pair, std::span<const PixelOrigin> anchors);

/// One patch per pixel in row-major anchor order.
PatchSet extract_pixel_patches(const PairedSample& pair);

}  // namespace deepscan::data
