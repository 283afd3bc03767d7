#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace deepscan::sim {

/// Ground-truth fluorophore density, one non-negative map per channel,
/// scaled so the mean over all channels and pixels is 1.
struct Scene {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::uint64_t id = 0;         // seed the scene was generated from
  std::vector<double> density;  // [channel][y][x]

  double at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return density[(c * height + y) * width + x];
  }
};

/// Smooth background plus 20-80 structures per channel: ring-shaped
/// elliptical cells on even channels, curved filament strokes on odd ones.
/// Deterministic in `seed`; dimensions must be at least 16.
Scene generate_scene(std::uint64_t seed, std::size_t width, std::size_t height, std::size_t channels);

}  // namespace deepscan::sim
