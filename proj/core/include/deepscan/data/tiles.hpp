#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "deepscan/data/paired.hpp"
#include "deepscan/nn/tensor.hpp"

namespace deepscan::data {

struct TileOrigin {
  std::size_t image = 0;
  std::size_t y = 0;
  std::size_t x = 0;
  friend bool operator==(const TileOrigin&, const TileOrigin&) = default;
};

struct TileSet {
  nn::Tensor sources;  // [N, C, tile, tile]
  nn::Tensor targets;  // [N, C, tile, tile]
  std::vector<TileOrigin> origins;
};

/// Extends an image to at least width x height by mirror reflection about
/// the edge pixels (the edge itself is not repeated). Larger axes are kept.
io::Image reflect_pad(const io::Image& image, std::size_t width, std::size_t height);

/// Crops the rectangle [y, y+h) x [x, x+w) from every channel.
io::Image crop(const io::Image& image, std::size_t y, std::size_t x, std::size_t h, std::size_t w);

/// `per_image` random tile x tile crops from every pair, source and target
/// cut at the same origin. Pairs smaller than a tile are reflect-padded
/// first. Origins depend only on (seed, pair index, draw index).
TileSet extract_tiles(std::span<const PairedSample> pairs, std::size_t tile, std::size_t per_image,
                      std::uint64_t seed);

/// Tile origins along one axis for tiled prediction: stride tile - overlap,
/// with the last origin moved back so the final tile ends at `extent`.
/// Requires extent >= tile.
std::vector<std::size_t> tile_origins(std::size_t extent, std::size_t tile, std::size_t overlap);

}  // namespace deepscan::data
