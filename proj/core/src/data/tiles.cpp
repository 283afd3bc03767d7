#include "deepscan/data/tiles.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "deepscan/util/error.hpp"
#include "deepscan/util/random.hpp"

namespace deepscan::data {
namespace {

// Mirror index for reflect padding: ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ...
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

}  // namespace

io::Image reflect_pad(const io::Image& image, std::size_t width, std::size_t height) {
  const std::size_t w = std::max(width, image.width());
  const std::size_t h = std::max(height, image.height());
  if (w == image.width() && h == image.height()) return image;
  io::Image out(w, h, image.channels(), image.format(), image.bits_per_sample());
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      const std::size_t sy = reflect_index(static_cast<std::ptrdiff_t>(y), image.height());
      for (std::size_t x = 0; x < w; ++x) {
        out.at(c, y, x) = image.at(c, sy, reflect_index(static_cast<std::ptrdiff_t>(x), image.width()));
      }
    }
  }
  return out;
}

io::Image crop(const io::Image& image, std::size_t y, std::size_t x, std::size_t h, std::size_t w) {
  if (y + h > image.height() || x + w > image.width()) {
    throw RangeError("crop " + std::to_string(h) + "x" + std::to_string(w) + " at (" + std::to_string(y) + "," +
                     std::to_string(x) + ") exceeds image " + std::to_string(image.height()) + "x" +
                     std::to_string(image.width()));
  }
  io::Image out(w, h, image.channels(), image.format(), image.bits_per_sample());
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t r = 0; r < h; ++r) {
      std::memcpy(&out.at(c, r, 0), image.ptr(c, y + r, x), w * sizeof(float));
    }
  }
  return out;
}

TileSet extract_tiles(std::span<const PairedSample> pairs, std::size_t tile, std::size_t per_image,
                      std::uint64_t seed) {
  if (pairs.empty()) throw RangeError("extract_tiles: empty pair list");
  if (tile == 0 || per_image == 0) throw RangeError("extract_tiles: tile and per_image must be positive");
  const std::size_t channels = pairs.front().source.channels();
  const std::size_t n = pairs.size() * per_image;
  const std::size_t stride = channels * tile * tile;

  TileSet set;
  set.sources = nn::Tensor({n, channels, tile, tile});
  set.targets = nn::Tensor({n, channels, tile, tile});
  set.origins.reserve(n);

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pairs[i].validate();
    if (pairs[i].source.channels() != channels) {
      throw ShapeError("extract_tiles: pair '" + pairs[i].name + "' has " +
                       std::to_string(pairs[i].source.channels()) + " channels, expected " +
                       std::to_string(channels));
    }
    const io::Image source = reflect_pad(pairs[i].source, tile, tile);
    const io::Image target = reflect_pad(pairs[i].target, tile, tile);
    Rng rng(stream_key(seed, i));
    for (std::size_t k = 0; k < per_image; ++k) {
      const std::size_t y = rng.below(source.height() - tile + 1);
      const std::size_t x = rng.below(source.width() - tile + 1);
      const std::size_t slot = set.origins.size();
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t r = 0; r < tile; ++r) {
          const std::size_t off = slot * stride + (c * tile + r) * tile;
          std::memcpy(set.sources.data() + off, source.ptr(c, y + r, x), tile * sizeof(float));
          std::memcpy(set.targets.data() + off, target.ptr(c, y + r, x), tile * sizeof(float));
        }
      }
      set.origins.push_back({i, y, x});
    }
  }
  return set;
}

std::vector<std::size_t> tile_origins(std::size_t extent, std::size_t tile, std::size_t overlap) {
  if (tile == 0 || overlap >= tile) throw RangeError("tile_origins: overlap must be smaller than the tile");
  if (extent < tile) {
    throw RangeError("tile_origins: extent " + std::to_string(extent) + " below tile " + std::to_string(tile));
  }
  const std::size_t stride = tile - overlap;
  std::vector<std::size_t> origins;
  for (std::size_t o = 0;; o += stride) {
    if (o + tile >= extent) {
      origins.push_back(extent - tile);
      break;
    }
    origins.push_back(o);
  }
  return origins;
}

}  // namespace deepscan::data
