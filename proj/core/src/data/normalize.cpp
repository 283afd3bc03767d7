#include "deepscan/data/normalize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deepscan/util/error.hpp"

namespace deepscan::data {

void NormalizationParams::validate() const {
  if (lo.size() != hi.size() || lo.empty()) throw RangeError("normalization: lo/hi channel counts differ");
  for (std::size_t c = 0; c < lo.size(); ++c) {
    if (!std::isfinite(lo[c]) || !std::isfinite(hi[c]) || !(hi[c] > lo[c])) {
      throw RangeError("normalization: degenerate channel " + std::to_string(c) + " (lo " + std::to_string(lo[c]) +
                       ", hi " + std::to_string(hi[c]) + ")");
    }
  }
}

double percentile(std::span<float> values, double q) {
  if (values.empty()) throw RangeError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 100.0)) throw RangeError("percentile rank outside [0, 100]");
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double a = values[lo];
  double b = a;
  if (hi != lo) b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(hi), values.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

NormalizationParams fit_normalization(std::span<const io::Image> images, double low, double high) {
  if (images.empty()) throw RangeError("fit_normalization: no images");
  const std::size_t channels = images.front().channels();
  NormalizationParams params;
  std::vector<float> pool;
  for (std::size_t c = 0; c < channels; ++c) {
    pool.clear();
    for (const auto& image : images) {
      if (image.channels() != channels) throw ShapeError("fit_normalization: channel counts differ");
      const auto plane = image.plane(c);
      pool.insert(pool.end(), plane.begin(), plane.end());
    }
    params.lo.push_back(percentile(pool, low));
    params.hi.push_back(percentile(pool, high));
  }
  params.validate();
  return params;
}

namespace {

template <typename F>
io::Image map_channels(const io::Image& image, const NormalizationParams& params, F f) {
  params.validate();
  if (params.channels() != image.channels()) {
    throw ShapeError("normalization has " + std::to_string(params.channels()) + " channels, image has " +
                     std::to_string(image.channels()));
  }
  io::Image out = io::Image::float32(image.width(), image.height(), image.channels());
  for (std::size_t c = 0; c < image.channels(); ++c) {
    const auto src = image.plane(c);
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i], params.lo[c], params.hi[c]);
  }
  return out;
}

}  // namespace

io::Image normalize(const io::Image& image, const NormalizationParams& params) {
  return map_channels(image, params, [](float x, double lo, double hi) {
    return static_cast<float>((static_cast<double>(x) - lo) / (hi - lo));
  });
}

io::Image denormalize(const io::Image& image, const NormalizationParams& params) {
  return map_channels(image, params, [](float x, double lo, double hi) {
    return static_cast<float>(lo + static_cast<double>(x) * (hi - lo));
  });
}

}  // namespace deepscan::data
