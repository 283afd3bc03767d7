#include "deepscan/data/patches.hpp"

#include <algorithm>
#include <cstring>

#include "deepscan/util/parallel.hpp"

namespace deepscan::data {

void extract_patch(const io::Image& image, std::size_t y, std::size_t x, float* out) {
  const auto h = static_cast<std::ptrdiff_t>(image.height());
  const auto w = static_cast<std::ptrdiff_t>(image.width());
  const auto top = static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(kPatchAnchor);
  const auto left = static_cast<std::ptrdiff_t>(x) - static_cast<std::ptrdiff_t>(kPatchAnchor);
  const auto size = static_cast<std::ptrdiff_t>(kPatchSize);
  // Column range of the patch that falls inside the image.
  const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(0, -left);
  const std::ptrdiff_t c1 = std::min<std::ptrdiff_t>(size, w - left);

  std::fill(out, out + image.channels() * kPatchSize * kPatchSize, 0.0f);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    const auto plane = image.plane(c);
    float* dst = out + c * kPatchSize * kPatchSize;
    for (std::ptrdiff_t r = 0; r < size; ++r) {
      const std::ptrdiff_t iy = top + r;
      if (iy < 0 || iy >= h || c1 <= c0) continue;
      std::memcpy(dst + r * size + c0, plane.data() + iy * w + left + c0,
                  static_cast<std::size_t>(c1 - c0) * sizeof(float));
    }
  }
}

PatchSet extract_patches(const PairedSample& pair, std::span<const PixelOrigin> anchors) {
  pair.validate();
  const std::size_t channels = pair.source.channels();
  const std::size_t stride = channels * kPatchSize * kPatchSize;
  PatchSet set;
  set.inputs = nn::Tensor({anchors.size(), channels, kPatchSize, kPatchSize});
  set.targets = nn::Tensor({anchors.size(), channels});
  set.origins.assign(anchors.begin(), anchors.end());
  parallel_for(anchors.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      extract_patch(pair.source, anchors[i].y, anchors[i].x, set.inputs.data() + i * stride);
      for (std::size_t c = 0; c < channels; ++c) {
        set.targets[i * channels + c] = pair.target.at(c, anchors[i].y, anchors[i].x);
      }
    }
  });
  return set;
}

PatchSet extract_pixel_patches(const PairedSample& pair) {
  std::vector<PixelOrigin> anchors;
  anchors.reserve(pair.source.pixel_count());
  for (std::size_t y = 0; y < pair.source.height(); ++y) {
    for (std::size_t x = 0; x < pair.source.width(); ++x) {
      anchors.push_back({static_cast<std::uint32_t>(y), static_cast<std::uint32_t>(x)});
    }
  }
  return extract_patches(pair, anchors);
}

}  // namespace deepscan::data
