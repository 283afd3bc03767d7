#pragma once

#include <span>
#include <vector>

#include "deepscan/io/image.hpp"

namespace deepscan::data {

inline constexpr double kLowPercentile = 1.0;
inline constexpr double kHighPercentile = 99.8;

/// Per-channel affine intensity map x -> (x - lo) / (hi - lo).
struct NormalizationParams {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t channels() const noexcept { return lo.size(); }
  /// Throws RangeError for mismatched sizes or hi <= lo on any channel.
  void validate() const;
  friend bool operator==(const NormalizationParams&, const NormalizationParams&) = default;
};

/// q-th percentile (0..100) by linear interpolation between order
/// statistics. Reorders `values`.
double percentile(std::span<float> values, double q);

/// Percentiles pooled over every pixel of every image, per channel.
/// Throws RangeError if a channel is degenerate (hi == lo).
NormalizationParams fit_normalization(std::span<const io::Image> images, double low = kLowPercentile,
                                      double high = kHighPercentile);

/// Float32 image (x - lo) / (hi - lo), unclamped.
io::Image normalize(const io::Image& image, const NormalizationParams& params);
/// Float32 image lo + x (hi - lo).
io::Image denormalize(const io::Image& image, const NormalizationParams& params);

}  // namespace deepscan::data
