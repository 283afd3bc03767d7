#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace deepscan::io {

enum class SampleFormat : std::uint8_t { uint16 = 0, float32 = 1 };

/// Multi-channel 2-D raster. Samples are held as float regardless of the
/// on-disk format (every uint16 value is exactly representable); the format
/// and bit depth govern validation and serialization.
class Image {
 public:
  Image() = default;
  Image(std::size_t width, std::size_t height, std::size_t channels, SampleFormat format,
        unsigned bits_per_sample);

  static Image float32(std::size_t width, std::size_t height, std::size_t channels);
  static Image uint16(std::size_t width, std::size_t height, std::size_t channels, unsigned bits = 16);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }
  SampleFormat format() const noexcept { return format_; }
  unsigned bits_per_sample() const noexcept { return bits_; }

  std::span<float> plane(std::size_t channel);
  std::span<const float> plane(std::size_t channel) const;
  /// All planes, channel-major.
  std::span<float> samples() noexcept { return data_; }
  std::span<const float> samples() const noexcept { return data_; }

  float& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data_[(c * height_ + y) * width_ + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[(c * height_ + y) * width_ + x];
  }

  const float* ptr(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_.data() + (c * height_ + y) * width_ + x;
  }

  bool same_geometry(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  /// Throws RangeError if a uint16 sample is fractional, negative or
  /// reaches 2^bits_per_sample, or if any float sample is non-finite.
  void validate() const;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 0;
  SampleFormat format_ = SampleFormat::float32;
  unsigned bits_ = 0;
  std::vector<float> data_;
};

/// Same metadata and bit-for-bit identical samples.
bool bit_identical(const Image& a, const Image& b);

/// Copy with float32 sample format.
Image to_float32(const Image& image);

/// Throws ShapeError describing the first differing dimension.
void require_same_geometry(const Image& a, const Image& b, const std::string& what);

}  // namespace deepscan::io
