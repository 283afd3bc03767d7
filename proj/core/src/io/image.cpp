#include "deepscan/io/image.hpp"

#include <cmath>
#include <cstring>

#include "deepscan/util/error.hpp"

namespace deepscan::io {

Image::Image(std::size_t width, std::size_t height, std::size_t channels, SampleFormat format,
             unsigned bits_per_sample)
    : width_(width), height_(height), channels_(channels), format_(format), bits_(bits_per_sample) {
  if (width == 0 || height == 0) throw ShapeError("image: width and height must be positive");
  if (channels == 0) throw ShapeError("image: channel count must be positive");
  if (format == SampleFormat::uint16 && (bits_per_sample == 0 || bits_per_sample > 16)) {
    throw RangeError("image: uint16 bits_per_sample must lie in 1..16, got " + std::to_string(bits_per_sample));
  }
  if (format == SampleFormat::float32 && bits_per_sample != 0) {
    throw RangeError("image: float32 images carry bits_per_sample 0");
  }
  data_.assign(width * height * channels, 0.0f);
}

Image Image::float32(std::size_t width, std::size_t height, std::size_t channels) {
  return Image(width, height, channels, SampleFormat::float32, 0);
}

Image Image::uint16(std::size_t width, std::size_t height, std::size_t channels, unsigned bits) {
  return Image(width, height, channels, SampleFormat::uint16, bits);
}

std::span<float> Image::plane(std::size_t channel) {
  if (channel >= channels_) throw ShapeError("image: channel " + std::to_string(channel) + " out of range");
  return std::span<float>(data_).subspan(channel * pixel_count(), pixel_count());
}

std::span<const float> Image::plane(std::size_t channel) const {
  if (channel >= channels_) throw ShapeError("image: channel " + std::to_string(channel) + " out of range");
  return std::span<const float>(data_).subspan(channel * pixel_count(), pixel_count());
}

void Image::validate() const {
  if (format_ == SampleFormat::float32) {
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) throw RangeError("image: non-finite sample at index " + std::to_string(i));
    }
    return;
  }
  const double limit = std::ldexp(1.0, static_cast<int>(bits_));
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const float v = data_[i];
    if (!(v >= 0.0f) || v >= limit || std::floor(v) != v) {
      const std::size_t c = i / pixel_count(), p = i % pixel_count();
      throw RangeError("image: sample " + std::to_string(v) + " at channel " + std::to_string(c) + " (" +
                       std::to_string(p % width_) + "," + std::to_string(p / width_) +
                       ") is not an integer below 2^" + std::to_string(bits_));
    }
  }
}

bool bit_identical(const Image& a, const Image& b) {
  if (!a.same_geometry(b) || a.format() != b.format() || a.bits_per_sample() != b.bits_per_sample()) {
    return false;
  }
  return std::memcmp(a.samples().data(), b.samples().data(), a.samples().size_bytes()) == 0;
}

Image to_float32(const Image& image) {
  Image out = Image::float32(image.width(), image.height(), image.channels());
  std::memcpy(out.samples().data(), image.samples().data(), image.samples().size_bytes());
  return out;
}

void require_same_geometry(const Image& a, const Image& b, const std::string& what) {
  if (a.width() != b.width()) {
    throw ShapeError(what + ": width mismatch (" + std::to_string(a.width()) + " vs " + std::to_string(b.width()) + ")");
  }
  if (a.height() != b.height()) {
    throw ShapeError(what + ": height mismatch (" + std::to_string(a.height()) + " vs " +
                     std::to_string(b.height()) + ")");
  }
  if (a.channels() != b.channels()) {
    throw ShapeError(what + ": channel mismatch (" + std::to_string(a.channels()) + " vs " +
                     std::to_string(b.channels()) + ")");
  }
}

}  // namespace deepscan::io
