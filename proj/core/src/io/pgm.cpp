#include "deepscan/io/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "deepscan/io/bytes.hpp"
#include "deepscan/util/error.hpp"

namespace deepscan::io {
namespace {

class HeaderScanner {
 public:
  explicit HeaderScanner(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 0xffffffffUL) throw FormatError(std::string("pgm: ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start) throw FormatError(std::string("pgm: missing ") + what);
    return v;
  }

  /// Consumes the single whitespace byte that ends the header.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError("pgm: header not terminated by whitespace");
    }
    return pos_ + 1;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

Image decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw BadMagicError("pgm: not a binary PGM (expected \"P5\")");
  }
  HeaderScanner scan(bytes);
  const auto width = scan.number("width");
  const auto height = scan.number("height");
  const auto maxval = scan.number("maxval");
  if (maxval == 0) throw FormatError("pgm: maxval 0");
  if (maxval > 65535) throw FormatError("pgm: maxval " + std::to_string(maxval) + " exceeds 65535");
  if (width == 0 || height == 0) throw FormatError("pgm: empty raster");
  const std::size_t start = scan.raster_start();
  const std::size_t bps = maxval < 256 ? 1 : 2;
  const std::size_t need = width * height * bps;
  if (bytes.size() - start < need) {
    throw TruncatedError("pgm: raster holds " + std::to_string(bytes.size() - start) + " bytes, expected " +
                         std::to_string(need));
  }
  Image image = Image::uint16(width, height, 1, 16);
  auto samples = image.samples();
  const std::uint8_t* p = bytes.data() + start;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const unsigned v = bps == 1 ? p[i] : (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1];
    samples[i] = static_cast<float>(v);
  }
  return image;
}

Image import_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

std::vector<std::uint8_t> encode_pgm(const Image& image, std::size_t channel) {
  const auto plane = image.plane(channel);
  unsigned maxval = 65535;
  if (image.format() == SampleFormat::uint16) {
    image.validate();
    maxval = (1u << image.bits_per_sample()) - 1u;
  }
  const std::size_t bps = maxval < 256 ? 1 : 2;
  ByteWriter w;
  w.text("P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n" +
         std::to_string(maxval) + "\n");
  for (float v : plane) {
    const double r = std::isnan(v) ? 0.0 : std::round(static_cast<double>(v));
    const double clamped = std::clamp(r, 0.0, 65535.0);
    const auto s = static_cast<unsigned>(clamped);
    if (bps == 1) {
      w.u8(static_cast<std::uint8_t>(s));
    } else {
      w.u8(static_cast<std::uint8_t>(s >> 8));
      w.u8(static_cast<std::uint8_t>(s & 0xff));
    }
  }
  return std::move(w.bytes());
}

void export_pgm(const Image& image, std::size_t channel, const std::filesystem::path& path) {
  write_file(path, encode_pgm(image, channel));
}

}  // namespace deepscan::io
