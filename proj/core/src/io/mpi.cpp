#include "deepscan/io/mpi.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

#include "deepscan/io/bytes.hpp"
#include "deepscan/util/error.hpp"

namespace deepscan::io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::size_t mpi_file_size(std::size_t width, std::size_t height, std::size_t channels, SampleFormat format) {
  const std::size_t bytes = format == SampleFormat::uint16 ? 2 : 4;
  return kMpiHeaderBytes + width * height * channels * bytes;
}

std::vector<std::uint8_t> encode_mpi(const Image& image) {
  image.validate();
  ByteWriter w;
  w.bytes().reserve(mpi_file_size(image.width(), image.height(), image.channels(), image.format()));
  w.text("MPI1");
  w.u32(static_cast<std::uint32_t>(image.width()));
  w.u32(static_cast<std::uint32_t>(image.height()));
  w.u16(static_cast<std::uint16_t>(image.channels()));
  w.u16(static_cast<std::uint16_t>(image.bits_per_sample()));
  w.u8(static_cast<std::uint8_t>(image.format()));
  if (image.format() == SampleFormat::uint16) {
    for (float v : image.samples()) w.u16(static_cast<std::uint16_t>(v));
  } else {
    for (float v : image.samples()) w.f32(v);
  }
  return std::move(w.bytes());
}

Image decode_mpi(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (!r.need(4) || r.text(4) != "MPI1") throw BadMagicError("mpi: bad magic (expected \"MPI1\")");
  if (!r.need(kMpiHeaderBytes - 4)) throw TruncatedError("mpi: truncated header");
  const std::uint32_t width = r.u32();
  const std::uint32_t height = r.u32();
  const std::uint16_t channels = r.u16();
  const std::uint16_t bits = r.u16();
  const std::uint8_t format = r.u8();
  if (format > 1) throw FormatError("mpi: unknown sample format " + std::to_string(format));
  const auto fmt = static_cast<SampleFormat>(format);
  Image image(width, height, channels, fmt, bits);
  const std::size_t need = image.samples().size() * (fmt == SampleFormat::uint16 ? 2 : 4);
  if (!r.need(need)) {
    throw TruncatedError("mpi: plane data holds " + std::to_string(r.remaining()) + " bytes, header implies " +
                         std::to_string(need));
  }
  auto samples = image.samples();
  if (fmt == SampleFormat::uint16) {
    for (auto& v : samples) v = static_cast<float>(r.u16());
    image.validate();
  } else {
    for (auto& v : samples) v = r.f32();
  }
  return image;
}

void write_mpi(const Image& image, const std::filesystem::path& path) { write_file(path, encode_mpi(image)); }

Image read_mpi(const std::filesystem::path& path) { return decode_mpi(read_file(path)); }

}  // namespace deepscan::io
