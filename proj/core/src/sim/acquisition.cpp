#include "deepscan/sim/acquisition.hpp"

#include <cstdio>
#include <cmath>
#include <json.hpp>
#include <string>
#include <vector>

#include "deepscan/io/bytes.hpp"
#include "deepscan/io/mpi.hpp"
#include "deepscan/util/error.hpp"
#include "deepscan/util/parallel.hpp"
#include "deepscan/util/random.hpp"

namespace deepscan::sim {

namespace fs = std::filesystem;

std::string_view to_string(AcquisitionMode mode) { return mode == AcquisitionMode::power ? "power" : "frames"; }

std::optional<AcquisitionMode> parse_acquisition_mode(std::string_view text) {
  if (text == "power") return AcquisitionMode::power;
  if (text == "frames") return AcquisitionMode::frames;
  return std::nullopt;
}

void AcquisitionConfig::validate() const {
  if (!(power_mw > 0.0) || !std::isfinite(power_mw)) throw RangeError("power_mw must be positive");
  if (!(ref_power_mw > 0.0) || !std::isfinite(ref_power_mw)) throw RangeError("ref_power_mw must be positive");
  if (!(brightness >= 0.0) || !std::isfinite(brightness)) throw RangeError("brightness must be non-negative");
  if (frames_total < 1) throw RangeError("frames_total must be at least 1");
  if (frames_used < 1 || frames_used > frames_total) {
    throw RangeError("frames_used " + std::to_string(frames_used) + " outside 1.." + std::to_string(frames_total));
  }
  if (bits < 1 || bits > 16) throw RangeError("bits must lie in 1..16");
}

AcquisitionConfig AcquisitionConfig::defaults(AcquisitionMode mode) {
  AcquisitionConfig c;
  c.mode = mode;
  c.power_mw = mode == AcquisitionMode::power ? kLowPowerMw : kFramesPowerMw;
  return c;
}

double expected_rate(const AcquisitionConfig& config, double density) {
  const double r = config.power_mw / config.ref_power_mw;
  return config.brightness * r * r * density;
}

io::Image acquire_frame(const Scene& scene, const AcquisitionConfig& config, std::uint64_t frame_index) {
  config.validate();
  io::Image image = io::Image::uint16(scene.width, scene.height, scene.channels, config.bits);
  const double ceiling = std::ldexp(1.0, static_cast<int>(config.bits));
  const std::size_t pixels = scene.width * scene.height;
  for (std::size_t c = 0; c < scene.channels; ++c) {
    auto plane = image.plane(c);
    const double* density = scene.density.data() + c * pixels;
    for (std::size_t i = 0; i < pixels; ++i) {
      Rng rng(stream_key(config.seed, scene.id, c, frame_index, i));
      const auto count = static_cast<double>(poisson(rng, expected_rate(config, density[i])));
      if (count >= ceiling) {
        throw RangeError("photon count " + std::to_string(static_cast<std::uint64_t>(count)) + " at channel " +
                         std::to_string(c) + " pixel (" + std::to_string(i / scene.width) + "," +
                         std::to_string(i % scene.width) + ") exceeds the " + std::to_string(config.bits) +
                         "-bit ceiling");
      }
      plane[i] = static_cast<float>(count);
    }
  }
  return image;
}

io::Image average_frames(std::span<const io::Image> frames, std::size_t k) {
  if (k < 1 || k > frames.size()) {
    throw RangeError("average_frames: k=" + std::to_string(k) + " outside 1.." + std::to_string(frames.size()));
  }
  const auto& first = frames.front();
  std::vector<double> sum(first.samples().size(), 0.0);
  for (std::size_t f = 0; f < k; ++f) {
    io::require_same_geometry(first, frames[f], "frame " + std::to_string(f));
    const auto s = frames[f].samples();
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += s[i];
  }
  io::Image out = io::Image::float32(first.width(), first.height(), first.channels());
  auto dst = out.samples();
  for (std::size_t i = 0; i < sum.size(); ++i) dst[i] = static_cast<float>(sum[i] / static_cast<double>(k));
  return out;
}

namespace {

std::string image_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img%05zu", i);
  return buf;
}

io::Image mean_image(const std::vector<double>& sum, std::size_t k, std::size_t width, std::size_t height,
                     std::size_t channels) {
  io::Image out = io::Image::float32(width, height, channels);
  auto dst = out.samples();
  for (std::size_t i = 0; i < sum.size(); ++i) dst[i] = static_cast<float>(sum[i] / static_cast<double>(k));
  return out;
}

double mean_of(const io::Image& image) {
  double s = 0.0;
  for (float v : image.samples()) s += v;
  return s / static_cast<double>(image.samples().size());
}

}  // namespace

DatasetSummary make_paired_dataset(const AcquisitionConfig& config, std::size_t n_images, std::size_t width,
                                   std::size_t height, std::size_t channels, const fs::path& root) {
  config.validate();
  if (n_images == 0) throw RangeError("make_paired_dataset: n_images must be positive");
  std::error_code ec;
  fs::create_directories(root / "source", ec);
  fs::create_directories(root / "target", ec);
  if (!fs::is_directory(root / "source") || !fs::is_directory(root / "target")) {
    throw IoError("cannot create dataset directories under " + root.string());
  }

  std::vector<double> source_means(n_images), target_means(n_images);
  parallel_for(n_images, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Scene scene = generate_scene(stream_key(config.seed, 0x5ce7e5u, i), width, height, channels);
      io::Image source, target;
      if (config.mode == AcquisitionMode::power) {
        source = acquire_frame(scene, config, 0);
        AcquisitionConfig high = config;
        high.power_mw = config.ref_power_mw;
        target = acquire_frame(scene, high, 1);
      } else {
        // Running sums match average_frames term for term without holding
        // every frame in memory.
        std::vector<double> sum(width * height * channels, 0.0);
        for (std::size_t f = 0; f < config.frames_total; ++f) {
          const auto frame = acquire_frame(scene, config, f);
          const auto s = frame.samples();
          for (std::size_t p = 0; p < sum.size(); ++p) sum[p] += s[p];
          if (f + 1 == config.frames_used) source = mean_image(sum, f + 1, width, height, channels);
        }
        target = mean_image(sum, config.frames_total, width, height, channels);
      }
      source_means[i] = mean_of(source);
      target_means[i] = mean_of(target);
      const std::string name = image_name(i) + ".mpi";
      io::write_mpi(source, root / "source" / name);
      io::write_mpi(target, root / "target" / name);
    }
  });

  write_manifest({config, n_images, width, height, channels}, root / "manifest.json");
  DatasetSummary summary{n_images, 0.0, 0.0};
  for (std::size_t i = 0; i < n_images; ++i) {
    summary.mean_source += source_means[i] / static_cast<double>(n_images);
    summary.mean_target += target_means[i] / static_cast<double>(n_images);
  }
  return summary;
}

void write_manifest(const Manifest& m, const fs::path& path) {
  nlohmann::ordered_json j;
  j["mode"] = std::string(to_string(m.config.mode));
  j["power_mw"] = m.config.power_mw;
  j["ref_power_mw"] = m.config.ref_power_mw;
  j["frames_total"] = m.config.frames_total;
  j["frames_used"] = m.config.frames_used;
  j["k"] = m.config.brightness;
  j["seed"] = m.config.seed;
  j["bits"] = m.config.bits;
  j["n_images"] = m.n_images;
  j["width"] = m.width;
  j["height"] = m.height;
  j["channels"] = m.channels;
  io::write_text_file(path, j.dump(2) + "\n");
}

Manifest read_manifest(const fs::path& path) {
  const auto bytes = io::read_file(path);
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    Manifest m;
    const auto mode = parse_acquisition_mode(j.at("mode").get<std::string>());
    if (!mode) throw FormatError("manifest " + path.string() + ": unknown mode");
    m.config.mode = *mode;
    m.config.power_mw = j.at("power_mw").get<double>();
    m.config.ref_power_mw = j.at("ref_power_mw").get<double>();
    m.config.frames_total = j.at("frames_total").get<std::size_t>();
    m.config.frames_used = j.at("frames_used").get<std::size_t>();
    m.config.brightness = j.at("k").get<double>();
    m.config.seed = j.at("seed").get<std::uint64_t>();
    m.config.bits = j.value("bits", 12u);
    m.n_images = j.at("n_images").get<std::size_t>();
    m.width = j.at("width").get<std::size_t>();
    m.height = j.at("height").get<std::size_t>();
    m.channels = j.at("channels").get<std::size_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace deepscan::sim
