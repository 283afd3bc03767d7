#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>

#include "deepscan/io/image.hpp"
#include "deepscan/sim/scene.hpp"

namespace deepscan::sim {

enum class AcquisitionMode { power, frames };

std::string_view to_string(AcquisitionMode mode);
std::optional<AcquisitionMode> parse_acquisition_mode(std::string_view text);

/// Default source power of power mode.
inline constexpr double kLowPowerMw = 50.0;
/// Default per-frame power of frames mode: about 1.4 expected photons per
/// pixel and frame at the default brightness, the photon-counting regime.
inline constexpr double kFramesPowerMw = 25.0;

struct AcquisitionConfig {
  AcquisitionMode mode = AcquisitionMode::power;
  double power_mw = kLowPowerMw;  // power-mode source power; frames-mode per-frame power
  double ref_power_mw = 300.0;  // power at which `brightness` is defined; power-mode target
  std::size_t frames_total = 70;
  std::size_t frames_used = 7;
  double brightness = 200.0;  // expected photons per pixel at ref power and unit density
  std::uint64_t seed = 42;
  unsigned bits = 12;  // photon-count ceiling 2^bits - 1

  void validate() const;
  /// Defaults for `mode`, with power_mw set to that mode's default.
  static AcquisitionConfig defaults(AcquisitionMode mode);
};

/// Expected photon count k (p / p_ref)^2 density.
double expected_rate(const AcquisitionConfig& config, double density);

/// One photon-count frame at config.power_mw. Every pixel draws from its own
/// generator keyed by (seed, scene id, channel, frame, pixel), so frames can
/// be produced in any order. Throws RangeError when a count reaches
/// 2^bits instead of clamping.
io::Image acquire_frame(const Scene& scene, const AcquisitionConfig& config, std::uint64_t frame_index);

/// Float32 pixelwise mean of the first k frames.
io::Image average_frames(std::span<const io::Image> frames, std::size_t k);

struct DatasetSummary {
  std::size_t pairs = 0;
  double mean_source = 0.0;
  double mean_target = 0.0;
};

/// Writes <root>/source/<name>.mpi, <root>/target/<name>.mpi for n_images
/// scenes plus <root>/manifest.json.
///
/// power: source is frame 0 at power_mw, target frame 1 at ref_power_mw.
/// frames: frames_total frames at power_mw; source averages the first
/// frames_used, target all of them.
DatasetSummary make_paired_dataset(const AcquisitionConfig& config, std::size_t n_images, std::size_t width,
                                   std::size_t height, std::size_t channels, const std::filesystem::path& root);

struct Manifest {
  AcquisitionConfig config;
  std::size_t n_images = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
};

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace deepscan::sim
