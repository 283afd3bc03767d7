#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepscan/io/image.hpp"
#include "deepscan/io/report.hpp"

namespace deepscan::metrics {

struct SsimConfig {
  double dynamic_range = 1.0;  // L
  double k1 = 0.01;
  double k2 = 0.03;
  std::size_t window = 11;  // odd Gaussian window extent
  double sigma = 1.5;

  double c1() const noexcept { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const noexcept { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  void validate() const;
};

/// Normalized 1-D Gaussian weights; the 2-D window is their outer product.
std::vector<double> gaussian_window(std::size_t size, double sigma);

/// Mean squared difference over every sample of every channel.
double mse(const io::Image& a, const io::Image& b);

/// Mean of the local SSIM map, averaged over channels. Local statistics use
/// the Gaussian window with symmetric (edge-repeating) boundary extension.
/// When `map` is given it receives the per-pixel SSIM as a float32 image.
double ssim(const io::Image& a, const io::Image& b, const SsimConfig& config, io::Image* map = nullptr);

/// Float32 pixelwise (a + b) / 2.
io::Image ensemble_average(const io::Image& a, const io::Image& b);

/// Largest sample over a set of images.
double max_sample(std::span<const io::Image> images);

/// Per-image MSE and SSIM for named prediction/ground-truth pairs. The SSIM
/// dynamic range defaults to the ground-truth maximum.
io::MetricReport evaluate_images(std::span<const io::Image> predictions, std::span<const io::Image> truths,
                                 std::span<const std::string> names, std::optional<double> dynamic_range = {});

/// Pairs <pred_dir>/<stem>.mpi with <gt_dir>/<stem>.mpi. Every stem must be
/// present on both sides; an IoError names each one that is not. A
/// non-empty `only` restricts both sides to those stems.
io::MetricReport evaluate_set(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                              std::optional<double> dynamic_range = {}, std::span<const std::string> only = {});

}  // namespace deepscan::metrics
