#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace deepscan::io {

struct MetricRecord {
  std::string name;
  double mse = 0.0;
  double ssim = 0.0;
};

struct BenchInfo {
  std::uint64_t param_count = 0;
  double predict_seconds = 0.0;
};

/// Per-image metrics with their arithmetic means, optionally carrying the
/// parameter count and prediction time of the model that produced them.
struct MetricReport {
  std::vector<MetricRecord> images;
  std::optional<BenchInfo> bench;

  /// Arithmetic means; empty when there are no records.
  std::optional<double> mean_mse() const;
  std::optional<double> mean_ssim() const;
};

/// JSON with keys `images`, `aggregate` and, when present, `bench`. Doubles
/// are written with round-trip precision; empty aggregates are null.
std::string report_to_json(const MetricReport& report);
MetricReport report_from_json(const std::string& text);

void write_report(const MetricReport& report, const std::filesystem::path& path);
MetricReport read_report(const std::filesystem::path& path);

}  // namespace deepscan::io
