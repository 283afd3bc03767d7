#include "deepscan/io/report.hpp"

#include <json.hpp>

#include "deepscan/io/bytes.hpp"
#include "deepscan/util/error.hpp"

namespace deepscan::io {
namespace {

using Json = nlohmann::ordered_json;

std::optional<double> mean_of(const std::vector<MetricRecord>& records, double MetricRecord::*field) {
  if (records.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& r : records) sum += r.*field;
  return sum / static_cast<double>(records.size());
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

std::optional<double> MetricReport::mean_mse() const { return mean_of(images, &MetricRecord::mse); }
std::optional<double> MetricReport::mean_ssim() const { return mean_of(images, &MetricRecord::ssim); }

std::string report_to_json(const MetricReport& report) {
  Json j;
  j["images"] = Json::array();
  for (const auto& r : report.images) {
    j["images"].push_back(Json{{"name", r.name}, {"mse", r.mse}, {"ssim", r.ssim}});
  }
  j["aggregate"] = Json{{"mean_mse", optional_number(report.mean_mse())},
                        {"mean_ssim", optional_number(report.mean_ssim())}};
  if (report.bench) {
    j["bench"] = Json{{"param_count", report.bench->param_count},
                      {"predict_seconds", report.bench->predict_seconds}};
  }
  return j.dump();
}

MetricReport report_from_json(const std::string& text) {
  MetricReport report;
  try {
    const Json j = Json::parse(text);
    for (const auto& r : j.at("images")) {
      report.images.push_back({r.at("name").get<std::string>(), r.at("mse").get<double>(), r.at("ssim").get<double>()});
    }
    if (j.contains("bench")) {
      report.bench = BenchInfo{j["bench"].at("param_count").get<std::uint64_t>(),
                               j["bench"].at("predict_seconds").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
  return report;
}

void write_report(const MetricReport& report, const std::filesystem::path& path) {
  write_text_file(path, report_to_json(report) + "\n");
}

MetricReport read_report(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return report_from_json(std::string(bytes.begin(), bytes.end()));
}

}  // namespace deepscan::io
