#include "deepscan/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "deepscan/data/dataset.hpp"
#include "deepscan/io/mpi.hpp"
#include "deepscan/util/error.hpp"
#include "deepscan/util/parallel.hpp"

namespace deepscan::metrics {
namespace {

// Symmetric extension: ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
std::size_t symmetric_index(std::ptrdiff_t i, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - 1 - m;
  return static_cast<std::size_t>(m);
}

// Separable Gaussian filter of a w x h plane with symmetric boundaries.
std::vector<double> blur(const std::vector<double>& in, std::size_t w, std::size_t h, const std::vector<double>& g) {
  const auto r = static_cast<std::ptrdiff_t>(g.size() / 2);
  std::vector<double> tmp(in.size()), out(in.size());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (std::ptrdiff_t k = -r; k <= r; ++k) {
        s += g[static_cast<std::size_t>(k + r)] * in[y * w + symmetric_index(static_cast<std::ptrdiff_t>(x) + k, w)];
      }
      tmp[y * w + x] = s;
    }
  }
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (std::ptrdiff_t k = -r; k <= r; ++k) {
        s += g[static_cast<std::size_t>(k + r)] * tmp[symmetric_index(static_cast<std::ptrdiff_t>(y) + k, h) * w + x];
      }
      out[y * w + x] = s;
    }
  }
  return out;
}

}  // namespace

void SsimConfig::validate() const {
  if (!(dynamic_range > 0.0) || !std::isfinite(dynamic_range)) throw RangeError("ssim: dynamic range L must be positive");
  if (window % 2 == 0) throw RangeError("ssim: window extent must be odd");
  if (!(sigma > 0.0)) throw RangeError("ssim: sigma must be positive");
}

std::vector<double> gaussian_window(std::size_t size, double sigma) {
  std::vector<double> g(size);
  const double c = static_cast<double>(size / 2);
  double sum = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - c;
    g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  return g;
}

double mse(const io::Image& a, const io::Image& b) {
  io::require_same_geometry(a, b, "mse");
  const auto sa = a.samples(), sb = b.samples();
  double sum = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = static_cast<double>(sa[i]) - static_cast<double>(sb[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(sa.size());
}

double ssim(const io::Image& a, const io::Image& b, const SsimConfig& config, io::Image* map) {
  io::require_same_geometry(a, b, "ssim");
  config.validate();
  const std::size_t w = a.width(), h = a.height(), n = w * h;
  const auto g = gaussian_window(config.window, config.sigma);
  const double c1 = config.c1(), c2 = config.c2();
  if (map) *map = io::Image::float32(w, h, a.channels());

  double total = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    const auto pa = a.plane(c), pb = b.plane(c);
    std::vector<double> xa(pa.begin(), pa.end()), xb(pb.begin(), pb.end()), aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
      aa[i] = xa[i] * xa[i];
      bb[i] = xb[i] * xb[i];
      ab[i] = xa[i] * xb[i];
    }
    const auto mu_a = blur(xa, w, h, g), mu_b = blur(xb, w, h, g);
    const auto e_aa = blur(aa, w, h, g), e_bb = blur(bb, w, h, g), e_ab = blur(ab, w, h, g);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
      const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
      const double cov = e_ab[i] - mu_a[i] * mu_b[i];
      const double s = ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
                       ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2));
      sum += s;
      if (map) map->plane(c)[i] = static_cast<float>(s);
    }
    total += sum / static_cast<double>(n);
  }
  return total / static_cast<double>(a.channels());
}

io::Image ensemble_average(const io::Image& a, const io::Image& b) {
  io::require_same_geometry(a, b, "ensemble");
  io::Image out = io::Image::float32(a.width(), a.height(), a.channels());
  const auto sa = a.samples(), sb = b.samples();
  auto d = out.samples();
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = static_cast<float>((static_cast<double>(sa[i]) + static_cast<double>(sb[i])) / 2.0);
  }
  return out;
}

double max_sample(std::span<const io::Image> images) {
  double m = -INFINITY;
  for (const auto& image : images) {
    for (float v : image.samples()) m = std::max(m, static_cast<double>(v));
  }
  return m;
}

io::MetricReport evaluate_images(std::span<const io::Image> predictions, std::span<const io::Image> truths,
                                 std::span<const std::string> names, std::optional<double> dynamic_range) {
  if (predictions.size() != truths.size() || names.size() != truths.size()) {
    throw ShapeError("evaluate: prediction, ground-truth and name counts differ");
  }
  io::MetricReport report;
  if (truths.empty()) return report;
  SsimConfig config;
  config.dynamic_range = dynamic_range ? *dynamic_range : max_sample(truths);
  config.validate();
  report.images.resize(truths.size());
  parallel_for(truths.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      report.images[i] = {names[i], mse(predictions[i], truths[i]), ssim(predictions[i], truths[i], config)};
    }
  });
  return report;
}

io::MetricReport evaluate_set(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                              std::optional<double> dynamic_range, std::span<const std::string> only) {
  const auto preds = data::list_stems(pred_dir);
  const auto gts = data::list_stems(gt_dir);
  std::vector<std::string> stems, unmatched;
  if (only.empty()) {
    std::set_symmetric_difference(preds.begin(), preds.end(), gts.begin(), gts.end(), std::back_inserter(unmatched));
    stems = gts;
  } else {
    stems.assign(only.begin(), only.end());
    std::sort(stems.begin(), stems.end());
    for (const auto& s : stems) {
      if (!std::binary_search(preds.begin(), preds.end(), s) || !std::binary_search(gts.begin(), gts.end(), s)) {
        unmatched.push_back(s);
      }
    }
  }
  if (!unmatched.empty()) {
    std::string list;
    for (const auto& s : unmatched) list += (list.empty() ? "" : ", ") + s;
    throw IoError("unmatched stems: " + list);
  }
  std::vector<io::Image> p, t;
  for (const auto& stem : stems) {
    p.push_back(io::read_mpi(pred_dir / (stem + ".mpi")));
    t.push_back(io::read_mpi(gt_dir / (stem + ".mpi")));
  }
  return evaluate_images(p, t, stems, dynamic_range);
}

}  // namespace deepscan::metrics
