#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "deepscan/nn/layers.hpp"
#include "deepscan/nn/tensor.hpp"

namespace deepscan::nn {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Seed for the fixed output weighting of the scalar probe loss.
  std::uint64_t weight_seed = 0x5eed;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;  // one per parameter, plus "input"
  double max_rel_error = 0.0;
  bool pass = false;
  /// Elements whose central differences at h and h/4 disagree beyond the
  /// tolerance: a ReLU kink or max-pool tie lies within reach of the probe,
  /// so the finite difference there is not a derivative estimate.
  std::size_t unconverged = 0;
  /// Worst relative error over the converged elements only.
  double max_rel_error_converged = 0.0;
  double step = 0.0;
  double tolerance = 0.0;
};

/// |a - b| / max(|a|, |b|, 1e-8).
double relative_error(double a, double b);

/// A tensor to perturb together with its analytic gradient.
struct GradProbe {
  std::string name;
  TensorD* value;
  TensorD analytic;
};

/// Central differences (f(v+h) - f(v-h)) / 2h for every element of every
/// probe, compared against the analytic gradient. A second difference at
/// h/4 counts unconverged elements. Throws NonFiniteError if the loss
/// leaves the finite range.
GradCheckReport compare_with_finite_differences(std::vector<GradProbe>& probes,
                                                const std::function<double()>& loss,
                                                const GradCheckOptions& options);

/// Checks a layer's input and parameter gradients under the scalar loss
/// sum_i w_i * y_i, with fixed weights w_i in [0.5, 1.5].
GradCheckReport grad_check(Layer<double>& layer, const TensorD& input,
                           const GradCheckOptions& options = {}, Mode mode = Mode::train);

GradCheckReport grad_check(const LayerSpec& spec, const TensorD& input,
                           const GradCheckOptions& options = {}, std::uint64_t init_seed = 1);

}  // namespace deepscan::nn
