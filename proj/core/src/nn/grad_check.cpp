#include "deepscan/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "deepscan/util/error.hpp"
#include "deepscan/util/random.hpp"

namespace deepscan::nn {

double relative_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / denom;
}

GradCheckReport compare_with_finite_differences(std::vector<GradProbe>& probes,
                                                const std::function<double()>& loss,
                                                const GradCheckOptions& options) {
  GradCheckReport report;
  report.step = options.step;
  report.tolerance = options.tolerance;
  const double h = options.step;
  for (auto& probe : probes) {
    require_same_shape(probe.value->shape(), probe.analytic.shape(), "grad_check '" + probe.name + "'");
    double worst = 0.0;
    for (std::size_t i = 0; i < probe.value->size(); ++i) {
      double& v = (*probe.value)[i];
      const double saved = v;
      auto central = [&](double step) {
        v = saved + step;
        const double up = loss();
        v = saved - step;
        const double down = loss();
        v = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
          throw NonFiniteError("grad_check '" + probe.name + "': non-finite loss at element " +
                               std::to_string(i));
        }
        return (up - down) / (2.0 * step);
      };
      const double numeric = central(h);
      const bool converged = relative_error(numeric, central(h / 4)) <= options.tolerance;
      if (!std::isfinite(probe.analytic[i])) {
        throw NonFiniteError("grad_check '" + probe.name + "': non-finite analytic gradient");
      }
      const double err = relative_error(probe.analytic[i], numeric);
      worst = std::max(worst, err);
      if (converged) {
        report.max_rel_error_converged = std::max(report.max_rel_error_converged, err);
      } else {
        ++report.unconverged;
      }
    }
    report.entries.push_back({probe.name, worst});
    report.max_rel_error = std::max(report.max_rel_error, worst);
  }
  report.pass = report.max_rel_error <= options.tolerance;
  return report;
}

GradCheckReport grad_check(Layer<double>& layer, const TensorD& input, const GradCheckOptions& options,
                           Mode mode) {
  require_finite(input, "grad_check input");
  TensorD x = input;

  TensorD probe_out = layer.forward(x, mode);
  TensorD weights(probe_out.shape());
  Rng rng(options.weight_seed);
  for (auto& w : weights.values()) w = rng.uniform(0.5, 1.5);

  auto params = layer.params();
  for (auto& p : params) p.grad->fill(0.0);
  layer.set_input_grad(true);
  TensorD input_grad = layer.backward(weights);

  std::vector<GradProbe> probes;
  probes.push_back({"input", &x, std::move(input_grad)});
  for (auto& p : params) probes.push_back({p.name, p.value, *p.grad});

  auto loss = [&] {
    const TensorD y = layer.forward(x, mode);
    long double s = 0.0L;
    for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<long double>(weights[i]) * y[i];
    return static_cast<double>(s);
  };
  return compare_with_finite_differences(probes, loss, options);
}

GradCheckReport grad_check(const LayerSpec& spec, const TensorD& input, const GradCheckOptions& options,
                           std::uint64_t init_seed) {
  auto layer = make_layer<double>(spec, init_seed);
  // Non-trivial affine parameters so their gradients are exercised.
  if (auto* bn = dynamic_cast<BatchNorm<double>*>(layer.get())) {
    Rng rng(init_seed ^ 0xb7);
    for (auto& g : bn->gamma.values()) g = rng.uniform(0.5, 1.5);
    for (auto& b : bn->beta.values()) b = rng.uniform(-0.5, 0.5);
  } else if (auto* conv = dynamic_cast<Conv2d<double>*>(layer.get())) {
    Rng rng(init_seed ^ 0xc0);
    for (auto& b : conv->bias.values()) b = rng.uniform(-0.5, 0.5);
  } else if (auto* dense = dynamic_cast<Dense<double>*>(layer.get())) {
    Rng rng(init_seed ^ 0xde);
    for (auto& b : dense->bias.values()) b = rng.uniform(-0.5, 0.5);
  }
  return grad_check(*layer, input, options, Mode::train);
}

}  // namespace deepscan::nn
