#include "deepscan/optim/adam.hpp"

#include <cmath>
#include <string>

#include "deepscan/util/error.hpp"

namespace deepscan::optim {

void AdamHyper::validate() const {
  if (!(lr > 0.0)) throw RangeError("adam: learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw RangeError("adam: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw RangeError("adam: beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw RangeError("adam: eps must be > 0");
}

template <typename T>
void adam_step(std::span<const nn::Param<T>> params, AdamState<T>& state, const AdamHyper& hyper) {
  hyper.validate();
  if (state.m.empty() && state.t == 0) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value->shape());
      state.v.emplace_back(p.value->shape());
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam: state holds " + std::to_string(state.m.size()) + " moments for " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    nn::require_same_shape(p.grad->shape(), p.value->shape(), "adam gradient '" + p.name + "'");
    nn::require_same_shape(state.m[i].shape(), p.value->shape(), "adam moment '" + p.name + "'");
    nn::require_finite(*p.grad, "adam gradient '" + p.name + "'");
  }

  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  const double b1 = hyper.beta1, b2 = hyper.beta2;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = *params[i].value;
    const auto& grad = *params[i].grad;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      const double mk = b1 * m[k] + (1.0 - b1) * g;
      const double vk = b2 * v[k] + (1.0 - b2) * g * g;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double step = hyper.lr * (mk / c1) / (std::sqrt(vk / c2) + hyper.eps);
      value[k] = static_cast<T>(value[k] - step);
    }
  }
}

template void adam_step(std::span<const nn::Param<float>>, AdamState<float>&, const AdamHyper&);
template void adam_step(std::span<const nn::Param<double>>, AdamState<double>&, const AdamHyper&);

}  // namespace deepscan::optim
