#include "deepscan/optim/losses.hpp"

#include <cmath>

namespace deepscan::optim {

double softplus(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }

double laplace_scale(double s) { return softplus(s) + kLaplaceScaleFloor; }

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

template <typename T>
MseLoss<T> mse_loss(const nn::BasicTensor<T>& prediction, const nn::BasicTensor<T>& target) {
  nn::require_same_shape(prediction.shape(), target.shape(), "mse_loss");
  MseLoss<T> out{0.0, nn::BasicTensor<T>(prediction.shape())};
  const double n = static_cast<double>(prediction.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = static_cast<double>(prediction[i]) - static_cast<double>(target[i]);
    sum += d * d;
    out.grad[i] = static_cast<T>(2.0 * d / n);
  }
  out.value = sum / n;
  return out;
}

template <typename T>
LaplaceLoss<T> laplace_nll(const nn::BasicTensor<T>& location, const nn::BasicTensor<T>& raw_scale,
                           const nn::BasicTensor<T>& target) {
  nn::require_same_shape(location.shape(), target.shape(), "laplace_nll location");
  nn::require_same_shape(raw_scale.shape(), target.shape(), "laplace_nll scale");
  LaplaceLoss<T> out{0.0, nn::BasicTensor<T>(location.shape()), nn::BasicTensor<T>(location.shape())};
  const double n = static_cast<double>(location.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < location.size(); ++i) {
    const double s = raw_scale[i];
    const double sigma = laplace_scale(s);
    const double diff = static_cast<double>(target[i]) - static_cast<double>(location[i]);
    const double abs_diff = std::abs(diff);
    sum += abs_diff / sigma + std::log(2.0 * sigma);
    const double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
    out.grad_location[i] = static_cast<T>(-sign / sigma / n);
    const double dsigma = (1.0 / sigma - abs_diff / (sigma * sigma)) / n;
    out.grad_scale[i] = static_cast<T>(dsigma * sigmoid(s));
  }
  out.value = sum / n;
  return out;
}

template MseLoss<float> mse_loss(const nn::Tensor&, const nn::Tensor&);
template MseLoss<double> mse_loss(const nn::TensorD&, const nn::TensorD&);
template LaplaceLoss<float> laplace_nll(const nn::Tensor&, const nn::Tensor&, const nn::Tensor&);
template LaplaceLoss<double> laplace_nll(const nn::TensorD&, const nn::TensorD&, const nn::TensorD&);

}  // namespace deepscan::optim
