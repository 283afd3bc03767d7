#pragma once

#include "deepscan/nn/tensor.hpp"

namespace deepscan::optim {

/// Lower bound added to softplus(s) so the Laplace scale stays positive.
inline constexpr double kLaplaceScaleFloor = 1e-3;

/// log(1 + e^x) without overflow.
double softplus(double x);
/// Laplace scale from the raw head output: softplus(s) + floor.
double laplace_scale(double s);

template <typename T>
struct MseLoss {
  double value = 0.0;
  nn::BasicTensor<T> grad;  // 2 (pred - target) / N
};

template <typename T>
MseLoss<T> mse_loss(const nn::BasicTensor<T>& prediction, const nn::BasicTensor<T>& target);

template <typename T>
struct LaplaceLoss {
  double value = 0.0;
  nn::BasicTensor<T> grad_location;
  nn::BasicTensor<T> grad_scale;  // with respect to the raw s
};

/// Mean over elements of |target - location| / sigma + ln(2 sigma), with
/// sigma = softplus(s) + 1e-3.
template <typename T>
LaplaceLoss<T> laplace_nll(const nn::BasicTensor<T>& location, const nn::BasicTensor<T>& raw_scale,
                           const nn::BasicTensor<T>& target);

}  // namespace deepscan::optim
