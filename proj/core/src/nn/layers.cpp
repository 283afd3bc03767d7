#include "deepscan/nn/layers.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "deepscan/util/error.hpp"
#include "deepscan/util/random.hpp"

namespace deepscan::nn {
namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 9> kKindNames{{
    {LayerKind::conv2d, "conv2d"},
    {LayerKind::batchnorm, "batchnorm"},
    {LayerKind::dense, "dense"},
    {LayerKind::relu, "relu"},
    {LayerKind::maxpool2, "maxpool2"},
    {LayerKind::upsample2, "upsample2"},
    {LayerKind::concat, "concat"},
    {LayerKind::flatten, "flatten"},
    {LayerKind::residual_add, "residual-add"},
}};

template <typename T>
void fill_normal(BasicTensor<T>& t, Rng& rng, double stddev) {
  for (auto& v : t.values()) v = static_cast<T>(rng.normal() * stddev);
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<LayerKind> parse_layer_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

void LayerSpec::validate() const {
  const std::string who = "layer '" + name + "' (" + std::string(to_string(kind)) + ")";
  switch (kind) {
    case LayerKind::conv2d:
      if (kernel == 0) throw RangeError(who + ": kernel extent must be positive");
      if (in_channels == 0 || out_channels == 0) throw RangeError(who + ": channel counts must be positive");
      break;
    case LayerKind::batchnorm:
      if (!(eps > 0.0)) throw RangeError(who + ": eps must be > 0");
      if (in_channels == 0) throw RangeError(who + ": channel count must be positive");
      break;
    case LayerKind::dense:
      if (in_channels == 0 || out_channels == 0) throw RangeError(who + ": sizes must be positive");
      break;
    default:
      break;
  }
}

std::size_t param_count(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::conv2d:
      return spec.out_channels * spec.in_channels * spec.kernel * spec.kernel + spec.out_channels;
    case LayerKind::batchnorm:
      return 2 * spec.in_channels;
    case LayerKind::dense:
      return spec.in_channels * spec.out_channels + spec.out_channels;
    default:
      return 0;
  }
}

// ---- Conv2d ----

template <typename T>
Conv2d<T>::Conv2d(LayerSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const Shape ks{spec_.out_channels, spec_.in_channels, spec_.kernel, spec_.kernel};
  kernel = BasicTensor<T>(ks);
  kernel_grad = BasicTensor<T>(ks);
  bias = BasicTensor<T>(Shape{spec_.out_channels});
  bias_grad = BasicTensor<T>(Shape{spec_.out_channels});
}

template <typename T>
BasicTensor<T> Conv2d<T>::forward(const BasicTensor<T>& x, Mode mode) {
  if (mode == Mode::train) input_ = x;
  return conv2d_forward(x, kernel, bias);
}

template <typename T>
BasicTensor<T> Conv2d<T>::infer(const BasicTensor<T>& x) const {
  return conv2d_forward(x, kernel, bias);
}

template <typename T>
BasicTensor<T> Conv2d<T>::backward(const BasicTensor<T>& grad_output) {
  if (input_.empty()) throw StateError("conv2d '" + spec_.name + "': backward without a train-mode forward");
  auto g = conv2d_backward(input_, kernel, grad_output, this->input_grad_);
  for (std::size_t i = 0; i < kernel_grad.size(); ++i) kernel_grad[i] += g.kernel[i];
  for (std::size_t i = 0; i < bias_grad.size(); ++i) bias_grad[i] += g.bias[i];
  return std::move(g.input);
}

template <typename T>
std::vector<Param<T>> Conv2d<T>::params() {
  return {{spec_.name + ".kernel", &kernel, &kernel_grad}, {spec_.name + ".bias", &bias, &bias_grad}};
}

// ---- BatchNorm ----

template <typename T>
BatchNorm<T>::BatchNorm(LayerSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const Shape s{spec_.in_channels};
  gamma = BasicTensor<T>(s, T(1));
  beta = BasicTensor<T>(s);
  gamma_grad = BasicTensor<T>(s);
  beta_grad = BasicTensor<T>(s);
}

template <typename T>
BasicTensor<T> BatchNorm<T>::forward(const BasicTensor<T>& x, Mode mode) {
  return batchnorm_forward(x, gamma, beta, spec_.eps, mode, state, &cache_);
}

template <typename T>
BasicTensor<T> BatchNorm<T>::infer(const BasicTensor<T>& x) const {
  return batchnorm_infer(x, gamma, beta, spec_.eps, state);
}

template <typename T>
BasicTensor<T> BatchNorm<T>::backward(const BasicTensor<T>& grad_output) {
  if (cache_.inv_std.empty()) throw StateError("batchnorm '" + spec_.name + "': backward without forward");
  auto g = batchnorm_backward(grad_output, gamma, cache_);
  for (std::size_t i = 0; i < gamma_grad.size(); ++i) {
    gamma_grad[i] += g.gamma[i];
    beta_grad[i] += g.beta[i];
  }
  return std::move(g.input);
}

template <typename T>
std::vector<Param<T>> BatchNorm<T>::params() {
  return {{spec_.name + ".gamma", &gamma, &gamma_grad}, {spec_.name + ".beta", &beta, &beta_grad}};
}

template <typename T>
std::vector<Buffer<T>> BatchNorm<T>::buffers() {
  return {{spec_.name + ".running_mean", &state.running_mean, &state.initialized},
          {spec_.name + ".running_var", &state.running_var, &state.initialized}};
}

// ---- Dense ----

template <typename T>
Dense<T>::Dense(LayerSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  weight = BasicTensor<T>(Shape{spec_.in_channels, spec_.out_channels});
  weight_grad = BasicTensor<T>(weight.shape());
  bias = BasicTensor<T>(Shape{spec_.out_channels});
  bias_grad = BasicTensor<T>(bias.shape());
}

template <typename T>
BasicTensor<T> Dense<T>::forward(const BasicTensor<T>& x, Mode mode) {
  if (mode == Mode::train) input_ = x;
  return dense_forward(x, weight, bias);
}

template <typename T>
BasicTensor<T> Dense<T>::infer(const BasicTensor<T>& x) const {
  return dense_forward(x, weight, bias);
}

template <typename T>
BasicTensor<T> Dense<T>::backward(const BasicTensor<T>& grad_output) {
  if (input_.empty()) throw StateError("dense '" + spec_.name + "': backward without a train-mode forward");
  auto g = dense_backward(input_, weight, grad_output, this->input_grad_);
  for (std::size_t i = 0; i < weight_grad.size(); ++i) weight_grad[i] += g.weight[i];
  for (std::size_t i = 0; i < bias_grad.size(); ++i) bias_grad[i] += g.bias[i];
  return std::move(g.input);
}

template <typename T>
std::vector<Param<T>> Dense<T>::params() {
  return {{spec_.name + ".weight", &weight, &weight_grad}, {spec_.name + ".bias", &bias, &bias_grad}};
}

// ---- parameter-free ----

template <typename T>
BasicTensor<T> Relu<T>::forward(const BasicTensor<T>& x, Mode mode) {
  if (mode == Mode::train) input_ = x;
  return relu_forward(x);
}

template <typename T>
BasicTensor<T> Relu<T>::backward(const BasicTensor<T>& grad_output) {
  return relu_backward(input_, grad_output);
}

template <typename T>
BasicTensor<T> MaxPool2<T>::forward(const BasicTensor<T>& x, Mode mode) {
  auto r = maxpool2_forward(x);
  if (mode == Mode::train) {
    input_shape_ = x.shape();
    argmax_ = std::move(r.argmax);
  }
  return std::move(r.output);
}

template <typename T>
BasicTensor<T> MaxPool2<T>::backward(const BasicTensor<T>& grad_output) {
  return maxpool2_backward(grad_output, argmax_, input_shape_);
}

template <typename T>
BasicTensor<T> Flatten<T>::forward(const BasicTensor<T>& x, Mode mode) {
  if (mode == Mode::train) input_shape_ = x.shape();
  return infer(x);
}

template <typename T>
BasicTensor<T> Flatten<T>::infer(const BasicTensor<T>& x) const {
  if (x.rank() < 2) throw ShapeError("flatten: expected a batch axis, got " + shape_string(x.shape()));
  return x.reshaped(Shape{x.dim(0), x.size() / x.dim(0)});
}

template <typename T>
BasicTensor<T> Flatten<T>::backward(const BasicTensor<T>& grad_output) {
  return grad_output.reshaped(input_shape_);
}

template <typename T>
BasicTensor<T> ConcatSplit<T>::infer(const BasicTensor<T>& x) const {
  auto [a, b] = split_channels(x, spec_.in_channels);
  return concat_channels(a, b);
}

template <typename T>
BasicTensor<T> ConcatSplit<T>::backward(const BasicTensor<T>& grad_output) {
  auto [ga, gb] = split_channels(grad_output, spec_.in_channels);
  return concat_channels(ga, gb);
}

template <typename T>
BasicTensor<T> ResidualAddSplit<T>::infer(const BasicTensor<T>& x) const {
  const std::size_t c = x.dim(x.rank() - 3);
  if (c % 2 != 0) throw ShapeError("residual-add: channel axis must split evenly");
  auto [a, b] = split_channels(x, c / 2);
  return add(a, b);
}

template <typename T>
BasicTensor<T> ResidualAddSplit<T>::backward(const BasicTensor<T>& grad_output) {
  return concat_channels(grad_output, grad_output);
}

// ---- construction ----

template <typename T>
void initialize(Layer<T>& layer, std::uint64_t seed) {
  Rng rng(seed);
  if (auto* conv = dynamic_cast<Conv2d<T>*>(&layer)) {
    const auto& s = conv->spec();
    fill_normal(conv->kernel, rng, std::sqrt(2.0 / static_cast<double>(s.in_channels * s.kernel * s.kernel)));
    conv->bias.fill(T(0));
  } else if (auto* dense = dynamic_cast<Dense<T>*>(&layer)) {
    fill_normal(dense->weight, rng, std::sqrt(2.0 / static_cast<double>(dense->spec().in_channels)));
    dense->bias.fill(T(0));
  } else if (auto* bn = dynamic_cast<BatchNorm<T>*>(&layer)) {
    bn->gamma.fill(T(1));
    bn->beta.fill(T(0));
  }
}

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, std::uint64_t seed) {
  std::unique_ptr<Layer<T>> layer;
  switch (spec.kind) {
    case LayerKind::conv2d: layer = std::make_unique<Conv2d<T>>(spec); break;
    case LayerKind::batchnorm: layer = std::make_unique<BatchNorm<T>>(spec); break;
    case LayerKind::dense: layer = std::make_unique<Dense<T>>(spec); break;
    case LayerKind::relu: layer = std::make_unique<Relu<T>>(spec); break;
    case LayerKind::maxpool2: layer = std::make_unique<MaxPool2<T>>(spec); break;
    case LayerKind::upsample2: layer = std::make_unique<Upsample2<T>>(spec); break;
    case LayerKind::flatten: layer = std::make_unique<Flatten<T>>(spec); break;
    case LayerKind::concat: layer = std::make_unique<ConcatSplit<T>>(spec); break;
    case LayerKind::residual_add: layer = std::make_unique<ResidualAddSplit<T>>(spec); break;
  }
  initialize(*layer, seed);
  return layer;
}

#define DEEPSCAN_INSTANTIATE_LAYERS(T)                                          \
  template class Conv2d<T>;                                                     \
  template class BatchNorm<T>;                                                  \
  template class Dense<T>;                                                      \
  template class Relu<T>;                                                       \
  template class MaxPool2<T>;                                                   \
  template class Flatten<T>;                                                    \
  template class ConcatSplit<T>;                                                \
  template class ResidualAddSplit<T>;                                           \
  template void initialize(Layer<T>&, std::uint64_t);                           \
  template std::unique_ptr<Layer<T>> make_layer(const LayerSpec&, std::uint64_t);

DEEPSCAN_INSTANTIATE_LAYERS(float)
DEEPSCAN_INSTANTIATE_LAYERS(double)

#undef DEEPSCAN_INSTANTIATE_LAYERS

}  // namespace deepscan::nn
