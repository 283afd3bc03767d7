#include "deepscan/models/residual_unet.hpp"

#include <string>

#include "deepscan/util/error.hpp"
#include "deepscan/util/random.hpp"

namespace deepscan::models {

using nn::LayerKind;
using nn::LayerSpec;

void ResidualUNetConfig::validate() const {
  if (in_channels != 1 && in_channels != 2) {
    throw RangeError("residual U-Net: unsupported channel count " + std::to_string(in_channels) +
                     " (expected 1 or 2)");
  }
  if (base_filters == 0 || depth == 0 || kernel == 0) {
    throw RangeError("residual U-Net: base filters, depth and kernel must be positive");
  }
}

ResidualUNetConfig ResidualUNetConfig::tiny(std::size_t in_channels, std::uint64_t seed) {
  ResidualUNetConfig c;
  c.in_channels = in_channels;
  c.base_filters = 2;
  c.depth = 2;
  c.kernel = 3;
  c.zero_mu_head = false;
  c.seed = seed;
  return c;
}

template <typename T>
ResidualUNet<T>::ResidualUNet(ResidualUNetConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& c = config_;
  std::uint64_t index = 0;
  auto conv_pair = [&](Sequential<T>& seq, const std::string& prefix, std::size_t in, std::size_t out) {
    seq.add({LayerKind::conv2d, prefix + ".conv1", in, out, c.kernel}, stream_key(c.seed, index++));
    seq.add({LayerKind::relu, prefix + ".relu1"}, 0);
    seq.add({LayerKind::conv2d, prefix + ".conv2", out, out, c.kernel}, stream_key(c.seed, index++));
    seq.add({LayerKind::relu, prefix + ".relu2"}, 0);
  };

  encoder_.resize(c.depth);
  decoder_.resize(c.depth);
  std::size_t channels = c.in_channels;
  for (std::size_t d = 0; d < c.depth; ++d) {
    const std::size_t out = c.base_filters << d;
    conv_pair(encoder_[d], "enc" + std::to_string(d), channels, out);
    channels = out;
  }
  const std::size_t bottom = c.base_filters << c.depth;
  conv_pair(bottleneck_, "bottleneck", channels, bottom);
  for (std::size_t d = c.depth; d-- > 0;) {
    const std::size_t skip = c.base_filters << d;
    const std::size_t up = c.base_filters << (d + 1);
    conv_pair(decoder_[d], "dec" + std::to_string(d), up + skip, skip);
  }

  mu_head_ = std::make_unique<nn::Conv2d<T>>(LayerSpec{LayerKind::conv2d, "mu", c.base_filters, c.in_channels, 1});
  s_head_ = std::make_unique<nn::Conv2d<T>>(LayerSpec{LayerKind::conv2d, "s", c.base_filters, c.in_channels, 1});
  nn::initialize(*mu_head_, stream_key(c.seed, index++));
  nn::initialize(*s_head_, stream_key(c.seed, index++));
  if (c.zero_mu_head) {
    mu_head_->kernel.fill(T(0));
    mu_head_->bias.fill(T(0));
  }
  encoder_.front().front().set_input_grad(false);
}

template <typename T>
void ResidualUNet<T>::check_input(const nn::BasicTensor<T>& x) const {
  if (x.rank() != 4 || x.dim(1) != config_.in_channels) {
    throw ShapeError("residual U-Net: expected input [N, " + std::to_string(config_.in_channels) +
                     ", H, W], got " + nn::shape_string(x.shape()));
  }
  const std::size_t m = std::size_t{1} << config_.depth;
  if (x.dim(2) % m != 0 || x.dim(3) % m != 0) {
    throw ShapeError("residual U-Net: height " + std::to_string(x.dim(2)) + " and width " + std::to_string(x.dim(3)) +
                     " must be divisible by " + std::to_string(m));
  }
}

template <typename T>
NetOutput<T> ResidualUNet<T>::forward(const nn::BasicTensor<T>& x, nn::Mode mode) {
  check_input(x);
  const std::size_t depth = config_.depth;
  skips_.assign(depth, {});
  pool_argmax_.assign(depth, {});
  nn::BasicTensor<T> h = x;
  for (std::size_t d = 0; d < depth; ++d) {
    skips_[d] = encoder_[d].forward(h, mode);
    auto pooled = nn::maxpool2_forward(skips_[d]);
    pool_argmax_[d] = std::move(pooled.argmax);
    h = std::move(pooled.output);
  }
  h = bottleneck_.forward(h, mode);
  for (std::size_t d = depth; d-- > 0;) {
    h = decoder_[d].forward(nn::concat_channels(nn::upsample2_forward(h), skips_[d]), mode);
  }
  NetOutput<T> out;
  out.prediction = nn::add(x, mu_head_->forward(h, mode));
  out.scale = s_head_->forward(h, mode);
  return out;
}

template <typename T>
nn::BasicTensor<T> ResidualUNet<T>::infer_correction(const nn::BasicTensor<T>& x, nn::BasicTensor<T>* scale) const {
  check_input(x);
  const std::size_t depth = config_.depth;
  std::vector<nn::BasicTensor<T>> skips(depth);
  nn::BasicTensor<T> h = x;
  for (std::size_t d = 0; d < depth; ++d) {
    skips[d] = encoder_[d].infer(h);
    h = nn::maxpool2_forward(skips[d]).output;
  }
  h = bottleneck_.infer(h);
  for (std::size_t d = depth; d-- > 0;) {
    h = decoder_[d].infer(nn::concat_channels(nn::upsample2_forward(h), skips[d]));
  }
  if (scale) *scale = s_head_->infer(h);
  return mu_head_->infer(h);
}

template <typename T>
NetOutput<T> ResidualUNet<T>::infer(const nn::BasicTensor<T>& x) const {
  NetOutput<T> out;
  out.prediction = nn::add(x, infer_correction(x, &out.scale));
  return out;
}

template <typename T>
void ResidualUNet<T>::backward(const nn::BasicTensor<T>& grad_prediction, const nn::BasicTensor<T>& grad_scale) {
  if (skips_.empty()) throw StateError("residual U-Net: backward without a train-mode forward");
  const std::size_t depth = config_.depth;
  nn::BasicTensor<T> g = mu_head_->backward(grad_prediction);
  if (!grad_scale.empty()) g = nn::add(g, s_head_->backward(grad_scale));

  std::vector<nn::BasicTensor<T>> skip_grads(depth);
  for (std::size_t d = 0; d < depth; ++d) {
    auto [up, skip] = nn::split_channels(decoder_[d].backward(g), config_.base_filters << (d + 1));
    skip_grads[d] = std::move(skip);
    g = nn::upsample2_backward(up);
  }
  g = bottleneck_.backward(g);
  for (std::size_t d = depth; d-- > 0;) {
    g = nn::add(nn::maxpool2_backward(g, pool_argmax_[d], skips_[d].shape()), skip_grads[d]);
    g = encoder_[d].backward(g);
  }
}

template <typename T>
std::vector<nn::Param<T>> ResidualUNet<T>::params() {
  std::vector<nn::Param<T>> out;
  for (auto& e : encoder_) e.append_params(out);
  bottleneck_.append_params(out);
  for (std::size_t d = config_.depth; d-- > 0;) decoder_[d].append_params(out);
  for (auto& p : mu_head_->params()) out.push_back(p);
  for (auto& p : s_head_->params()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<nn::Buffer<T>> ResidualUNet<T>::buffers() {
  return {};
}

template <typename T>
std::vector<LayerSpec> ResidualUNet<T>::layer_specs() const {
  std::vector<LayerSpec> out;
  for (std::size_t d = 0; d < config_.depth; ++d) {
    encoder_[d].append_specs(out);
    out.push_back({LayerKind::maxpool2, "enc" + std::to_string(d) + ".pool"});
  }
  bottleneck_.append_specs(out);
  for (std::size_t d = config_.depth; d-- > 0;) {
    out.push_back({LayerKind::upsample2, "dec" + std::to_string(d) + ".up"});
    out.push_back({LayerKind::concat, "dec" + std::to_string(d) + ".concat", config_.base_filters << (d + 1)});
    decoder_[d].append_specs(out);
  }
  out.push_back(mu_head_->spec());
  out.push_back(s_head_->spec());
  out.push_back({LayerKind::residual_add, "residual"});
  return out;
}

template class ResidualUNet<float>;
template class ResidualUNet<double>;

}  // namespace deepscan::models
