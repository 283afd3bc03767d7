#include <doctest.h>

#include <cmath>

#include "deepscan/nn/grad_check.hpp"
#include "deepscan/nn/kernels.hpp"
#include "deepscan/nn/layers.hpp"
#include "deepscan/util/error.hpp"
#include "layer_cases.hpp"
#include "oracles.hpp"
#include "random_tensor.hpp"

using namespace deepscan;
using namespace deepscan::nn;
using testing::random_tensor;

TEST_SUITE("nn") {

TEST_CASE("tensor shape contract") {
  Tensor t({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.rank() == 3);
  CHECK_THROWS_AS(Tensor({2, 0, 3}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>(3)), ShapeError);
  CHECK_THROWS_AS(t.reshaped({5, 5}), ShapeError);
  CHECK(t.reshaped({6, 4}).shape() == Shape{6, 4});
}

TEST_CASE("require_finite rejects NaN and Inf") {
  Tensor t({2}, {1.0f, NAN});
  CHECK_THROWS_AS(require_finite(t, "t"), NonFiniteError);
  t[1] = INFINITY;
  CHECK_THROWS_AS(require_finite(t, "t"), NonFiniteError);
  t[1] = 0.0f;
  CHECK_NOTHROW(require_finite(t, "t"));
}

TEST_CASE("conv2d hand-evaluated 3x3 ones") {
  TensorD in({1, 3, 3}, 1.0), k({1, 1, 3, 3}, 1.0), b({1}, 0.0);
  const auto out = conv2d_forward(in, k, b);
  REQUIRE(out.shape() == Shape{1, 3, 3});
  CHECK(out[4] == 9.0);
  CHECK(out[1] == 6.0);
  CHECK(out[3] == 6.0);
  CHECK(out[0] == 4.0);
  CHECK(out[8] == 4.0);
}

TEST_CASE("conv2d identity kernel") {
  const auto in = random_tensor({1, 5, 7}, 3);
  TensorD k({1, 1, 1, 1}, 1.0), b({1}, 0.0);
  CHECK(conv2d_forward(in, k, b) == in);
}

TEST_CASE("conv2d 64 filters 4x4 on 2x40x40 keeps the geometry") {
  Tensor in({2, 40, 40}), k({64, 2, 4, 4}), b({64});
  CHECK(conv2d_forward(in, k, b).shape() == Shape{64, 40, 40});
}

TEST_CASE("conv2d even kernel reaches -1..+2") {
  // A single 1 at kernel tap (0,0) copies the input from offset (-1,-1).
  TensorD in = random_tensor({1, 1, 6, 6}, 11);
  TensorD k({1, 1, 4, 4}, 0.0), b({1}, 0.0);
  k[0] = 1.0;
  const auto out = conv2d_forward(in, k, b);
  CHECK(out.at(0, 0, 3, 3) == in.at(0, 0, 2, 2));
  CHECK(out.at(0, 0, 0, 0) == 0.0);
  k.fill(0.0);
  k[15] = 1.0;  // tap (3,3) -> offset (+2,+2)
  const auto out2 = conv2d_forward(in, k, b);
  CHECK(out2.at(0, 0, 1, 1) == in.at(0, 0, 3, 3));
  CHECK(out2.at(0, 0, 4, 4) == 0.0);
}

TEST_CASE("conv2d matches the naive oracle on 20 random cases") {
  Rng rng(2024);
  for (int i = 0; i < 20; ++i) {
    const std::size_t n = 1 + rng.below(3), ci = 1 + rng.below(4), co = 1 + rng.below(4);
    const std::size_t h = 1 + rng.below(9), w = 1 + rng.below(9), k = 1 + rng.below(5);
    const auto in = random_tensor({n, ci, h, w}, 100 + i);
    const auto kernel = random_tensor({co, ci, k, k}, 200 + i);
    const auto bias = random_tensor({co}, 300 + i);
    const auto got = conv2d_forward(in, kernel, bias);
    const auto want = oracle::conv2d(in, kernel, bias);
    REQUIRE(got.shape() == want.shape());
    for (std::size_t j = 0; j < got.size(); ++j) REQUIRE(std::abs(got[j] - want[j]) <= 1e-9);
  }
}

TEST_CASE("conv2d same padding preserves H and W for k in {1,3,4,5}") {
  for (std::size_t k : {1, 3, 4, 5}) {
    Tensor in({2, 3, 9, 6}), kernel({4, 3, k, k}), bias({4});
    CHECK(conv2d_forward(in, kernel, bias).shape() == Shape{2, 4, 9, 6});
  }
}

TEST_CASE("conv2d shape errors name the axis") {
  Tensor in({1, 3, 5, 5}), kernel({4, 2, 3, 3}), bias({4});
  try {
    conv2d_forward(in, kernel, bias);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("channel") != std::string::npos);
  }
  CHECK_THROWS_AS(conv2d_forward(Tensor({1, 2, 5, 5}), Tensor({4, 2, 3, 3}), Tensor({3})), ShapeError);
}

TEST_CASE("batchnorm examples") {
  BatchNormState<double> state;
  SUBCASE("zero variance batch") {
    TensorD x({4, 1}, 3.0), g({1}, 1.0), b({1}, 0.5);
    const auto y = batchnorm_forward(x, g, b, 1e-3, Mode::train, state);
    for (double v : y.values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-3));
  }
  SUBCASE("values {0,2} normalize to {-1,+1}") {
    TensorD x({2, 1}, {0.0, 2.0}), g({1}, 1.0), b({1}, 0.0);
    const auto y = batchnorm_forward(x, g, b, 1e-12, Mode::train, state);
    CHECK(y[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("standardized input is nearly unchanged") {
    TensorD x = random_tensor({64, 2}, 5);
    for (std::size_t c = 0; c < 2; ++c) {
      double m = 0, v = 0;
      for (std::size_t i = 0; i < 64; ++i) m += x[i * 2 + c] / 64;
      for (std::size_t i = 0; i < 64; ++i) v += (x[i * 2 + c] - m) * (x[i * 2 + c] - m) / 64;
      for (std::size_t i = 0; i < 64; ++i) x[i * 2 + c] = (x[i * 2 + c] - m) / std::sqrt(v);
    }
    TensorD g({2}, 1.0), b({2}, 0.0);
    const auto y = batchnorm_forward(x, g, b, 1e-3, Mode::train, state);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y[i] - x[i]) <= 1e-3);
  }
}

TEST_CASE("batchnorm eval before train is an error") {
  BatchNormState<float> state;
  Tensor x({2, 3}), g({3}, 1.0f), b({3});
  try {
    batchnorm_forward(x, g, b, 1e-3, Mode::eval, state);
    FAIL("expected StateError");
  } catch (const StateError& e) {
    CHECK(std::string(e.what()).find("uninitialized running moments") != std::string::npos);
  }
}

TEST_CASE("batchnorm running moments use momentum 0.9") {
  BatchNormState<double> state;
  TensorD g({1}, 1.0), b({1}, 0.0);
  batchnorm_forward(TensorD({2, 1}, {0.0, 2.0}), g, b, 1e-3, Mode::train, state);
  CHECK(state.running_mean[0] == doctest::Approx(1.0));
  CHECK(state.running_var[0] == doctest::Approx(1.0));
  batchnorm_forward(TensorD({2, 1}, {10.0, 10.0}), g, b, 1e-3, Mode::train, state);
  CHECK(state.running_mean[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 10.0));
  CHECK(state.running_var[0] == doctest::Approx(0.9 * 1.0));
  const auto y = batchnorm_forward(TensorD({1, 1}, {1.9}), g, b, 1e-3, Mode::eval, state);
  CHECK(y[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("dense examples") {
  TensorD x({1, 2}, {1.0, 2.0}), w({2, 2}, {1.0, 0.0, 0.0, 1.0}), b({2}, {1.0, 1.0});
  const auto y = dense_forward(x, w, b);
  CHECK(y[0] == 2.0);
  CHECK(y[1] == 3.0);
  const auto xi = random_tensor({3, 4}, 8);
  TensorD eye({4, 4}, 0.0);
  for (std::size_t i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0;
  CHECK(dense_forward(xi, eye, TensorD({4}, 0.0)) == xi);
  CHECK(param_count({LayerKind::dense, "d", 512, 32}) == 16416);
  CHECK_THROWS_AS(dense_forward(TensorD({1, 3}), TensorD({2, 2}), TensorD({2})), ShapeError);
}

TEST_CASE("dense rows are independent of the batch they are computed in") {
  const auto w = random_tensor<float>({300, 45}, 1);
  const auto b = random_tensor<float>({45}, 2);
  const auto x = random_tensor<float>({13, 300}, 3);
  const auto all = dense_forward(x, w, b);
  for (std::size_t r = 0; r < 13; ++r) {
    Tensor row({1, 300}, std::vector<float>(x.data() + r * 300, x.data() + (r + 1) * 300));
    const auto one = dense_forward(row, w, b);
    for (std::size_t j = 0; j < 45; ++j) REQUIRE(one[j] == all[r * 45 + j]);
  }
}

TEST_CASE("relu examples and mask") {
  TensorD x({2}, {-1.0, 2.0});
  CHECK(relu_forward(x) == TensorD({2}, {0.0, 2.0}));
  TensorD pos({3}, {0.0, 1.0, 5.0});
  CHECK(relu_forward(pos) == pos);
  TensorD at({3}, {-1.0, 0.0, 1.0});
  CHECK(relu_backward(at, TensorD({3}, 1.0)) == TensorD({3}, {0.0, 0.0, 1.0}));
}

TEST_CASE("maxpool and upsample examples") {
  TensorD x({1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
  const auto p = maxpool2_forward(x);
  CHECK(p.output.size() == 1);
  CHECK(p.output[0] == 4.0);
  const auto u = upsample2_forward(TensorD({1, 1, 1}, {5.0}));
  CHECK(u == TensorD({1, 2, 2}, {5.0, 5.0, 5.0, 5.0}));
  TensorD c({2, 4, 6}, 7.0);
  CHECK(upsample2_forward(maxpool2_forward(c).output) == c);
  CHECK_THROWS_AS(maxpool2_forward(TensorD({1, 3, 4})), ShapeError);
  CHECK_THROWS_AS(maxpool2_forward(TensorD({1, 4, 3})), ShapeError);
}

TEST_CASE("maxpool ties route the gradient to the first element") {
  TensorD x({1, 2, 2}, 1.0);
  const auto p = maxpool2_forward(x);
  const auto g = maxpool2_backward(TensorD({1, 1, 1}, 1.0), p.argmax, x.shape());
  CHECK(g == TensorD({1, 2, 2}, {1.0, 0.0, 0.0, 0.0}));
}

TEST_CASE("concat examples") {
  const auto a = random_tensor({1, 2, 2}, 1), b = random_tensor({1, 2, 2}, 2);
  const auto c = concat_channels(a, b);
  CHECK(c.shape() == Shape{2, 2, 2});
  for (std::size_t i = 0; i < 4; ++i) CHECK(c[i] == a[i]);
  auto [ga, gb] = split_channels(c, 1);
  CHECK(ga == a);
  CHECK(gb == b);
  CHECK_THROWS_AS(concat_channels(TensorD({1, 2, 2}), TensorD({1, 3, 2})), ShapeError);
}

TEST_CASE("parameter-free layers have no parameters") {
  for (auto kind : {LayerKind::relu, LayerKind::maxpool2, LayerKind::upsample2, LayerKind::concat,
                    LayerKind::flatten, LayerKind::residual_add}) {
    LayerSpec s{kind, "p", 1};
    CHECK(param_count(s) == 0);
    CHECK(make_layer<double>(s, 1)->params().empty());
  }
}

TEST_CASE("forward passes are pure") {
  const LayerSpec spec{LayerKind::conv2d, "c", 3, 4, 3};
  auto layer = make_layer<float>(spec, 7);
  const auto x = random_tensor<float>({2, 3, 8, 8}, 9);
  CHECK(layer->infer(x) == layer->infer(x));
  CHECK(layer->forward(x, Mode::train) == layer->infer(x));
}

TEST_CASE("grad_check examples") {
  const auto in = random_tensor({1, 2, 8, 8}, 4);
  const auto conv = grad_check({LayerKind::conv2d, "c", 2, 3, 3}, in);
  CHECK(conv.pass);
  CHECK(conv.max_rel_error <= 1e-4);
  CHECK(grad_check({LayerKind::dense, "d", 7, 5}, random_tensor({3, 7}, 5)).pass);
}

namespace {

// Dense layer whose backward doubles every gradient.
class BrokenDense final : public Layer<double> {
 public:
  BrokenDense() : inner_({LayerKind::dense, "broken", 4, 3}) { initialize(inner_, 3); }
  const LayerSpec& spec() const override { return inner_.spec(); }
  TensorD forward(const TensorD& x, Mode m) override { return inner_.forward(x, m); }
  TensorD infer(const TensorD& x) const override { return inner_.infer(x); }
  TensorD backward(const TensorD& g) override {
    TensorD g2 = g;
    for (auto& v : g2.values()) v *= 2.0;
    return inner_.backward(g2);
  }
  std::vector<Param<double>> params() override { return inner_.params(); }

 private:
  Dense<double> inner_;
};

}  // namespace

TEST_CASE("grad_check flags a corrupted backward") {
  BrokenDense broken;
  const auto report = grad_check(broken, random_tensor({2, 4}, 1));
  CHECK_FALSE(report.pass);
  CHECK(report.max_rel_error == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(report.max_rel_error >= report.tolerance);
}

TEST_CASE("every layer kind passes grad_check on 10 seeds") {
  for (const auto& c : testing::layer_cases()) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto report = grad_check(c.spec, random_tensor(c.input, seed * 7919), {}, seed);
      INFO(to_string(c.spec.kind), " seed ", seed, " err ", report.max_rel_error);
      CHECK(report.pass);
    }
  }
}

TEST_CASE("batchnorm eval-mode gradients") {
  auto layer = make_layer<double>({LayerKind::batchnorm, "bn", 2}, 1);
  layer->forward(random_tensor({5, 2, 2, 2}, 1), Mode::train);
  const auto report = grad_check(*layer, random_tensor({3, 2, 2, 2}, 2), {}, Mode::eval);
  for (const auto& e : report.entries) INFO(e.name, " ", e.max_rel_error);
  CHECK(report.pass);
}

}  // TEST_SUITE
