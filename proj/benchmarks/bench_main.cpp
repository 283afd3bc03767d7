#include <benchmark/benchmark.h>

#include "deepscan/models/model.hpp"
#include "deepscan/models/predict.hpp"
#include "deepscan/nn/kernels.hpp"
#include "deepscan/util/random.hpp"

using namespace deepscan;

namespace {

nn::Tensor uniform(nn::Shape shape, std::uint64_t seed) {
  nn::Tensor t(std::move(shape));
  Rng rng(seed);
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

io::Image counts(std::size_t w, std::size_t h, std::size_t c, std::uint64_t seed) {
  auto img = io::Image::uint16(w, h, c, 12);
  Rng rng(seed);
  for (auto& v : img.samples()) v = static_cast<float>(rng.below(4096));
  return img;
}

// Args: batch, in channels, out channels, spatial size, kernel.
void BM_Conv2dForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0)), ci = static_cast<std::size_t>(state.range(1));
  const auto co = static_cast<std::size_t>(state.range(2)), hw = static_cast<std::size_t>(state.range(3));
  const auto k = static_cast<std::size_t>(state.range(4));
  const auto x = uniform({n, ci, hw, hw}, 1), w = uniform({co, ci, k, k}, 2), b = uniform({co}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d_forward(x, w, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * co * hw * hw * ci * k * k));
}
BENCHMARK(BM_Conv2dForward)->Args({16, 1, 64, 40, 4})->Args({16, 64, 32, 40, 3})->Args({4, 32, 32, 64, 5});

void BM_Conv2dBackward(benchmark::State& state) {
  const auto x = uniform({16, 64, 40, 40}, 1), w = uniform({32, 64, 3, 3}, 2), b = uniform({32}, 3);
  const auto g = uniform({16, 32, 40, 40}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d_backward(x, w, g, true));
}
BENCHMARK(BM_Conv2dBackward)->Unit(benchmark::kMillisecond);

// Args: batch, inputs, outputs.
void BM_DenseForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0)), in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const auto x = uniform({n, in}, 1), w = uniform({in, out}, 2), b = uniform({out}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(nn::dense_forward(x, w, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * in * out));
}
BENCHMARK(BM_DenseForward)->Args({64, 51200, 1024})->Args({256, 1024, 512})->Unit(benchmark::kMillisecond);

void BM_UNetPredictTile(benchmark::State& state) {
  auto model = models::build_residual_unet(2);
  const auto image = counts(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(0)), 2, 5);
  for (auto _ : state) benchmark::DoNotOptimize(models::predict_unet(model, image));
}
BENCHMARK(BM_UNetPredictTile)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_PatchPredict(benchmark::State& state) {
  auto model = models::build_patch_regressor(2);
  const auto& cfg = model.patches()->config();
  model.net().forward(uniform({8, 2, cfg.patch, cfg.patch}, 7), nn::Mode::train);
  const auto image = counts(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(0)), 2, 6);
  for (auto _ : state) benchmark::DoNotOptimize(models::predict_patch_image(model, image));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * image.pixel_count()));
}
BENCHMARK(BM_PatchPredict)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
