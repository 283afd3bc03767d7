#include "deepscan/models/predict.hpp"

#include <string>

#include "deepscan/data/normalize.hpp"
#include "deepscan/data/patches.hpp"
#include "deepscan/data/tiles.hpp"
#include "deepscan/util/error.hpp"
#include "deepscan/util/parallel.hpp"

namespace deepscan::models {
namespace {

void require_channels(const Model& model, const io::Image& image) {
  if (image.channels() != model.in_channels()) {
    throw ShapeError("model expects " + std::to_string(model.in_channels()) + " channel(s), image has " +
                     std::to_string(image.channels()));
  }
}

}  // namespace

io::Image predict_patch_image(const Model& model, const io::Image& image, std::size_t batch) {
  const auto* net = model.patches();
  if (!net) throw StateError("predict_patch_image needs a patch regressor");
  require_channels(model, image);
  if (batch == 0) throw RangeError("predict_patch_image: batch must be positive");
  if (net->config().patch != data::kPatchSize) {
    throw ShapeError("predict_patch_image: model patch size " + std::to_string(net->config().patch) +
                     " differs from " + std::to_string(data::kPatchSize));
  }

  const io::Image input = model.input_norm ? data::normalize(image, *model.input_norm) : image;
  const std::size_t channels = image.channels();
  const std::size_t width = image.width();
  const std::size_t pixels = image.pixel_count();
  const std::size_t stride = channels * data::kPatchSize * data::kPatchSize;
  const std::size_t chunks = (pixels + batch - 1) / batch;
  io::Image out = io::Image::float32(image.width(), image.height(), channels);

  parallel_for(chunks, [&](std::size_t begin, std::size_t end) {
    for (std::size_t chunk = begin; chunk < end; ++chunk) {
      const std::size_t first = chunk * batch;
      const std::size_t n = std::min(batch, pixels - first);
      nn::Tensor x({n, channels, data::kPatchSize, data::kPatchSize});
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t p = first + i;
        data::extract_patch(input, p / width, p % width, x.data() + i * stride);
      }
      const nn::Tensor y = net->infer(x).prediction;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < channels; ++c) out.plane(c)[first + i] = y[i * channels + c];
      }
    }
  });
  return model.output_norm ? data::denormalize(out, *model.output_norm) : out;
}

std::vector<TileSpan> tile_spans(const std::vector<std::size_t>& origins, std::size_t tile, std::size_t extent) {
  std::vector<TileSpan> spans(origins.size());
  for (std::size_t i = 0; i < origins.size(); ++i) {
    spans[i].begin = i == 0 ? 0 : (origins[i - 1] + tile + origins[i]) / 2;
    spans[i].end = i + 1 == origins.size() ? extent : (origins[i] + tile + origins[i + 1]) / 2;
  }
  return spans;
}

io::Image predict_unet(const Model& model, const io::Image& image, std::size_t tile, std::size_t overlap) {
  const auto* net = model.unet();
  if (!net) throw StateError("predict_unet needs a residual U-Net");
  require_channels(model, image);
  const std::size_t multiple = std::size_t{1} << net->config().depth;
  if (tile == 0 || tile % multiple != 0) {
    throw RangeError("predict_unet: tile " + std::to_string(tile) + " must be a positive multiple of " +
                     std::to_string(multiple));
  }
  if (overlap % 2 != 0 || overlap >= tile) {
    throw RangeError("predict_unet: overlap " + std::to_string(overlap) + " must be even and below the tile");
  }

  const io::Image raw = data::reflect_pad(image, tile, tile);
  const io::Image input = model.input_norm ? data::normalize(raw, *model.input_norm) : raw;
  const std::size_t channels = raw.channels();
  const auto ys = data::tile_origins(raw.height(), tile, overlap);
  const auto xs = data::tile_origins(raw.width(), tile, overlap);
  const auto yspans = tile_spans(ys, tile, raw.height());
  const auto xspans = tile_spans(xs, tile, raw.width());
  std::vector<double> range(channels, 1.0);
  if (model.input_norm) {
    for (std::size_t c = 0; c < channels; ++c) range[c] = model.input_norm->hi[c] - model.input_norm->lo[c];
  }

  io::Image out = io::Image::float32(raw.width(), raw.height(), channels);
  parallel_for(ys.size() * xs.size(), [&](std::size_t begin, std::size_t end) {
    nn::Tensor x({1, channels, tile, tile});
    for (std::size_t t = begin; t < end; ++t) {
      const std::size_t ty = t / xs.size(), tx = t % xs.size();
      const std::size_t oy = ys[ty], ox = xs[tx];
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t r = 0; r < tile; ++r) {
          std::copy_n(input.ptr(c, oy + r, ox), tile, &x.at(0, c, r, 0));
        }
      }
      const nn::Tensor mu = net->infer_correction(x);
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t y = yspans[ty].begin; y < yspans[ty].end; ++y) {
          for (std::size_t xx = xspans[tx].begin; xx < xspans[tx].end; ++xx) {
            const float m = mu.at(0, c, y - oy, xx - ox);
            out.at(c, y, xx) = raw.at(c, y, xx) + static_cast<float>(range[c] * static_cast<double>(m));
          }
        }
      }
    }
  });
  if (out.width() == image.width() && out.height() == image.height()) return out;
  return data::crop(out, 0, 0, image.height(), image.width());
}

io::Image predict(const Model& model, const io::Image& image) {
  return model.arch() == Arch::patches ? predict_patch_image(model, image) : predict_unet(model, image);
}

}  // namespace deepscan::models
