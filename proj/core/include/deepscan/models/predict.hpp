#pragma once

#include <cstddef>

#include "deepscan/io/image.hpp"
#include "deepscan/models/model.hpp"

namespace deepscan::models {

/// One network evaluation per pixel on its zero-padded 40x40 patch. Pixels
/// are evaluated in batches of `batch` across workers; every pixel's result
/// is bit-identical to evaluating its patch alone. Returns float32.
io::Image predict_patch_image(const Model& model, const io::Image& image, std::size_t batch = 256);

/// Tiled residual U-Net prediction. Tiles advance by tile - overlap, the
/// last one moved back to end at the border; each output pixel comes from
/// the tile whose centre region holds it, with boundaries at overlap
/// midpoints. Images smaller than a tile are reflect-padded and cropped
/// back. Returns float32.
io::Image predict_unet(const Model& model, const io::Image& image, std::size_t tile = 128,
                       std::size_t overlap = 16);

/// Dispatches on the model architecture with default settings.
io::Image predict(const Model& model, const io::Image& image);

/// Half-open output span [begin, end) owned by tile i of `origins`.
struct TileSpan {
  std::size_t begin;
  std::size_t end;
};
std::vector<TileSpan> tile_spans(const std::vector<std::size_t>& origins, std::size_t tile, std::size_t extent);

}  // namespace deepscan::models
