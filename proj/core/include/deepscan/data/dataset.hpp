#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "deepscan/data/normalize.hpp"
#include "deepscan/data/paired.hpp"
#include "deepscan/data/patches.hpp"
#include "deepscan/data/tiles.hpp"
#include "deepscan/nn/tensor.hpp"

namespace deepscan::data {

/// Sorted stems of the *.mpi files in a directory.
std::vector<std::string> list_stems(const std::filesystem::path& dir);

/// Loads <root>/source/<stem>.mpi with <root>/target/<stem>.mpi, sorted by
/// stem. Throws IoError listing every stem present on only one side.
std::vector<PairedSample> load_dataset(const std::filesystem::path& root);

struct SplitManifest {
  std::uint64_t seed = 0;
  std::vector<std::string> train;
  std::vector<std::string> test;
};

void write_split_manifest(const SplitManifest& manifest, const std::filesystem::path& path);
SplitManifest read_split_manifest(const std::filesystem::path& path);

struct Batch {
  nn::Tensor inputs;
  nn::Tensor targets;
};

/// Indexed source of training examples.
class TrainingSet {
 public:
  virtual ~TrainingSet() = default;
  virtual std::size_t size() const = 0;
  virtual Batch batch(std::span<const std::size_t> indices) const = 0;
};

/// Pixel patches at seeded random anchors over a set of images. Patches are
/// cut when a batch is requested, so only the images are held in memory.
/// Inputs are normalized with `input_norm` and targets with `target_norm`.
class PatchTrainingSet final : public TrainingSet {
 public:
  PatchTrainingSet(std::span<const PairedSample> pairs, const NormalizationParams& input_norm,
                   const NormalizationParams& target_norm, std::size_t patch_count, std::uint64_t seed);

  std::size_t size() const override { return anchors_.size(); }
  Batch batch(std::span<const std::size_t> indices) const override;

  struct Anchor {
    std::uint32_t image;
    PixelOrigin pixel;
  };
  const std::vector<Anchor>& anchors() const noexcept { return anchors_; }

 private:
  std::vector<io::Image> sources_;
  std::vector<io::Image> targets_;
  std::vector<Anchor> anchors_;
};

/// Pre-cut normalized tiles; source and target share `norm`.
class TileTrainingSet final : public TrainingSet {
 public:
  TileTrainingSet(std::span<const PairedSample> pairs, const NormalizationParams& norm, std::size_t tile,
                  std::size_t per_image, std::uint64_t seed);

  std::size_t size() const override { return tiles_.origins.size(); }
  Batch batch(std::span<const std::size_t> indices) const override;

 private:
  TileSet tiles_;
};

}  // namespace deepscan::data
