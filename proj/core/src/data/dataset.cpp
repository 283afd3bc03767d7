#include "deepscan/data/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <json.hpp>

#include "deepscan/data/split.hpp"
#include "deepscan/io/bytes.hpp"
#include "deepscan/io/mpi.hpp"
#include "deepscan/util/error.hpp"
#include "deepscan/util/random.hpp"

namespace deepscan::data {

namespace fs = std::filesystem;

void PairedSample::validate() const { io::require_same_geometry(source, target, "pair '" + name + "'"); }

std::vector<std::string> list_stems(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".mpi") stems.push_back(entry.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

std::vector<PairedSample> load_dataset(const fs::path& root) {
  const auto sources = list_stems(root / "source");
  const auto targets = list_stems(root / "target");
  std::vector<std::string> unmatched;
  std::set_symmetric_difference(sources.begin(), sources.end(), targets.begin(), targets.end(),
                                std::back_inserter(unmatched));
  if (!unmatched.empty()) {
    std::string list;
    for (const auto& s : unmatched) list += (list.empty() ? "" : ", ") + s;
    throw IoError("unpaired images in " + root.string() + ": " + list);
  }
  if (sources.empty()) throw IoError("no image pairs in " + root.string());
  std::vector<PairedSample> pairs;
  pairs.reserve(sources.size());
  for (const auto& stem : sources) {
    PairedSample p{io::read_mpi(root / "source" / (stem + ".mpi")), io::read_mpi(root / "target" / (stem + ".mpi")),
                   stem};
    p.validate();
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_split_manifest(const SplitManifest& manifest, const fs::path& path) {
  nlohmann::ordered_json j;
  j["seed"] = manifest.seed;
  j["test"] = manifest.test;
  j["train"] = manifest.train;
  io::write_text_file(path, j.dump(2) + "\n");
}

SplitManifest read_split_manifest(const fs::path& path) {
  const auto bytes = io::read_file(path);
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    SplitManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.test = j.at("test").get<std::vector<std::string>>();
    if (j.contains("train")) m.train = j["train"].get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("split manifest " + path.string() + ": " + e.what());
  }
}

PatchTrainingSet::PatchTrainingSet(std::span<const PairedSample> pairs, const NormalizationParams& input_norm,
                                   const NormalizationParams& target_norm, std::size_t patch_count,
                                   std::uint64_t seed) {
  if (pairs.empty()) throw RangeError("patch training set: no pairs");
  if (patch_count == 0) throw RangeError("patch training set: patch count must be positive");
  for (const auto& p : pairs) {
    p.validate();
    sources_.push_back(normalize(p.source, input_norm));
    targets_.push_back(normalize(p.target, target_norm));
  }
  Rng rng(stream_key(seed, 0xa7c0u));
  anchors_.reserve(patch_count);
  for (std::size_t i = 0; i < patch_count; ++i) {
    const auto image = static_cast<std::uint32_t>(rng.below(pairs.size()));
    const auto y = static_cast<std::uint32_t>(rng.below(pairs[image].source.height()));
    const auto x = static_cast<std::uint32_t>(rng.below(pairs[image].source.width()));
    anchors_.push_back({image, {y, x}});
  }
}

Batch PatchTrainingSet::batch(std::span<const std::size_t> indices) const {
  const std::size_t channels = sources_.front().channels();
  const std::size_t stride = channels * kPatchSize * kPatchSize;
  Batch b{nn::Tensor({indices.size(), channels, kPatchSize, kPatchSize}), nn::Tensor({indices.size(), channels})};
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& a = anchors_.at(indices[i]);
    extract_patch(sources_[a.image], a.pixel.y, a.pixel.x, b.inputs.data() + i * stride);
    for (std::size_t c = 0; c < channels; ++c) b.targets[i * channels + c] = targets_[a.image].at(c, a.pixel.y, a.pixel.x);
  }
  return b;
}

TileTrainingSet::TileTrainingSet(std::span<const PairedSample> pairs, const NormalizationParams& norm,
                                 std::size_t tile, std::size_t per_image, std::uint64_t seed) {
  std::vector<PairedSample> normalized;
  normalized.reserve(pairs.size());
  for (const auto& p : pairs) normalized.push_back({normalize(p.source, norm), normalize(p.target, norm), p.name});
  tiles_ = extract_tiles(normalized, tile, per_image, seed);
}

Batch TileTrainingSet::batch(std::span<const std::size_t> indices) const {
  nn::Shape shape = tiles_.sources.shape();
  const std::size_t stride = nn::element_count(shape) / shape[0];
  shape[0] = indices.size();
  Batch b{nn::Tensor(shape), nn::Tensor(shape)};
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t k = indices[i];
    if (k >= size()) throw RangeError("tile index out of range");
    std::memcpy(b.inputs.data() + i * stride, tiles_.sources.data() + k * stride, stride * sizeof(float));
    std::memcpy(b.targets.data() + i * stride, tiles_.targets.data() + k * stride, stride * sizeof(float));
  }
  return b;
}

}  // namespace deepscan::data
