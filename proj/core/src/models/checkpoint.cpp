#include "deepscan/models/checkpoint.hpp"

#include <cstring>
#include <map>
#include <sstream>
#include <string>

#include "deepscan/io/bytes.hpp"
#include "deepscan/util/error.hpp"

namespace deepscan::models {
namespace {

constexpr char kMagic[4] = {'M', 'P', 'C', 'K'};

std::string hyper_text(const Hyper& h) {
  std::string out;
  for (const auto& [k, v] : h) out += k + "=" + v + "\n";
  return out;
}

Hyper parse_hyper(const std::string& text) {
  Hyper h;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint hyperparameter line without '=': " + line);
    h[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return h;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(Model& model) {
  std::vector<std::pair<std::string, const nn::Tensor*>> tensors;
  for (const auto& p : model.net().params()) tensors.emplace_back(p.name, p.value);
  for (const auto& b : model.net().buffers()) {
    if (b.has_value()) tensors.emplace_back(b.name, b.value);
  }

  io::ByteWriter w;
  w.raw({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
  w.u32(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(model.arch()));
  const std::string hyper = hyper_text(model.hyper());
  w.u32(static_cast<std::uint32_t>(hyper.size()));
  w.text(hyper);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.text(name);
    w.u8(0);
    w.u8(static_cast<std::uint8_t>(t->rank()));
    for (auto d : t->shape()) w.u32(static_cast<std::uint32_t>(d));
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(t->data());
    if constexpr (std::endian::native == std::endian::little) {
      w.raw({bytes, t->size() * sizeof(float)});
    } else {
      for (float v : t->values()) w.f32(v);
    }
  }
  return std::move(w.bytes());
}

Model decode_checkpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (!r.need(4) || std::memcmp(bytes.data(), kMagic, 4) != 0) throw BadMagicError("checkpoint: bad magic");
  r.text(4);
  auto header = [&](std::size_t n, const char* what) {
    if (!r.need(n)) throw TruncatedError(std::string("checkpoint: truncated ") + what);
  };
  header(4, "header");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint: version " + std::to_string(version) + " unsupported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  header(5, "header");
  const std::uint8_t arch_id = r.u8();
  if (arch_id != 1 && arch_id != 2) throw FormatError("checkpoint: unknown architecture id " + std::to_string(arch_id));
  const std::uint32_t hyper_len = r.u32();
  header(hyper_len, "hyperparameter block");
  Model model = Model::from_hyper(static_cast<Arch>(arch_id), parse_hyper(r.text(hyper_len)));

  std::map<std::string, nn::Tensor*> slots;
  std::map<std::string, bool*> flags;
  for (const auto& p : model.net().params()) slots[p.name] = p.value;
  for (const auto& b : model.net().buffers()) {
    slots[b.name] = b.value;
    flags[b.name] = b.present;
  }
  std::map<std::string, bool> seen;

  header(4, "tensor count");
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    header(2, "tensor header");
    const std::uint16_t name_len = r.u16();
    header(name_len, "tensor name");
    const std::string name = r.text(name_len);
    auto entry = [&](std::size_t n) {
      if (!r.need(n)) throw TruncatedError("checkpoint: truncated header of tensor '" + name + "'");
    };
    entry(2);
    const std::uint8_t dtype = r.u8();
    if (dtype != 0) throw FormatError("checkpoint: tensor '" + name + "' has unsupported dtype " + std::to_string(dtype));
    const std::uint8_t rank = r.u8();
    entry(4u * rank);
    nn::Shape shape(rank);
    for (auto& d : shape) d = r.u32();

    auto slot = slots.find(name);
    if (slot == slots.end()) throw FormatError("checkpoint: unknown tensor '" + name + "'");
    if (seen[name]) throw FormatError("checkpoint: duplicate tensor '" + name + "'");
    seen[name] = true;
    const bool is_buffer = flags.contains(name);
    if (!is_buffer || !slot->second->empty()) {
      nn::require_same_shape(slot->second->shape(), shape, "checkpoint tensor '" + name + "'");
    }
    const std::size_t n = nn::element_count(shape);
    if (!r.need(n * sizeof(float))) throw TruncatedError("checkpoint: truncated tensor data for '" + name + "'");
    std::vector<float> values(n);
    for (auto& v : values) v = r.f32();
    *slot->second = nn::Tensor(shape, std::move(values));
  }
  for (const auto& [name, slot] : slots) {
    if (!seen[name] && !flags.contains(name)) throw FormatError("checkpoint: missing tensor '" + name + "'");
  }
  // Running moments come in pairs; a layer is ready only with both.
  for (const auto& [name, flag] : flags) {
    if (flag) *flag = false;
  }
  for (const auto& [name, flag] : flags) {
    if (!flag) continue;
    const auto stem = name.substr(0, name.rfind('.'));
    const bool both = seen[stem + ".running_mean"] && seen[stem + ".running_var"];
    if (seen[name] && !both) throw FormatError("checkpoint: incomplete running moments for '" + stem + "'");
    *flag = both;
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes after the last tensor");
  return model;
}

void save_checkpoint(Model& model, const std::filesystem::path& path) { io::write_file(path, encode_checkpoint(model)); }

Model load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace deepscan::models
