#include "deepscan/models/model.hpp"

#include <cstdio>
#include <sstream>

#include "deepscan/util/error.hpp"

namespace deepscan::models {
namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename V, typename F>
std::string join(const std::vector<V>& values, F format) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format(values[i]);
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(item);
  return out;
}

const std::string& require(const Hyper& h, const std::string& key) {
  auto it = h.find(key);
  if (it == h.end()) throw FormatError("checkpoint hyperparameters lack '" + key + "'");
  return it->second;
}

std::uint64_t to_uint(const Hyper& h, const std::string& key) {
  const auto& text = require(h, key);
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw FormatError("hyperparameter '" + key + "' is not an unsigned integer: " + text);
  }
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw FormatError("hyperparameter '" + key + "' holds a non-number: " + item);
    }
  }
  return out;
}

void put_norm(Hyper& h, const std::string& prefix, const std::optional<data::NormalizationParams>& n) {
  if (!n) return;
  h[prefix + "_lo"] = join(n->lo, format_double);
  h[prefix + "_hi"] = join(n->hi, format_double);
}

std::optional<data::NormalizationParams> get_norm(const Hyper& h, const std::string& prefix) {
  const auto lo = h.find(prefix + "_lo");
  const auto hi = h.find(prefix + "_hi");
  if (lo == h.end() && hi == h.end()) return std::nullopt;
  if (lo == h.end() || hi == h.end()) throw FormatError("checkpoint has half of the " + prefix + " normalization");
  data::NormalizationParams n{to_doubles(lo->first, lo->second), to_doubles(hi->first, hi->second)};
  n.validate();
  return n;
}

}  // namespace

std::string_view to_string(Arch arch) { return arch == Arch::patches ? "patches" : "unet"; }

std::optional<Arch> parse_arch(std::string_view text) {
  if (text == "patches") return Arch::patches;
  if (text == "unet") return Arch::unet;
  return std::nullopt;
}

Model::Model(PatchRegressorConfig config)
    : arch_(Arch::patches), net_(std::make_unique<PatchRegressor<float>>(std::move(config))) {}

Model::Model(ResidualUNetConfig config)
    : arch_(Arch::unet), net_(std::make_unique<ResidualUNet<float>>(std::move(config))) {}

PatchRegressor<float>* Model::patches() noexcept { return dynamic_cast<PatchRegressor<float>*>(net_.get()); }
const PatchRegressor<float>* Model::patches() const noexcept {
  return dynamic_cast<const PatchRegressor<float>*>(net_.get());
}
ResidualUNet<float>* Model::unet() noexcept { return dynamic_cast<ResidualUNet<float>*>(net_.get()); }
const ResidualUNet<float>* Model::unet() const noexcept { return dynamic_cast<const ResidualUNet<float>*>(net_.get()); }

std::size_t Model::in_channels() const noexcept {
  return arch_ == Arch::patches ? patches()->config().in_channels : unet()->config().in_channels;
}

Hyper Model::hyper() const {
  Hyper h;
  if (arch_ == Arch::patches) {
    const auto& c = patches()->config();
    h["in_channels"] = std::to_string(c.in_channels);
    h["patch"] = std::to_string(c.patch);
    h["conv1_filters"] = std::to_string(c.conv1_filters);
    h["conv1_kernel"] = std::to_string(c.conv1_kernel);
    h["conv2_filters"] = std::to_string(c.conv2_filters);
    h["conv2_kernel"] = std::to_string(c.conv2_kernel);
    h["hidden"] = join(c.hidden, [](std::size_t v) { return std::to_string(v); });
    h["head"] = c.relu_head ? "relu" : "linear";
    h["seed"] = std::to_string(c.seed);
  } else {
    const auto& c = unet()->config();
    h["in_channels"] = std::to_string(c.in_channels);
    h["base_filters"] = std::to_string(c.base_filters);
    h["depth"] = std::to_string(c.depth);
    h["kernel"] = std::to_string(c.kernel);
    h["seed"] = std::to_string(c.seed);
  }
  put_norm(h, "input_norm", input_norm);
  put_norm(h, "output_norm", output_norm);
  return h;
}

Model Model::from_hyper(Arch arch, const Hyper& h) {
  auto build = [&]() -> Model {
    if (arch == Arch::patches) {
      PatchRegressorConfig c;
      c.in_channels = to_uint(h, "in_channels");
      c.patch = to_uint(h, "patch");
      c.conv1_filters = to_uint(h, "conv1_filters");
      c.conv1_kernel = to_uint(h, "conv1_kernel");
      c.conv2_filters = to_uint(h, "conv2_filters");
      c.conv2_kernel = to_uint(h, "conv2_kernel");
      c.hidden.clear();
      for (const auto& item : split_list(require(h, "hidden"))) {
        c.hidden.push_back(to_uint({{"hidden", item}}, "hidden"));
      }
      const auto& head = require(h, "head");
      if (head != "relu" && head != "linear") throw FormatError("unknown head '" + head + "'");
      c.relu_head = head == "relu";
      c.seed = to_uint(h, "seed");
      return Model(c);
    }
    ResidualUNetConfig c;
    c.in_channels = to_uint(h, "in_channels");
    c.base_filters = to_uint(h, "base_filters");
    c.depth = to_uint(h, "depth");
    c.kernel = to_uint(h, "kernel");
    c.seed = to_uint(h, "seed");
    return Model(c);
  };
  Model m = build();
  m.input_norm = get_norm(h, "input_norm");
  m.output_norm = get_norm(h, "output_norm");
  return m;
}

Model build_patch_regressor(std::size_t in_channels, bool relu_head, std::uint64_t seed) {
  PatchRegressorConfig c;
  c.in_channels = in_channels;
  c.relu_head = relu_head;
  c.seed = seed;
  return Model(c);
}

Model build_residual_unet(std::size_t in_channels, std::size_t base_filters, std::uint64_t seed) {
  ResidualUNetConfig c;
  c.in_channels = in_channels;
  c.base_filters = base_filters;
  c.seed = seed;
  return Model(c);
}

std::size_t count_params(Model& model) {
  std::size_t n = 0;
  for (const auto& p : model.net().params()) n += p.value->size();
  return n;
}

std::size_t count_params(const std::vector<nn::LayerSpec>& specs) {
  std::size_t n = 0;
  for (const auto& s : specs) n += nn::param_count(s);
  return n;
}

}  // namespace deepscan::models
