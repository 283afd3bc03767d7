#include "deepscan/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "deepscan/data/dataset.hpp"
#include "deepscan/data/split.hpp"
#include "deepscan/io/mpi.hpp"
#include "deepscan/io/report.hpp"
#include "deepscan/metrics/metrics.hpp"
#include "deepscan/models/checkpoint.hpp"
#include "deepscan/models/predict.hpp"
#include "deepscan/optim/trainer.hpp"
#include "deepscan/sim/acquisition.hpp"
#include "deepscan/util/error.hpp"
#include "deepscan/util/parallel.hpp"
#include "deepscan/util/random.hpp"

namespace deepscan::cli {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kDefaultSeed = 42;

// Explicit flag, then DEEPSCAN_SEED, then the default.
std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t value) {
  if (opt->count() > 0) return value;
  if (const char* env = std::getenv("DEEPSCAN_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw RangeError(std::string("DEEPSCAN_SEED is not an unsigned integer: ") + env);
  }
  return kDefaultSeed;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---- simulate ----

struct SimulateArgs {
  fs::path out;
  fs::path manifest;
  std::size_t n = 4;
  std::size_t width = 512;
  std::size_t height = 512;
  std::size_t channels = 2;
  std::string mode = "power";
  double power_mw = 0.0;
  double ref_power_mw = 300.0;
  std::size_t frames_total = 70;
  std::size_t frames_used = 7;
  double brightness = 200.0;
  unsigned bits = 12;
  std::uint64_t seed = kDefaultSeed;
  CLI::Option* seed_opt = nullptr;
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
  auto* sub = app.add_subcommand("simulate", "Generate a paired synthetic dataset");
  sub->add_option("--out", a.out, "Dataset root to create")->required();
  sub->add_option("--manifest", a.manifest, "Take unset flags from an existing manifest.json")->check(CLI::ExistingFile);
  sub->add_option("--n", a.n, "Number of image pairs")->check(CLI::PositiveNumber);
  sub->add_option("--width", a.width, "Image width")->check(CLI::Range(16, 1 << 16));
  sub->add_option("--height", a.height, "Image height")->check(CLI::Range(16, 1 << 16));
  sub->add_option("--channels", a.channels, "Channels per image")->check(CLI::Range(1, 2));
  sub->add_option("--mode", a.mode, "Degradation regime")->check(CLI::IsMember({"power", "frames"}));
  sub->add_option("--power-mw", a.power_mw, "Power-mode source power (default 50) or frames-mode per-frame power (default 25), mW")
      ->check(CLI::PositiveNumber);
  sub->add_option("--ref-power-mw", a.ref_power_mw, "Reference and target power (mW)")->check(CLI::PositiveNumber);
  sub->add_option("--frames-total", a.frames_total, "Frames averaged for the target")->check(CLI::PositiveNumber);
  sub->add_option("--frames-used", a.frames_used, "Frames averaged for the source")->check(CLI::PositiveNumber);
  sub->add_option("--brightness", a.brightness, "Expected photons per pixel at reference power")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--bits", a.bits, "Photon-count ceiling in bits")->check(CLI::Range(1, 16));
  a.seed_opt = sub->add_option("--seed", a.seed, "Random seed (default: DEEPSCAN_SEED or 42)");
}

int cmd_simulate(CLI::App& sub, SimulateArgs& a, std::ostream& out, std::ostream& err) {
  sim::AcquisitionConfig config;
  std::size_t n = a.n, width = a.width, height = a.height, channels = a.channels;
  if (!a.manifest.empty()) {
    const auto m = sim::read_manifest(a.manifest);
    config = m.config;
    n = m.n_images;
    width = m.width;
    height = m.height;
    channels = m.channels;
  }
  auto set = [&](const char* flag, auto& field, const auto& value) {
    if (a.manifest.empty() || sub.count(flag) > 0) field = value;
  };
  sim::AcquisitionMode mode = *sim::parse_acquisition_mode(a.mode);
  set("--mode", config.mode, mode);
  if (a.manifest.empty() || sub.count("--mode") > 0) {
    config.power_mw = sim::AcquisitionConfig::defaults(config.mode).power_mw;
  }
  if (sub.count("--power-mw") > 0) config.power_mw = a.power_mw;
  set("--ref-power-mw", config.ref_power_mw, a.ref_power_mw);
  set("--frames-total", config.frames_total, a.frames_total);
  set("--frames-used", config.frames_used, a.frames_used);
  set("--brightness", config.brightness, a.brightness);
  set("--bits", config.bits, a.bits);
  set("--n", n, a.n);
  set("--width", width, a.width);
  set("--height", height, a.height);
  set("--channels", channels, a.channels);
  if (a.manifest.empty() || a.seed_opt->count() > 0) config.seed = resolve_seed(a.seed_opt, a.seed);
  config.validate();

  if (config.mode == sim::AcquisitionMode::frames && config.frames_used == config.frames_total) {
    err << "warning: frames-used equals frames-total; every source is identical to its target\n";
  }
  const auto summary = sim::make_paired_dataset(config, n, width, height, channels, a.out);
  out << "pairs=" << summary.pairs << "\n"
      << "mean_source=" << summary.mean_source << "\n"
      << "mean_target=" << summary.mean_target << "\n";
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string method;
  fs::path data;
  fs::path out;
  std::size_t epochs = 0;
  std::size_t steps = 0;
  std::size_t batch = 0;
  double lr = 0.0;
  std::uint64_t seed = kDefaultSeed;
  CLI::Option* seed_opt = nullptr;
  std::size_t test_count = 31;
  std::string loss;
  std::size_t tile = 128;
  std::size_t tiles_per_image = 8;
  std::size_t base_filters = 32;
  std::size_t patches = 200000;
  std::string head = "linear";
  fs::path loss_csv;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* sub = app.add_subcommand("train", "Train a restoration model on a dataset directory");
  sub->add_option("--method", a.method, "Model family")->required()->check(CLI::IsMember({"patches", "unet"}));
  sub->add_option("--data", a.data, "Dataset root with source/ and target/")->required()->check(CLI::ExistingDirectory);
  sub->add_option("--out", a.out, "Checkpoint path to write")->required();
  sub->add_option("--epochs", a.epochs, "Epochs (unet 100, patches 20)")->check(CLI::PositiveNumber);
  sub->add_option("--steps-per-epoch", a.steps, "Steps per epoch (unet 30, patches one pass)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--batch", a.batch, "Batch size (unet 16, patches 256)")->check(CLI::PositiveNumber);
  sub->add_option("--lr", a.lr, "Adam learning rate (unet 0.0004, patches 0.0001)")->check(CLI::PositiveNumber);
  a.seed_opt = sub->add_option("--seed", a.seed, "Random seed (default: DEEPSCAN_SEED or 42)");
  sub->add_option("--test-count", a.test_count, "Pairs held out for testing")->check(CLI::PositiveNumber);
  sub->add_option("--loss", a.loss, "Training loss (unet laplace, patches mse)")
      ->check(CLI::IsMember({"mse", "laplace"}));
  sub->add_option("--tile", a.tile, "U-Net training tile size")->check(CLI::PositiveNumber);
  sub->add_option("--tiles-per-image", a.tiles_per_image, "U-Net tiles cut per training image")
      ->check(CLI::PositiveNumber);
  sub->add_option("--base-filters", a.base_filters, "U-Net filters at the first level")->check(CLI::PositiveNumber);
  sub->add_option("--patches", a.patches, "Patch anchors sampled for the patch regressor")->check(CLI::PositiveNumber);
  sub->add_option("--head", a.head, "Patch regressor output activation")->check(CLI::IsMember({"linear", "relu"}));
  sub->add_option("--loss-csv", a.loss_csv, "Loss trace path (default: <out>.loss.csv)");
}

int cmd_train(TrainArgs& a, std::ostream& out) {
  const bool unet = a.method == "unet";
  const std::uint64_t seed = resolve_seed(a.seed_opt, a.seed);
  if (unet && a.tile % 4 != 0) throw RangeError("--tile must be divisible by 4");

  const auto pairs = data::load_dataset(a.data);
  const auto split = data::split_dataset(pairs.size(), a.test_count, seed);
  std::vector<std::size_t> train_idx = split.train, test_idx = split.test;
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::vector<data::PairedSample> train_pairs;
  std::vector<io::Image> train_sources, train_targets;
  data::SplitManifest manifest{seed, {}, {}};
  for (auto i : train_idx) {
    train_pairs.push_back(pairs[i]);
    train_sources.push_back(pairs[i].source);
    train_targets.push_back(pairs[i].target);
    manifest.train.push_back(pairs[i].name);
  }
  for (auto i : test_idx) manifest.test.push_back(pairs[i].name);
  const std::size_t channels = pairs.front().source.channels();

  optim::TrainConfig config;
  config.seed = stream_key(seed, 3);
  const auto input_norm = data::fit_normalization(train_sources);
  std::unique_ptr<data::TrainingSet> set;
  std::optional<models::Model> model;
  if (unet) {
    models::ResidualUNetConfig c;
    c.in_channels = channels;
    c.base_filters = a.base_filters;
    c.seed = stream_key(seed, 1);
    model.emplace(c);
    model->input_norm = input_norm;
    model->output_norm = input_norm;
    set = std::make_unique<data::TileTrainingSet>(train_pairs, input_norm, a.tile, a.tiles_per_image,
                                                  stream_key(seed, 2));
    config.epochs = a.epochs ? a.epochs : 100;
    config.steps_per_epoch = a.steps ? a.steps : 30;
    config.batch_size = a.batch ? a.batch : 16;
    config.adam.lr = a.lr > 0 ? a.lr : 4e-4;
    config.loss = optim::LossKind::laplace;
  } else {
    models::PatchRegressorConfig c;
    c.in_channels = channels;
    c.relu_head = a.head == "relu";
    c.seed = stream_key(seed, 1);
    model.emplace(c);
    model->input_norm = input_norm;
    model->output_norm = data::fit_normalization(train_targets);
    set = std::make_unique<data::PatchTrainingSet>(train_pairs, input_norm, *model->output_norm, a.patches,
                                                   stream_key(seed, 2));
    config.epochs = a.epochs ? a.epochs : 20;
    config.batch_size = a.batch ? a.batch : 256;
    config.steps_per_epoch = a.steps ? a.steps : (set->size() + config.batch_size - 1) / config.batch_size;
    config.adam.lr = a.lr > 0 ? a.lr : 1e-4;
    config.loss = optim::LossKind::mse;
  }
  if (!a.loss.empty()) config.loss = *optim::parse_loss_kind(a.loss);
  config.validate();

  double epoch_sum = 0.0;
  const auto trace = optim::train(model->net(), *set, config, [&](std::size_t step, double loss) {
    epoch_sum += loss;
    if ((step + 1) % config.steps_per_epoch == 0) {
      out << "epoch=" << (step + 1) / config.steps_per_epoch << " mean_loss=" << epoch_sum / config.steps_per_epoch
          << "\n";
      out.flush();
      epoch_sum = 0.0;
    }
  });

  const fs::path csv = a.loss_csv.empty() ? fs::path(a.out.string() + ".loss.csv") : a.loss_csv;
  const fs::path split_path = a.out.parent_path() / "split.json";
  if (!a.out.parent_path().empty()) fs::create_directories(a.out.parent_path());
  models::save_checkpoint(*model, a.out);
  optim::write_loss_csv(trace, csv);
  data::write_split_manifest(manifest, split_path);
  out << "checkpoint=" << a.out.string() << "\n"
      << "train_pairs=" << manifest.train.size() << " test_pairs=" << manifest.test.size() << "\n"
      << "steps=" << trace.size() << " final_loss=" << trace.back() << "\n";
  return 0;
}

// ---- predict ----

struct PredictArgs {
  fs::path model;
  fs::path input;
  fs::path output;
  fs::path split;
  std::size_t tile = 128;
  std::size_t overlap = 16;
};

void add_predict(CLI::App& app, PredictArgs& a) {
  auto* sub = app.add_subcommand("predict", "Restore an image (or a directory of images) with a checkpoint");
  sub->add_option("--model", a.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  sub->add_option("--input", a.input, "Input .mpi image or directory")->required()->check(CLI::ExistingPath);
  sub->add_option("--output", a.output, "Output .mpi image or directory")->required();
  sub->add_option("--split", a.split, "With a directory input, restrict to the test names of a split.json")
      ->check(CLI::ExistingFile);
  sub->add_option("--tile", a.tile, "U-Net tile size")->check(CLI::PositiveNumber);
  sub->add_option("--overlap", a.overlap, "U-Net tile overlap")->check(CLI::NonNegativeNumber);
}

io::Image run_prediction(const models::Model& model, const io::Image& image, const PredictArgs& a) {
  if (model.arch() == models::Arch::patches) return models::predict_patch_image(model, image);
  return models::predict_unet(model, image, a.tile, a.overlap);
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const auto model = models::load_checkpoint(a.model);
  double seconds = 0.0;
  if (fs::is_directory(a.input)) {
    auto stems = data::list_stems(a.input);
    if (!a.split.empty()) {
      const auto test = data::read_split_manifest(a.split).test;
      for (const auto& t : test) {
        if (!std::binary_search(stems.begin(), stems.end(), t)) throw IoError("split names missing image: " + t);
      }
      stems = test;
      std::sort(stems.begin(), stems.end());
    }
    fs::create_directories(a.output);
    for (const auto& stem : stems) {
      const auto image = io::read_mpi(a.input / (stem + ".mpi"));
      const auto start = Clock::now();
      const auto restored = run_prediction(model, image, a);
      seconds += seconds_since(start);
      io::write_mpi(restored, a.output / (stem + ".mpi"));
    }
    out << "images=" << stems.size() << "\n";
  } else {
    if (!a.split.empty()) throw RangeError("--split needs a directory --input");
    const auto image = io::read_mpi(a.input);
    const auto start = Clock::now();
    const auto restored = run_prediction(model, image, a);
    seconds = seconds_since(start);
    if (!a.output.parent_path().empty()) fs::create_directories(a.output.parent_path());
    io::write_mpi(restored, a.output);
  }
  out << "predict_seconds=" << seconds << "\n";
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  fs::path pred;
  fs::path gt;
  fs::path report;
  fs::path split;
  double ssim_l = 0.0;
  CLI::Option* ssim_opt = nullptr;
};

void add_evaluate(CLI::App& app, EvaluateArgs& a) {
  auto* sub = app.add_subcommand("evaluate", "MSE and SSIM of predictions against ground truth");
  sub->add_option("--pred", a.pred, "Directory of predicted .mpi images")->required()->check(CLI::ExistingDirectory);
  sub->add_option("--gt", a.gt, "Directory of ground-truth .mpi images")->required()->check(CLI::ExistingDirectory);
  sub->add_option("--report", a.report, "Report JSON to write")->required();
  sub->add_option("--split", a.split, "Evaluate only the test names of a split.json")->check(CLI::ExistingFile);
  a.ssim_opt = sub->add_option("--ssim-L", a.ssim_l, "SSIM dynamic range (default: ground-truth maximum)")
                   ->check(CLI::PositiveNumber);
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  std::vector<std::string> only;
  if (!a.split.empty()) only = data::read_split_manifest(a.split).test;
  const std::optional<double> range = a.ssim_opt->count() ? std::optional<double>(a.ssim_l) : std::nullopt;
  const auto report = metrics::evaluate_set(a.pred, a.gt, range, only);
  io::write_report(report, a.report);
  out << "images=" << report.images.size() << "\n";
  if (report.images.empty()) {
    out << "mean_mse=null\nmean_ssim=null\n";
  } else {
    out << "mean_mse=" << *report.mean_mse() << "\n" << "mean_ssim=" << *report.mean_ssim() << "\n";
  }
  return 0;
}

// ---- ensemble ----

struct EnsembleArgs {
  fs::path a;
  fs::path b;
  fs::path output;
};

void add_ensemble(CLI::App& app, EnsembleArgs& a) {
  auto* sub = app.add_subcommand("ensemble", "Pixelwise mean of two predictions");
  sub->add_option("--a", a.a, "First image or directory")->required()->check(CLI::ExistingPath);
  sub->add_option("--b", a.b, "Second image or directory")->required()->check(CLI::ExistingPath);
  sub->add_option("--output", a.output, "Output image or directory")->required();
}

int cmd_ensemble(const EnsembleArgs& a, std::ostream& out) {
  if (fs::is_directory(a.a) != fs::is_directory(a.b)) throw RangeError("--a and --b must both be files or directories");
  if (!fs::is_directory(a.a)) {
    io::write_mpi(metrics::ensemble_average(io::read_mpi(a.a), io::read_mpi(a.b)), a.output);
    out << "images=1\n";
    return 0;
  }
  const auto sa = data::list_stems(a.a), sb = data::list_stems(a.b);
  if (sa != sb) throw IoError("--a and --b directories hold different image names");
  fs::create_directories(a.output);
  for (const auto& stem : sa) {
    const auto name = stem + ".mpi";
    io::write_mpi(metrics::ensemble_average(io::read_mpi(a.a / name), io::read_mpi(a.b / name)), a.output / name);
  }
  out << "images=" << sa.size() << "\n";
  return 0;
}

// ---- bench ----

struct BenchArgs {
  fs::path model;
  fs::path input;
  fs::path report;
  std::size_t repeat = 5;
};

void add_bench(CLI::App& app, BenchArgs& a) {
  auto* sub = app.add_subcommand("bench", "Parameter count and median prediction time");
  sub->add_option("--model", a.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  sub->add_option("--input", a.input, "Input .mpi image")->required()->check(CLI::ExistingFile);
  sub->add_option("--repeat", a.repeat, "Timed repetitions (at least 1)");
  sub->add_option("--report", a.report, "Report JSON whose bench block is set (created if absent)");
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  if (a.repeat < 1) throw RangeError("--repeat must be at least 1");
  auto model = models::load_checkpoint(a.model);
  const auto image = io::read_mpi(a.input);
  std::vector<double> times;
  for (std::size_t i = 0; i < a.repeat; ++i) {
    const auto start = Clock::now();
    const auto restored = models::predict(model, image);
    times.push_back(seconds_since(start));
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  const double median = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
  const io::BenchInfo bench{models::count_params(model), median};
  out << "param_count=" << bench.param_count << "\n" << "predict_seconds=" << bench.predict_seconds << "\n";
  if (!a.report.empty()) {
    io::MetricReport report = fs::exists(a.report) ? io::read_report(a.report) : io::MetricReport{};
    report.bench = bench;
    io::write_report(report, a.report);
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Restoration of low-power and few-frame two-photon fluorescence images", "deepscan"};
  app.require_subcommand(1, 1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);

  SimulateArgs simulate;
  TrainArgs train;
  PredictArgs predict;
  EvaluateArgs evaluate;
  EnsembleArgs ensemble;
  BenchArgs bench;
  add_simulate(app, simulate);
  add_train(app, train);
  add_predict(app, predict);
  add_evaluate(app, evaluate);
  add_ensemble(app, ensemble);
  add_bench(app, bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  std::ostream::fmtflags flags = out.flags();
  out << std::setprecision(10);
  try {
    set_worker_count(threads);
    int code = 0;
    if (app.got_subcommand("simulate")) {
      code = cmd_simulate(*app.get_subcommand("simulate"), simulate, out, err);
    } else if (app.got_subcommand("train")) {
      code = cmd_train(train, out);
    } else if (app.got_subcommand("predict")) {
      code = cmd_predict(predict, out);
    } else if (app.got_subcommand("evaluate")) {
      code = cmd_evaluate(evaluate, out);
    } else if (app.got_subcommand("ensemble")) {
      code = cmd_ensemble(ensemble, out);
    } else if (app.got_subcommand("bench")) {
      code = cmd_bench(bench, out);
    }
    out.flags(flags);
    return code;
  } catch (const std::exception& e) {
    out.flags(flags);
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace deepscan::cli
