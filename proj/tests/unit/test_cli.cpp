#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "deepscan/cli.hpp"
#include "deepscan/data/dataset.hpp"
#include "deepscan/io/mpi.hpp"
#include "deepscan/io/report.hpp"
#include "deepscan/models/checkpoint.hpp"
#include "deepscan/models/model.hpp"
#include "deepscan/sim/acquisition.hpp"
#include "random_tensor.hpp"
#include "temp_dir.hpp"

namespace fs = std::filesystem;
using namespace deepscan;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "deepscan");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// Small power-mode dataset; the default 512x512 two-channel scene is too slow here.
fs::path small_dataset(const std::string& name, std::size_t n, std::size_t size = 32,
                       const std::string& mode = "power") {
  const auto root = testing::fresh_dir(name);
  const auto r = run_cli({"simulate", "--out", root.string(), "--n", std::to_string(n), "--width",
                      std::to_string(size), "--height", std::to_string(size), "--channels", "1", "--mode", mode});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  return root;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate writes pairs and a manifest with the power defaults") {
  const auto root = small_dataset("cli_sim", 4, 16);
  CHECK(std::distance(fs::directory_iterator(root / "source"), fs::directory_iterator{}) == 4);
  CHECK(std::distance(fs::directory_iterator(root / "target"), fs::directory_iterator{}) == 4);
  const auto m = sim::read_manifest(root / "manifest.json");
  CHECK(m.n_images == 4);
  CHECK(m.config.power_mw == 50.0);
  CHECK(m.config.ref_power_mw == 300.0);
}

TEST_CASE("simulate prints the dataset summary") {
  const auto root = testing::fresh_dir("cli_sim_summary");
  const auto r = run_cli({"simulate", "--out", root.string(), "--n", "2", "--width", "16", "--height", "16"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("pairs=2\n") != std::string::npos);
  CHECK(r.out.find("mean_source=") != std::string::npos);
  CHECK(r.out.find("mean_target=") != std::string::npos);
}

TEST_CASE("frames-used equal to frames-total warns about identical pairs") {
  const auto root = testing::fresh_dir("cli_sim_frames");
  const auto r = run_cli({"simulate", "--out", root.string(), "--n", "1", "--width", "16", "--height", "16",
                      "--channels", "1", "--mode", "frames", "--frames-used", "70"});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("warning:") != std::string::npos);
  CHECK(slurp(root / "source" / "img00000.mpi") == slurp(root / "target" / "img00000.mpi"));
}

TEST_CASE("simulate reruns are byte-identical and the seed falls back to DEEPSCAN_SEED") {
  const auto a = small_dataset("cli_det_a", 3, 16);
  const auto b = small_dataset("cli_det_b", 3, 16);
  for (const char* sub : {"source", "target"}) {
    for (const auto& e : fs::directory_iterator(a / sub)) {
      CHECK(slurp(e.path()) == slurp(b / sub / e.path().filename()));
    }
  }
  CHECK(sim::read_manifest(a / "manifest.json").config.seed == 42);

  ::setenv("DEEPSCAN_SEED", "7", 1);
  const auto c = small_dataset("cli_det_env", 1, 16);
  CHECK(sim::read_manifest(c / "manifest.json").config.seed == 7);
  ::setenv("DEEPSCAN_SEED", "seven", 1);
  const auto bad = run_cli({"simulate", "--out", testing::fresh_dir("cli_det_bad").string(), "--n", "1"});
  CHECK(bad.code != 0);
  CHECK(bad.err.rfind("error: ", 0) == 0);
  ::unsetenv("DEEPSCAN_SEED");
}

TEST_CASE("simulate reads unset flags from a manifest") {
  const auto a = small_dataset("cli_manifest_a", 2, 16);
  const auto b = testing::fresh_dir("cli_manifest_b");
  const auto r = run_cli({"simulate", "--out", b.string(), "--manifest", (a / "manifest.json").string()});
  REQUIRE(r.code == 0);
  CHECK(slurp(a / "source" / "img00001.mpi") == slurp(b / "source" / "img00001.mpi"));
}

TEST_CASE("flag errors abort before side effects") {
  const auto root = testing::fresh_dir("cli_errors") / "never";
  auto r = run_cli({"simulate", "--out", root.string(), "--mode", "bright"});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: ", 0) == 0);
  CHECK_FALSE(fs::exists(root));

  r = run_cli({"simulate", "--out", root.string(), "--frobnicate", "1"});
  CHECK(r.code != 0);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK_FALSE(fs::exists(root));

  r = run_cli({});
  CHECK(r.code != 0);

  r = run_cli({"train", "--method", "resnet", "--data", ".", "--out", "x.mpck"});
  CHECK(r.code != 0);
}

TEST_CASE("unwritable output directory is an error") {
  const auto file = testing::fresh_dir("cli_unwritable") / "plain";
  std::ofstream(file) << "x";
  const auto r = run_cli({"simulate", "--out", (file / "sub").string(), "--n", "1", "--width", "16", "--height", "16"});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: ", 0) == 0);
}

TEST_CASE("unet defaults train 100 epochs of 30 steps") {
  const auto ds = small_dataset("cli_train_defaults", 6, 16);
  const auto ckpt = ds / "run" / "unet.mpck";
  const auto r = run_cli({"train", "--method", "unet", "--data", ds.string(), "--out", ckpt.string(), "--test-count",
                      "2", "--tile", "16", "--base-filters", "2", "--batch", "2"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto csv = slurp(fs::path(ckpt.string() + ".loss.csv"));
  CHECK(count_lines(csv) == 3001);
  CHECK(csv.rfind("step,loss\n", 0) == 0);
  CHECK(r.out.find("steps=3000") != std::string::npos);
  CHECK(r.out.find("epoch=100 ") != std::string::npos);
}

TEST_CASE("train is deterministic and writes the split manifest") {
  const auto ds = small_dataset("cli_train_det", 8, 32);
  auto train = [&](const std::string& name, const std::string& method) {
    const auto ckpt = ds / name / "model.mpck";
    std::vector<std::string> args{"train", "--method", method, "--data", ds.string(), "--out", ckpt.string(),
                                  "--test-count", "3", "--epochs", "2", "--steps-per-epoch", "3", "--batch", "4"};
    if (method == "unet") {
      for (const char* a : {"--tile", "16", "--base-filters", "4"}) args.push_back(a);
    } else {
      for (const char* a : {"--patches", "64"}) args.push_back(a);
    }
    const auto r = run_cli(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return ckpt;
  };
  for (const std::string method : {"unet", "patches"}) {
    const auto a = train(method + "_a", method);
    const auto b = train(method + "_b", method);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a.string() + ".loss.csv") == slurp(b.string() + ".loss.csv"));
    const auto split = data::read_split_manifest(a.parent_path() / "split.json");
    CHECK(split.train.size() == 5);
    CHECK(split.test.size() == 3);
    CHECK(count_lines(slurp(a.string() + ".loss.csv")) == 7);
  }
}

TEST_CASE("1200 pairs with 31 held out train on 1169") {
  const auto ds = small_dataset("cli_split_1200", 1200, 16);
  const auto ckpt = ds / "run" / "unet.mpck";
  const auto r = run_cli({"train", "--method", "unet", "--data", ds.string(), "--out", ckpt.string(), "--test-count",
                      "31", "--epochs", "1", "--steps-per-epoch", "1", "--batch", "2", "--tile", "16",
                      "--base-filters", "2"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("train_pairs=1169 test_pairs=31") != std::string::npos);
  CHECK(data::read_split_manifest(ckpt.parent_path() / "split.json").train.size() == 1169);
}

TEST_CASE("train on a directory without pairs is an error") {
  const auto empty = testing::fresh_dir("cli_train_empty");
  fs::create_directories(empty / "source");
  fs::create_directories(empty / "target");
  const auto r = run_cli({"train", "--method", "unet", "--data", empty.string(), "--out", (empty / "m.mpck").string()});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: ", 0) == 0);
}

TEST_CASE("identity U-Net checkpoint predicts its input") {
  const auto dir = testing::fresh_dir("cli_identity");
  auto model = models::build_residual_unet(2, 4, 5);
  models::save_checkpoint(model, dir / "id.mpck");
  const auto image = testing::random_image(40, 24, 2, 3);
  io::write_mpi(image, dir / "in.mpi");
  const auto r = run_cli({"predict", "--model", (dir / "id.mpck").string(), "--input", (dir / "in.mpi").string(),
                      "--output", (dir / "out.mpi").string(), "--tile", "16", "--overlap", "4"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(slurp(dir / "in.mpi") == slurp(dir / "out.mpi"));
  CHECK(r.out.rfind("predict_seconds=", 0) == 0);
  CHECK(std::stod(r.out.substr(16)) >= 0.0);
}

TEST_CASE("predict rejects a channel mismatch") {
  const auto dir = testing::fresh_dir("cli_mismatch");
  auto model = models::build_residual_unet(2, 4, 5);
  models::save_checkpoint(model, dir / "m.mpck");
  io::write_mpi(testing::random_image(16, 16, 1, 3), dir / "in.mpi");
  const auto r = run_cli({"predict", "--model", (dir / "m.mpck").string(), "--input", (dir / "in.mpi").string(),
                      "--output", (dir / "out.mpi").string()});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: ", 0) == 0);
}

TEST_CASE("predict and evaluate over a directory and its split") {
  const auto ds = small_dataset("cli_dir_flow", 5, 16);
  auto model = models::build_residual_unet(1, 4, 5);
  models::save_checkpoint(model, ds / "id.mpck");
  data::write_split_manifest({42, {"img00000", "img00001", "img00002"}, {"img00003", "img00004"}}, ds / "split.json");
  auto r = run_cli({"predict", "--model", (ds / "id.mpck").string(), "--input", (ds / "source").string(), "--output",
                (ds / "pred").string(), "--split", (ds / "split.json").string(), "--tile", "16", "--overlap", "4"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.rfind("images=2\n", 0) == 0);

  r = run_cli({"evaluate", "--pred", (ds / "pred").string(), "--gt", (ds / "target").string(), "--report",
           (ds / "report.json").string(), "--split", (ds / "split.json").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto report = io::read_report(ds / "report.json");
  REQUIRE(report.images.size() == 2);
  CHECK(report.images[0].name == "img00003");
}

TEST_CASE("evaluate of a directory against itself") {
  const auto ds = small_dataset("cli_eval_self", 3, 16);
  const auto r = run_cli({"evaluate", "--pred", (ds / "target").string(), "--gt", (ds / "target").string(),
                      "--report", (ds / "self.json").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("images=3\n") != std::string::npos);
  CHECK(r.out.find("mean_mse=0\n") != std::string::npos);
  CHECK(r.out.find("mean_ssim=1\n") != std::string::npos);
}

TEST_CASE("evaluate names an unmatched stem") {
  const auto ds = small_dataset("cli_eval_unmatched", 2, 16);
  fs::copy_file(ds / "source" / "img00000.mpi", ds / "source" / "stray.mpi");
  const auto r = run_cli({"evaluate", "--pred", (ds / "source").string(), "--gt", (ds / "target").string(),
                      "--report", (ds / "r.json").string()});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: ", 0) == 0);
  CHECK(r.err.find("stray") != std::string::npos);
  CHECK(count_lines(r.err) == 1);
}

TEST_CASE("ensemble averages two images") {
  const auto dir = testing::fresh_dir("cli_ensemble");
  auto a = io::Image::float32(2, 1, 1);
  auto b = io::Image::float32(2, 1, 1);
  a.samples()[0] = 0.0f;
  a.samples()[1] = 4.0f;
  b.samples()[0] = 2.0f;
  b.samples()[1] = 8.0f;
  io::write_mpi(a, dir / "a.mpi");
  io::write_mpi(b, dir / "b.mpi");
  auto r = run_cli({"ensemble", "--a", (dir / "a.mpi").string(), "--b", (dir / "b.mpi").string(), "--output",
                (dir / "m.mpi").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto m = io::read_mpi(dir / "m.mpi");
  CHECK(m.samples()[0] == 1.0f);
  CHECK(m.samples()[1] == 6.0f);

  io::write_mpi(io::Image::float32(3, 1, 1), dir / "c.mpi");
  r = run_cli({"ensemble", "--a", (dir / "a.mpi").string(), "--b", (dir / "c.mpi").string(), "--output",
           (dir / "bad.mpi").string()});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: ", 0) == 0);
}

TEST_CASE("bench reports the parameter count and a median timing") {
  const auto dir = testing::fresh_dir("cli_bench");
  auto unet = models::build_residual_unet(1, 4, 5);
  models::save_checkpoint(unet, dir / "u.mpck");
  io::write_mpi(testing::random_image(16, 16, 1, 9), dir / "in.mpi");

  auto r = run_cli({"bench", "--model", (dir / "u.mpck").string(), "--input", (dir / "in.mpi").string(), "--repeat", "0"});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: ", 0) == 0);

  r = run_cli({"bench", "--model", (dir / "u.mpck").string(), "--input", (dir / "in.mpi").string(), "--repeat", "5",
           "--report", (dir / "bench.json").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.rfind("param_count=" + std::to_string(models::count_params(unet)) + "\n", 0) == 0);
  const auto report = io::read_report(dir / "bench.json");
  REQUIRE(report.bench.has_value());
  CHECK(report.bench->param_count == models::count_params(unet));
  CHECK(report.bench->predict_seconds > 0.0);
}

TEST_CASE("default patch regressor has at least ten times the U-Net parameters") {
  auto patches = models::build_patch_regressor(2);
  auto unet = models::build_residual_unet(2);
  CHECK(models::count_params(patches) >= 10 * models::count_params(unet));
}

}  // TEST_SUITE
