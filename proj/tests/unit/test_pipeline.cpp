#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sarlc/errors.hpp"
#include "sarlc/pipeline.hpp"
#include "test_support.hpp"
#include "doctest_torch.hpp"

using namespace sarlc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void dump(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// Two 256 px mosaics straddling the TEST band edge, with settings small
// enough for a unit test.
fs::path tiny_dataset(const fs::path& dir, const std::string& models = R"(["MOBILE_UNET", "SEGNET"])") {
  SyntheticDatasetSpec spec;
  spec.scenes = 2;
  spec.scene.width = 256;
  spec.scene.height = 256;
  spec.scene.centre_lon = 25.0;
  spec.scene.regions = 8;
  spec.scene.seed = 9;
  const auto cfg_path = write_synthetic_dataset(dir, spec);
  auto j = nlohmann::json::parse(slurp(cfg_path));
  j["sampling"] = {{"imagelet_px", 64}, {"per_mosaic_total", 6}, {"per_mosaic_test", 2}, {"per_mosaic_traindev", 4}};
  j["model"] = {{"width_scale", 0.125}, {"depth", "compact"}};
  j["train"] = {{"max_epochs", 2}, {"batch_size", 2}, {"learning_rate", 1e-3}};
  j["tiling"] = {{"tile_px", 128}, {"overlap_px", 32}};
  j["benchmark"] = {{"repetitions", 1}, {"imagelets", 2}};
  j["models"] = nlohmann::json::parse(models);
  dump(cfg_path, j.dump(2));
  return cfg_path;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SARLC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("run config: defaults, relative paths and strict keys") {
  testing::TempDir dir("cfg");
  const auto c = RunConfig::parse(R"({"scenes": [{"id": "A", "scene": "s/a.sarlc", "labels": "l/a.sarlc"}]})",
                                  dir.path());
  CHECK(c.variant == DatasetVariant::RgbSarRatio);
  CHECK(c.scenes.at(0).scene == dir.path() / "s/a.sarlc");
  CHECK(c.output_dir == dir.path() / "out");
  CHECK(c.manifest_path() == dir.path() / "out" / "manifest.txt");
  CHECK(c.models.size() == 7);
  CHECK(c.train.learning_rate == 1e-4);
  CHECK(c.sampling.imagelet_px == 512);
  CHECK_NOTHROW(c.validate());

  CHECK_THROWS_AS(RunConfig::parse(R"({"scens": []})", dir.path()), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse(R"({"train": {"lr": 1}})", dir.path()), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse(R"({"variant": "RGB"})", dir.path()), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse(R"({"models": ["UNET"]})", dir.path()), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("{", dir.path()), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("{}", dir.path()).validate(), ConfigError);
  CHECK_THROWS_AS(RunConfig::load(dir / "absent.json"), ConfigError);

  auto dup = RunConfig::parse(R"({"scenes": [{"id": "A", "scene": "a", "labels": "b"},
                                             {"id": "A", "scene": "c", "labels": "d"}]})",
                              dir.path());
  CHECK_THROWS_AS(dup.validate(), ConfigError);
}

TEST_CASE("run config: seeds, frozen form and overrides") {
  testing::TempDir dir("cfg2");
  auto c = RunConfig::parse(R"({"scenes": [{"id": "A", "scene": "a", "labels": "b"}], "seed": 42,
                                "model": {"width_scale": 0.5, "depth": "compact"},
                                "train": {"max_epochs": 7, "stop_at_dev_accuracy": 99}})",
                            dir.path());
  CHECK(c.seeds == RunSeeds::derive(42));
  CHECK(RunSeeds::derive(42) != RunSeeds::derive(43));
  const auto s = c.seeds;
  CHECK(s.sampling != s.init);
  CHECK(c.sampling_spec().rng_seed == s.sampling);
  CHECK(c.train_config().shuffle_seed == s.shuffle);
  CHECK(c.train_config().augment_seed == s.augment);
  const auto spec = c.spec_for(Architecture::PSPNet);
  CHECK(spec.name == Architecture::PSPNet);
  CHECK(spec.backbone == Backbone::ResNet101);
  CHECK(spec.width_scale == 0.5);
  CHECK(spec.depth == Depth::Compact);
  CHECK(spec.init_seed == s.init);

  const auto frozen = c.to_json();
  const auto back = RunConfig::parse(frozen, "/elsewhere");
  CHECK(back.to_json() == frozen);
  CHECK(back.seeds == c.seeds);
  CHECK(back.train.stop_at_dev_accuracy == c.train.stop_at_dev_accuracy);

  CHECK((parse_model_list("SEGNET,FC_DENSENET") ==
        std::vector<Architecture>{Architecture::SegNet, Architecture::FCDenseNet}));
  CHECK_THROWS_AS(parse_model_list("SEGNET,NOPE"), ConfigError);
  CHECK(parse_device("cpu") == torch::Device(torch::kCPU));
  CHECK_THROWS_AS(parse_device("tpu"), ConfigError);
}

TEST_CASE("synthetic scenes are deterministic and contain every class") {
  SyntheticSpec s;
  s.width = 128;
  s.height = 96;
  s.nodata_corner_px = 8;
  s.with_dem = true;
  s.seed = 3;
  const auto a = make_synthetic_scene(s);
  const auto b = make_synthetic_scene(s);
  CHECK(a.scene.vv == b.scene.vv);
  CHECK(a.labels.codes == b.labels.codes);
  CHECK(a.scene.dem.has_value());
  std::set<int> seen;
  for (auto v : a.labels.codes.data()) seen.insert(v);
  CHECK(seen.size() == 6);  // five classes and the nodata corner
  CHECK(a.scene.nodata(0, 0) == 1);
  CHECK(a.labels.codes(7, 7) == kNodataLabel);
  CHECK(a.scene.nodata(8, 8) == 0);
  const auto c = pixel_to_lonlat(a.scene.geometry, 64, 48);
  CHECK(c.lon == doctest::Approx(s.centre_lon).epsilon(1e-6));
  CHECK(c.lat == doctest::Approx(s.centre_lat).epsilon(1e-6));
  s.regions = 2;
  CHECK_THROWS_AS(make_synthetic_scene(s), ConfigError);
}

TEST_CASE("prepare caches stacks and recomputes when the stretch changes") {
  testing::TempDir dir("prep");
  auto c = RunConfig::load(tiny_dataset(dir.path()));
  start_run(c);
  CHECK(fs::exists(c.output_dir / "run_config.json"));
  auto first = cmd_prepare(c);
  CHECK(first.computed == 2);
  CHECK(first.cache_hits == 0);
  auto again = cmd_prepare(c);
  CHECK(again.computed == 0);
  CHECK(again.cache_hits == 2);

  const auto store = load_scenes(c);
  CHECK(store.size() == 2);
  const auto direct = compose_stack(load_scene(c.scenes[0].scene), c.variant, c.stretch);
  CHECK(store.at("S01").stack.channels == direct.channels);
  CHECK(store.at("S01").stack.bounds[0].lo == direct.bounds[0].lo);

  c.stretch.upper_pct = 99.0;
  CHECK(cmd_prepare(c).computed == 2);

  fs::remove(c.scenes[1].labels);
  try {
    cmd_prepare(c);
    FAIL("missing label file accepted");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("scene S02") != std::string::npos);
  }
}

TEST_CASE("sampling through the pipeline is reproducible") {
  testing::TempDir dir("sample");
  auto c = RunConfig::load(tiny_dataset(dir.path()));
  const auto m = cmd_sample(c);
  CHECK(m.count(Split::Test) == 4);
  CHECK(m.count(Split::Train) + m.count(Split::Dev) == 8);
  const auto first = slurp(c.manifest_path());
  cmd_sample(c);
  CHECK(slurp(c.manifest_path()) == first);
  auto other = c;
  other.apply_master_seed(99);
  cmd_sample(other);
  CHECK(slurp(c.manifest_path()) != first);
}

TEST_CASE("benchmark-all emits one row per model and resumes completed ones") {
  testing::TempDir dir("bench");
  auto c = RunConfig::load(tiny_dataset(dir.path()));
  start_run(c);
  const auto t = cmd_benchmark_all(c);
  REQUIRE(t.rows.size() == 2);
  for (const auto& r : t.rows) {
    CAPTURE(to_string(r.arch));
    CHECK(r.ok);
    CHECK(r.metrics.overall_accuracy.has_value());
    CHECK(r.seconds_per_image > 0.0);
    CHECK(r.train.stop_epoch >= 1);
    CHECK(fs::exists(RunPaths(c).checkpoint(r.arch)));
    CHECK(fs::exists(RunPaths(c).model_dir(r.arch) / "history.csv"));
    CHECK(fs::exists(RunPaths(c).model_dir(r.arch) / "confusion.csv"));
  }
  const auto csv = slurp(c.output_dir / "benchmark" / "table.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("urban_UA,urban_PA") != std::string::npos);
  CHECK(fs::exists(c.output_dir / "benchmark" / "table.txt"));

  const auto ckpt_time = fs::last_write_time(RunPaths(c).checkpoint(Architecture::SegNet));
  const auto resumed = cmd_benchmark_all(c, true);
  CHECK(resumed.rows.at(0).train.resumed);
  CHECK(resumed.rows.at(1).train.resumed);
  CHECK(fs::last_write_time(RunPaths(c).checkpoint(Architecture::SegNet)) == ckpt_time);
  CHECK(resumed.rows.at(1).metrics.overall_accuracy == t.rows.at(1).metrics.overall_accuracy);

  const auto maps = cmd_predict(c, Architecture::MobileUNet);
  REQUIRE(maps.size() == 2);
  const auto mask = load_labels(maps[0]);
  CHECK(mask.geometry == load_scene(c.scenes[0].scene).geometry);
  CHECK(fs::exists(maps[0].parent_path() / "S01.png"));
}

TEST_CASE("a failing model is isolated in the table") {
  testing::TempDir dir("isolate");
  auto c = RunConfig::load(tiny_dataset(dir.path(), R"(["MOBILE_UNET"])"));
  // 48 px is not a multiple of 32: every model fails, the run still finishes.
  c.sampling.imagelet_px = 48;
  const auto t = cmd_benchmark_all(c);
  REQUIRE(t.rows.size() == 1);
  CHECK_FALSE(t.rows[0].ok);
  CHECK(t.rows[0].error.find("multiples of 32") != std::string::npos);
  std::ostringstream txt;
  write_benchmark_text(txt, t);
  CHECK(txt.str().find("FAILED") != std::string::npos);
}

TEST_CASE("CLI exit codes") {
  testing::TempDir dir("cli");
  const auto cfg = tiny_dataset(dir.path(), R"(["MOBILE_UNET"])");
  CHECK(run_cli("prepare --config " + cfg.string()) == 0);
  CHECK(run_cli("sample --config " + cfg.string() + " --seed 5") == 0);
  CHECK(fs::exists(dir / "out" / "manifest.txt"));
  const auto frozen = nlohmann::json::parse(slurp(dir / "out" / "run_config.json"));
  CHECK(frozen["seed"] == 5);

  // --output wins over the environment and the config.
  CHECK(run_cli("sample --config " + cfg.string() + " --output " + (dir / "elsewhere").string()) == 0);
  CHECK(fs::exists(dir / "elsewhere" / "manifest.txt"));
  setenv("SARLC_OUTPUT_DIR", (dir / "from_env").c_str(), 1);
  CHECK(run_cli("sample --config " + cfg.string()) == 0);
  unsetenv("SARLC_OUTPUT_DIR");
  CHECK(fs::exists(dir / "from_env" / "manifest.txt"));

  CHECK(run_cli("sample --config " + (dir / "none.json").string()) == 2);
  CHECK(run_cli("train --config " + cfg.string() + " --models NOPE") == 2);
  CHECK(run_cli("train --config " + cfg.string() + " --device tpu") == 2);

  auto j = nlohmann::json::parse(slurp(cfg));
  j["sampling"]["per_mosaic_total"] = 200;
  j["sampling"]["per_mosaic_test"] = 80;
  j["sampling"]["per_mosaic_traindev"] = 120;
  dump(dir / "capacity.json", j.dump());
  CHECK(run_cli("sample --config " + (dir / "capacity.json").string()) == 4);

  j = nlohmann::json::parse(slurp(cfg));
  j["scenes"][0]["scene"] = "scenes/missing.sarlc";
  dump(dir / "missing.json", j.dump());
  CHECK(run_cli("prepare --config " + (dir / "missing.json").string()) == 3);

  j = nlohmann::json::parse(slurp(cfg));
  j["train"]["learning_rate"] = 1e30;
  j["output_dir"] = "diverge";
  dump(dir / "diverge.json", j.dump());
  CHECK(run_cli("train --config " + (dir / "diverge.json").string()) == 5);
}
