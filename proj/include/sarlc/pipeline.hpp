#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sarlc/config.hpp"
#include "sarlc/data.hpp"
#include "sarlc/evaluate.hpp"
#include "sarlc/synthetic.hpp"

namespace sarlc {

// Output layout under RunConfig::output_dir:
//   run_config.json                      frozen config with resolved seeds
//   cache/<scene>.stack|.labels|.json    prepared channel stacks
//   manifest.txt
//   models/<ARCH>/checkpoint.pt, history.csv, status.json,
//                 metrics.txt, metrics.csv, confusion.csv
//   maps/<ARCH>/<scene>.mask, <scene>.png
//   benchmark/table.csv, table.txt, inference.txt
struct RunPaths {
  std::filesystem::path root;
  explicit RunPaths(const RunConfig& c) : root(c.output_dir) {}
  std::filesystem::path frozen_config() const { return root / "run_config.json"; }
  std::filesystem::path cache_dir() const { return root / "cache"; }
  std::filesystem::path model_dir(Architecture a) const { return root / "models" / to_string(a); }
  std::filesystem::path checkpoint(Architecture a) const { return model_dir(a) / "checkpoint.pt"; }
  std::filesystem::path map_dir(Architecture a) const { return root / "maps" / to_string(a); }
  std::filesystem::path benchmark_dir() const { return root / "benchmark"; }
};

// Creates the output directory and writes the frozen config.
void start_run(const RunConfig& config);

struct PrepareSummary {
  int cache_hits = 0;
  int computed = 0;
};

// Materializes every scene's channel stack and aggregated labels. A scene is
// recomputed only when the stretch, variant, aggregation or an input file
// (path, size, mtime) changed.
PrepareSummary cmd_prepare(const RunConfig& config);

// Prepares as needed, then loads all stacks.
SceneStore load_scenes(const RunConfig& config);

DatasetManifest cmd_sample(const RunConfig& config);
// The manifest on disk, sampled first if absent.
DatasetManifest load_or_sample(const RunConfig& config);

struct TrainResult {
  int best_epoch = 0;
  int stop_epoch = 0;
  std::string stop_reason;
  bool resumed = false;  // a completed checkpoint was reused
  std::int64_t params = 0;
};

// With resume, a model whose status records a finished run is not retrained.
TrainResult cmd_train(const RunConfig& config, Architecture arch, bool resume = false);

struct EvaluationResult {
  MetricsReport report;
  ConfusionMatrix confusion;
};

EvaluationResult cmd_evaluate(const RunConfig& config, Architecture arch);

// Whole-scene maps for every configured scene; returns the mask paths.
std::vector<std::filesystem::path> cmd_predict(const RunConfig& config, Architecture arch);

struct BenchmarkRow {
  Architecture arch = Architecture::SegNet;
  bool ok = false;
  std::string error;
  TrainResult train;
  MetricsReport metrics;
  double seconds_per_image = 0.0;
  bool high_variance = false;
};

struct BenchmarkTable {
  std::string hardware;
  std::vector<BenchmarkRow> rows;
};

// Trains (or with resume reuses), evaluates and times each configured model.
// A failing model is recorded in its row and the run continues.
BenchmarkTable cmd_benchmark_all(const RunConfig& config, bool resume = false);

void write_benchmark_csv(std::ostream& out, const BenchmarkTable& t);
// Models as columns, per-class UA/PA, OA, kappa and s/image as rows.
void write_benchmark_text(std::ostream& out, const BenchmarkTable& t);

struct SyntheticDatasetSpec {
  int scenes = 7;
  SyntheticSpec scene;  // seed and latitude vary per scene
  // Centre latitude of the first scene and the step between scenes.
  double first_lat = 61.0;
  double lat_step = 0.5;
};

// Writes scenes/, labels/ and a desk-scale config.json into `dir`; returns
// the config path.
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticDatasetSpec& spec);

}  // namespace sarlc
