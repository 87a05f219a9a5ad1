#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <torch/types.h>

#include "sarlc/models.hpp"
#include "sarlc/predict.hpp"
#include "sarlc/preprocess.hpp"
#include "sarlc/sampler.hpp"
#include "sarlc/trainer.hpp"

namespace sarlc {

struct SceneEntry {
  std::string id;
  std::filesystem::path scene;
  std::filesystem::path labels;
  friend bool operator==(const SceneEntry&, const SceneEntry&) = default;
};

struct RunSeeds {
  std::uint64_t sampling = 1;
  std::uint64_t init = 2;
  std::uint64_t shuffle = 3;
  std::uint64_t augment = 4;
  // All four from one master seed.
  static RunSeeds derive(std::uint64_t master);
  friend bool operator==(const RunSeeds&, const RunSeeds&) = default;
};

struct BenchmarkSettings {
  int repetitions = 3;
  int imagelets = 8;  // TEST imagelets timed per architecture
};

// One declarative run: data, sampling, preprocessing, models, training and
// inference settings. Relative paths resolve against the config file's
// directory.
struct RunConfig {
  DatasetVariant variant = DatasetVariant::RgbSarRatio;
  std::vector<SceneEntry> scenes;
  std::optional<std::filesystem::path> aggregation;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> manifest;  // default <output_dir>/manifest.txt
  SamplingSpec sampling;
  StretchSpec stretch;
  ArchitectureSpec model;  // name ignored; the template for every entry of `models`
  std::vector<Architecture> models{kAllArchitectures.begin(), kAllArchitectures.end()};
  TrainConfig train;
  TilingPlan tiling;
  RunSeeds seeds;
  std::optional<std::uint64_t> master_seed;
  std::string device = "cpu";
  BenchmarkSettings benchmark;
  int eval_batch_size = 4;

  static RunConfig load(const std::filesystem::path& path);
  static RunConfig parse(const std::string& json_text, const std::filesystem::path& base_dir);
  // Full config with absolute paths and the resolved seeds.
  std::string to_json() const;

  void validate() const;  // throws ConfigError
  void apply_master_seed(std::uint64_t seed);

  std::filesystem::path manifest_path() const;
  ArchitectureSpec spec_for(Architecture a) const;
  TrainConfig train_config() const;  // train with the run seeds applied
  SamplingSpec sampling_spec() const;
};

// "cpu", "cuda" or "cuda:N"; ConfigError if unavailable.
torch::Device parse_device(const std::string& s);

// Comma-separated architecture names.
std::vector<Architecture> parse_model_list(const std::string& s);

}  // namespace sarlc
