#include "sarlc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <torch/cuda.h>

#include "sarlc/errors.hpp"
#include "sarlc/random.hpp"

namespace sarlc {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

RunSeeds RunSeeds::derive(std::uint64_t master) {
  RunSeeds s;
  s.sampling = hash_combine(master, 1);
  s.init = hash_combine(master, 2);
  s.shuffle = hash_combine(master, 3);
  s.augment = hash_combine(master, 4);
  return s;
}

namespace {

// Rejects keys outside `allowed`, so typos fail loudly.
void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  return (base / p).lexically_normal();
}

}  // namespace

RunConfig RunConfig::parse(const std::string& json_text, const fs::path& base_dir) {
  RunConfig c;
  try {
    const json j = json::parse(json_text);
    check_keys(j, "config", {"variant", "scenes", "aggregation", "output_dir", "manifest", "sampling", "stretch",
                             "model", "models", "train", "tiling", "seeds", "seed", "device", "benchmark",
                             "eval_batch_size"});
    if (j.contains("variant")) c.variant = parse_dataset_variant(j["variant"].get<std::string>());
    if (j.contains("scenes")) {
      for (const auto& s : j["scenes"]) {
        check_keys(s, "scenes[]", {"id", "scene", "labels"});
        c.scenes.push_back({s.at("id").get<std::string>(), resolve(base_dir, s.at("scene").get<std::string>()),
                            resolve(base_dir, s.at("labels").get<std::string>())});
      }
    }
    if (j.contains("aggregation") && !j["aggregation"].is_null()) {
      c.aggregation = resolve(base_dir, j["aggregation"].get<std::string>());
    }
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    c.output_dir = resolve(base_dir, c.output_dir);
    if (j.contains("manifest") && !j["manifest"].is_null()) {
      c.manifest = resolve(base_dir, j["manifest"].get<std::string>());
    }
    if (j.contains("sampling")) {
      const auto& s = j["sampling"];
      check_keys(s, "sampling", {"imagelet_px", "per_mosaic_total", "per_mosaic_test", "per_mosaic_traindev",
                                 "test_lon_min", "test_lon_max", "train_fraction_of_traindev",
                                 "attempt_budget_factor", "max_nodata_fraction"});
      auto& p = c.sampling;
      read(s, "imagelet_px", p.imagelet_px);
      read(s, "per_mosaic_total", p.per_mosaic_total);
      read(s, "per_mosaic_test", p.per_mosaic_test);
      read(s, "per_mosaic_traindev", p.per_mosaic_traindev);
      read(s, "test_lon_min", p.test_lon_min);
      read(s, "test_lon_max", p.test_lon_max);
      read(s, "train_fraction_of_traindev", p.train_fraction_of_traindev);
      read(s, "attempt_budget_factor", p.attempt_budget_factor);
      read(s, "max_nodata_fraction", p.max_nodata_fraction);
    }
    if (j.contains("stretch")) {
      const auto& s = j["stretch"];
      check_keys(s, "stretch", {"lower_pct", "upper_pct", "out_min", "out_max"});
      read(s, "lower_pct", c.stretch.lower_pct);
      read(s, "upper_pct", c.stretch.upper_pct);
      read(s, "out_min", c.stretch.out_min);
      read(s, "out_max", c.stretch.out_max);
    }
    if (j.contains("model")) {
      const auto& m = j["model"];
      check_keys(m, "model", {"width_scale", "depth", "num_classes", "pretrained_encoder"});
      read(m, "width_scale", c.model.width_scale);
      read(m, "num_classes", c.model.num_classes);
      if (m.contains("depth")) c.model.depth = parse_depth(m["depth"].get<std::string>());
      if (m.contains("pretrained_encoder") && !m["pretrained_encoder"].is_null()) {
        c.model.pretrained_encoder = resolve(base_dir, m["pretrained_encoder"].get<std::string>());
      }
    }
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j["models"]) c.models.push_back(parse_architecture(m.get<std::string>()));
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      check_keys(t, "train", {"learning_rate", "beta1", "beta2", "patience_epochs", "max_epochs", "batch_size",
                              "augment", "stop_at_dev_accuracy"});
      read(t, "learning_rate", c.train.learning_rate);
      read(t, "beta1", c.train.beta1);
      read(t, "beta2", c.train.beta2);
      read(t, "patience_epochs", c.train.patience_epochs);
      read(t, "max_epochs", c.train.max_epochs);
      read(t, "batch_size", c.train.batch_size);
      read(t, "augment", c.train.augment);
      if (t.contains("stop_at_dev_accuracy") && !t["stop_at_dev_accuracy"].is_null()) {
        c.train.stop_at_dev_accuracy = t["stop_at_dev_accuracy"].get<double>();
      }
    }
    if (j.contains("tiling")) {
      const auto& t = j["tiling"];
      check_keys(t, "tiling", {"tile_px", "overlap_px"});
      read(t, "tile_px", c.tiling.tile_px);
      read(t, "overlap_px", c.tiling.overlap_px);
    }
    if (j.contains("seeds")) {
      const auto& s = j["seeds"];
      check_keys(s, "seeds", {"sampling", "init", "shuffle", "augment"});
      read(s, "sampling", c.seeds.sampling);
      read(s, "init", c.seeds.init);
      read(s, "shuffle", c.seeds.shuffle);
      read(s, "augment", c.seeds.augment);
    }
    // A master seed replaces the individual ones.
    if (j.contains("seed") && !j["seed"].is_null()) c.apply_master_seed(j["seed"].get<std::uint64_t>());
    read(j, "device", c.device);
    if (j.contains("benchmark")) {
      const auto& b = j["benchmark"];
      check_keys(b, "benchmark", {"repetitions", "imagelets"});
      read(b, "repetitions", c.benchmark.repetitions);
      read(b, "imagelets", c.benchmark.imagelets);
    }
    read(j, "eval_batch_size", c.eval_batch_size);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const SpecError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const InputError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), fs::absolute(path).parent_path());
}

std::string RunConfig::to_json() const {
  ojson j;
  j["variant"] = to_string(variant);
  j["scenes"] = ojson::array();
  for (const auto& s : scenes) {
    j["scenes"].push_back({{"id", s.id}, {"scene", fs::absolute(s.scene).string()},
                           {"labels", fs::absolute(s.labels).string()}});
  }
  j["aggregation"] = aggregation ? ojson(fs::absolute(*aggregation).string()) : ojson(nullptr);
  j["output_dir"] = fs::absolute(output_dir).string();
  j["manifest"] = fs::absolute(manifest_path()).string();
  const auto sp = sampling_spec();
  j["sampling"] = {{"imagelet_px", sp.imagelet_px},
                   {"per_mosaic_total", sp.per_mosaic_total},
                   {"per_mosaic_test", sp.per_mosaic_test},
                   {"per_mosaic_traindev", sp.per_mosaic_traindev},
                   {"test_lon_min", sp.test_lon_min},
                   {"test_lon_max", sp.test_lon_max},
                   {"train_fraction_of_traindev", sp.train_fraction_of_traindev},
                   {"attempt_budget_factor", sp.attempt_budget_factor},
                   {"max_nodata_fraction", sp.max_nodata_fraction}};
  j["stretch"] = {{"lower_pct", stretch.lower_pct},
                  {"upper_pct", stretch.upper_pct},
                  {"out_min", stretch.out_min},
                  {"out_max", stretch.out_max}};
  j["model"] = {{"width_scale", model.width_scale},
                {"depth", to_string(model.depth)},
                {"num_classes", model.num_classes},
                {"pretrained_encoder",
                 model.pretrained_encoder ? ojson(fs::absolute(*model.pretrained_encoder).string()) : ojson(nullptr)}};
  j["models"] = ojson::array();
  for (auto a : models) j["models"].push_back(to_string(a));
  j["train"] = {{"learning_rate", train.learning_rate},
                {"beta1", train.beta1},
                {"beta2", train.beta2},
                {"patience_epochs", train.patience_epochs},
                {"max_epochs", train.max_epochs},
                {"batch_size", train.batch_size},
                {"augment", train.augment},
                {"stop_at_dev_accuracy",
                 train.stop_at_dev_accuracy ? ojson(*train.stop_at_dev_accuracy) : ojson(nullptr)}};
  j["tiling"] = {{"tile_px", tiling.tile_px}, {"overlap_px", tiling.overlap_px}};
  j["seeds"] = {{"sampling", seeds.sampling}, {"init", seeds.init}, {"shuffle", seeds.shuffle},
                {"augment", seeds.augment}};
  j["seed"] = master_seed ? ojson(*master_seed) : ojson(nullptr);
  j["device"] = device;
  j["benchmark"] = {{"repetitions", benchmark.repetitions}, {"imagelets", benchmark.imagelets}};
  j["eval_batch_size"] = eval_batch_size;
  return j.dump(2) + "\n";
}

void RunConfig::validate() const {
  if (scenes.empty()) throw ConfigError("config lists no scenes");
  std::set<std::string> ids;
  for (const auto& s : scenes) {
    if (s.id.empty()) throw ConfigError("scene id must not be empty");
    if (s.id.find_first_of(" \t\n/\\") != std::string::npos) {
      throw ConfigError("scene id '" + s.id + "' contains whitespace or a path separator");
    }
    if (!ids.insert(s.id).second) throw ConfigError("duplicate scene id " + s.id);
  }
  if (models.empty()) throw ConfigError("config lists no models");
  if (eval_batch_size < 1) throw ConfigError("eval_batch_size must be at least 1");
  if (benchmark.repetitions < 1 || benchmark.imagelets < 1) {
    throw ConfigError("benchmark repetitions and imagelets must be at least 1");
  }
  sampling_spec().validate();
  stretch.validate();
  train_config().validate();
  tiling.validate();
  try {
    spec_for(models.front()).validate();
  } catch (const SpecError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  parse_device(device);
}

void RunConfig::apply_master_seed(std::uint64_t seed) {
  master_seed = seed;
  seeds = RunSeeds::derive(seed);
}

fs::path RunConfig::manifest_path() const { return manifest ? *manifest : output_dir / "manifest.txt"; }

ArchitectureSpec RunConfig::spec_for(Architecture a) const {
  ArchitectureSpec s = ArchitectureSpec::make(a, model.width_scale, model.depth);
  s.num_classes = model.num_classes;
  s.pretrained_encoder = model.pretrained_encoder;
  s.init_seed = seeds.init;
  return s;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.shuffle_seed = seeds.shuffle;
  t.augment_seed = seeds.augment;
  return t;
}

SamplingSpec RunConfig::sampling_spec() const {
  SamplingSpec s = sampling;
  s.rng_seed = seeds.sampling;
  return s;
}

torch::Device parse_device(const std::string& s) {
  if (s == "cpu") return torch::kCPU;
  if (s.rfind("cuda", 0) == 0) {
    if (!torch::cuda::is_available()) throw ConfigError("device " + s + " requested but CUDA is not available");
    try {
      return torch::Device(s);
    } catch (const c10::Error&) {
      throw ConfigError("bad device " + s);
    }
  }
  throw ConfigError("unknown device '" + s + "' (expected cpu, cuda or cuda:N)");
}

std::vector<Architecture> parse_model_list(const std::string& s) {
  std::vector<Architecture> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    try {
      out.push_back(parse_architecture(item));
    } catch (const SpecError& e) {
      throw ConfigError(e.what());
    }
  }
  if (out.empty()) throw ConfigError("empty model list");
  return out;
}

}  // namespace sarlc
