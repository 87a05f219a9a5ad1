#include "sarlc/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "sarlc/benchmark.hpp"
#include "sarlc/errors.hpp"
#include "sarlc/log.hpp"
#include "sarlc/predict.hpp"
#include "sarlc/random.hpp"
#include "sarlc/trainer.hpp"

namespace sarlc {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << text;
    if (!out) throw InputError("write failed: " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::string file_stamp(const fs::path& p) {
  std::error_code ec;
  const auto size = fs::file_size(p, ec);
  if (ec) throw InputError("missing input file " + p.string());
  const auto mtime = fs::last_write_time(p, ec).time_since_epoch().count();
  return fs::absolute(p).string() + "|" + std::to_string(size) + "|" + std::to_string(mtime);
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::string cache_key(const RunConfig& c, const SceneEntry& e) {
  std::ostringstream s;
  s.precision(17);
  s << "v1|" << to_string(c.variant) << '|' << c.stretch.lower_pct << '|' << c.stretch.upper_pct << '|'
    << c.stretch.out_min << '|' << c.stretch.out_max << '|' << file_stamp(e.scene) << '|' << file_stamp(e.labels)
    << '|' << (c.aggregation ? file_stamp(*c.aggregation) : std::string("none"));
  return hex(fnv1a64(s.str()));
}

struct CacheFiles {
  fs::path stack, labels, meta;
};

CacheFiles cache_files(const RunConfig& c, const std::string& id) {
  const auto dir = RunPaths(c).cache_dir();
  return {dir / (id + ".stack"), dir / (id + ".labels"), dir / (id + ".json")};
}

bool cache_valid(const CacheFiles& f, const std::string& key) {
  if (!fs::exists(f.meta) || !fs::exists(f.stack) || !fs::exists(f.labels)) return false;
  try {
    return json::parse(read_text(f.meta)).at("key").get<std::string>() == key;
  } catch (const std::exception&) {
    return false;
  }
}

// Runs `fn` and prefixes errors with the scene they concern.
template <typename Fn>
auto for_scene(const std::string& id, Fn&& fn) {
  try {
    return fn();
  } catch (const CapacityError&) {
    throw;
  } catch (const InputError& e) {
    throw InputError("scene " + id + ": " + e.what());
  } catch (const EmptyBandError& e) {
    throw InputError("scene " + id + ": " + e.what());
  }
}

void write_stack(const fs::path& path, const ChannelStack& s) {
  RasterFile r;
  r.header.geometry = s.geometry;
  r.header.dtype = SampleType::UInt8;
  r.header.band_names = {"C1", "C2", "C3", "NODATA"};
  r.header.dataset_tag = to_string(s.variant);
  for (std::size_t c = 0; c < 4; ++c) {
    Grid<double> band(s.height(), s.width());
    const auto& src = c < 3 ? s.channels[c] : s.nodata;
    for (std::size_t i = 0; i < band.size(); ++i) band[i] = src.empty() ? 0.0 : src[i];
    r.bands.push_back(std::move(band));
  }
  write_raster(path, r);
}

ChannelStack read_stack(const fs::path& path, const json& meta) {
  const RasterFile r = read_raster(path);
  if (r.bands.size() != 4) throw InputError(path.string() + ": cached stack must have 4 bands");
  ChannelStack s;
  s.variant = parse_dataset_variant(meta.at("variant").get<std::string>());
  s.geometry = r.header.geometry;
  for (std::size_t c = 0; c < 4; ++c) {
    Grid<std::uint8_t> g(s.height(), s.width());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<std::uint8_t>(r.bands[c][i]);
    if (c < 3) {
      s.channels[c] = std::move(g);
    } else {
      s.nodata = std::move(g);
    }
  }
  const auto& b = meta.at("bounds");
  for (std::size_t c = 0; c < 3; ++c) s.bounds[c] = {b.at(c).at(0).get<double>(), b.at(c).at(1).get<double>()};
  return s;
}

std::string status_path_text(const TrainResult& r, const std::string& state) {
  ojson j;
  j["state"] = state;
  j["best_epoch"] = r.best_epoch;
  j["stop_epoch"] = r.stop_epoch;
  j["stop_reason"] = r.stop_reason;
  j["params"] = r.params;
  return j.dump(2) + "\n";
}

Network load_trained(const RunConfig& c, Architecture a) {
  const auto ckpt = RunPaths(c).checkpoint(a);
  if (!fs::exists(ckpt)) throw InputError("no checkpoint for " + to_string(a) + " at " + ckpt.string());
  Network net = load_checkpoint(ckpt);
  net.to(parse_device(c.device));
  return net;
}

std::string fmt(const std::optional<double>& v, int digits) {
  if (!v) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << *v;
  return s.str();
}

}  // namespace

void start_run(const RunConfig& config) {
  config.validate();
  const RunPaths p(config);
  fs::create_directories(p.root);
  write_text_atomic(p.frozen_config(), config.to_json());
}

PrepareSummary cmd_prepare(const RunConfig& config) {
  config.validate();
  PrepareSummary summary;
  std::optional<ClassAggregation> agg;
  if (config.aggregation) agg = read_aggregation(*config.aggregation);
  for (const auto& e : config.scenes) {
    for_scene(e.id, [&] {
      if (!fs::exists(e.scene)) throw InputError("scene file not found: " + e.scene.string());
      if (!fs::exists(e.labels)) throw InputError("label file not found: " + e.labels.string());
      const auto key = cache_key(config, e);
      const auto files = cache_files(config, e.id);
      if (cache_valid(files, key)) {
        log::info("prepare", "cache hit " + e.id);
        ++summary.cache_hits;
        return 0;
      }
      RasterScene scene = load_scene(e.scene);
      LabelMask labels = load_labels(e.labels, agg ? &*agg : nullptr);
      check_pairing(scene, labels);
      ChannelStack stack = compose_stack(scene, config.variant, config.stretch);
      fs::create_directories(files.stack.parent_path());
      write_stack(files.stack, stack);
      write_labels(files.labels, labels);
      ojson meta;
      meta["key"] = key;
      meta["variant"] = to_string(config.variant);
      meta["bounds"] = ojson::array();
      for (const auto& b : stack.bounds) meta["bounds"].push_back({b.lo, b.hi});
      meta["coerced_labels"] = labels.coerced;
      write_text_atomic(files.meta, meta.dump(2) + "\n");
      log::info("prepare", "computed " + e.id + " (" + std::to_string(stack.width()) + "x" +
                               std::to_string(stack.height()) + ")");
      ++summary.computed;
      return 0;
    });
  }
  return summary;
}

SceneStore load_scenes(const RunConfig& config) {
  cmd_prepare(config);
  SceneStore store;
  for (const auto& e : config.scenes) {
    for_scene(e.id, [&] {
      const auto files = cache_files(config, e.id);
      const json meta = json::parse(read_text(files.meta));
      SceneData d{read_stack(files.stack, meta), load_labels(files.labels)};
      store.emplace(e.id, std::move(d));
      return 0;
    });
  }
  return store;
}

DatasetManifest cmd_sample(const RunConfig& config) {
  const SceneStore store = load_scenes(config);
  std::vector<Mask> masks;
  masks.reserve(config.scenes.size());
  std::vector<SceneFootprint> footprints;
  for (const auto& e : config.scenes) {
    const auto& d = store.at(e.id);
    Mask m(d.stack.height(), d.stack.width(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = (!d.stack.nodata.empty() && d.stack.nodata[i]) || d.labels.codes[i] == kNodataLabel;
    }
    masks.push_back(std::move(m));
    footprints.push_back({e.id, d.stack.geometry, &masks.back()});
  }
  DatasetManifest manifest = build_manifest(footprints, config.sampling_spec(), config.variant);
  write_manifest(config.manifest_path(), manifest);
  log::info("sample", "manifest " + config.manifest_path().string() + ": TRAIN " +
                          std::to_string(manifest.count(Split::Train)) + ", DEV " +
                          std::to_string(manifest.count(Split::Dev)) + ", TEST " +
                          std::to_string(manifest.count(Split::Test)));
  return manifest;
}

DatasetManifest load_or_sample(const RunConfig& config) {
  if (fs::exists(config.manifest_path())) return read_manifest(config.manifest_path());
  return cmd_sample(config);
}

TrainResult cmd_train(const RunConfig& config, Architecture arch, bool resume) {
  const RunPaths paths(config);
  const auto status_file = paths.model_dir(arch) / "status.json";
  if (resume && fs::exists(status_file) && fs::exists(paths.checkpoint(arch))) {
    const json s = json::parse(read_text(status_file));
    if (s.value("state", "") == "complete") {
      TrainResult r;
      r.best_epoch = s.value("best_epoch", 0);
      r.stop_epoch = s.value("stop_epoch", 0);
      r.stop_reason = s.value("stop_reason", "");
      r.params = s.value("params", std::int64_t{0});
      r.resumed = true;
      log::info("train", to_string(arch) + ": completed checkpoint reused");
      return r;
    }
  }
  const SceneStore store = load_scenes(config);
  const DatasetManifest manifest = load_or_sample(config);
  const int px = manifest.spec.imagelet_px;
  ManifestSource train_set(store, manifest.split(Split::Train), px);
  ManifestSource dev_set(store, manifest.split(Split::Dev), px);

  Network net = build(config.spec_for(arch));
  net.to(parse_device(config.device));
  net.check_input_size(px, px);
  fs::create_directories(paths.model_dir(arch));
  TrainResult r;
  r.params = net.param_count();
  write_text_atomic(status_file, status_path_text(r, "running"));
  log::info("train", to_string(arch) + ": " + std::to_string(r.params) + " parameters, " +
                         std::to_string(train_set.size()) + " TRAIN / " + std::to_string(dev_set.size()) +
                         " DEV imagelets");
  TrainHistory h;
  try {
    h = train(net, train_set, dev_set, config.train_config(), paths.checkpoint(arch));
  } catch (const DivergenceError&) {
    write_text_atomic(status_file, status_path_text(r, "diverged"));
    throw;
  }
  write_history_csv(paths.model_dir(arch) / "history.csv", h);
  r.best_epoch = h.best_epoch;
  r.stop_epoch = h.stop_epoch;
  r.stop_reason = h.stop_reason;
  write_text_atomic(status_file, status_path_text(r, "complete"));
  return r;
}

EvaluationResult cmd_evaluate(const RunConfig& config, Architecture arch) {
  Network net = load_trained(config, arch);
  const SceneStore store = load_scenes(config);
  const DatasetManifest manifest = load_or_sample(config);
  auto pred = predict_manifest(net, manifest, Split::Test, store, config.eval_batch_size, false);
  const double pixel_size = store.begin()->second.stack.geometry.pixel_size;
  EvaluationResult out{report(pred.confusion, default_codebook(), pixel_size), pred.confusion};
  const auto dir = RunPaths(config).model_dir(arch);
  std::ostringstream txt, csv, conf;
  write_report_text(txt, out.report);
  write_report_csv(csv, out.report);
  write_confusion_csv(conf, out.confusion);
  write_text_atomic(dir / "metrics.txt", txt.str());
  write_text_atomic(dir / "metrics.csv", csv.str());
  write_text_atomic(dir / "confusion.csv", conf.str());
  log::info("evaluate", to_string(arch) + ": OA " + fmt(out.report.overall_accuracy, 2) + ", kappa " +
                            fmt(out.report.kappa, 3));
  return out;
}

std::vector<fs::path> cmd_predict(const RunConfig& config, Architecture arch) {
  Network net = load_trained(config, arch);
  const SceneStore store = load_scenes(config);
  const auto dir = RunPaths(config).map_dir(arch);
  fs::create_directories(dir);
  std::vector<fs::path> out;
  for (const auto& e : config.scenes) {
    for_scene(e.id, [&] {
      const LabelMask mask = predict_stack(net, store.at(e.id).stack, config.tiling, config.eval_batch_size);
      const auto path = dir / (e.id + ".mask");
      write_labels(path, mask);
      write_png(dir / (e.id + ".png"), render_map(mask));
      out.push_back(path);
      log::info("predict", to_string(arch) + ": wrote " + path.string());
      return 0;
    });
  }
  return out;
}

BenchmarkTable cmd_benchmark_all(const RunConfig& config, bool resume) {
  BenchmarkTable table;
  table.hardware = hardware_descriptor();
  // Data problems are not per-model failures; surface them once.
  const SceneStore store = load_scenes(config);
  const DatasetManifest manifest = load_or_sample(config);
  const auto test = manifest.split(Split::Test);
  std::vector<Imagelet> timing_set;
  {
    ManifestSource src(store, test, manifest.spec.imagelet_px);
    for (std::size_t i = 0; i < src.size() && static_cast<int>(i) < config.benchmark.imagelets; ++i) {
      timing_set.push_back(src.get(i));
    }
  }
  for (Architecture a : config.models) {
    BenchmarkRow row;
    row.arch = a;
    try {
      row.train = cmd_train(config, a, resume);
      row.metrics = cmd_evaluate(config, a).report;
      if (!timing_set.empty()) {
        Network net = load_trained(config, a);
        const auto t = benchmark_inference(net, timing_set, config.benchmark.repetitions);
        row.seconds_per_image = t.seconds_per_image;
        row.high_variance = t.high_variance;
      }
      row.ok = true;
    } catch (const c10::Error& e) {
      row.error = e.what_without_backtrace();
      log::error("benchmark", to_string(a) + " failed: " + row.error);
    } catch (const std::exception& e) {
      row.error = e.what();
      log::error("benchmark", to_string(a) + " failed: " + row.error);
    }
    table.rows.push_back(std::move(row));
  }
  const auto dir = RunPaths(config).benchmark_dir();
  std::ostringstream csv, txt, inf;
  write_benchmark_csv(csv, table);
  write_benchmark_text(txt, table);
  InferenceReport ir;
  ir.hardware = table.hardware;
  for (const auto& r : table.rows) {
    if (!r.ok) continue;
    InferenceTiming t;
    t.name = to_string(r.arch);
    t.seconds_per_image = r.seconds_per_image;
    t.repetitions = config.benchmark.repetitions;
    t.high_variance = r.high_variance;
    ir.timings.push_back(t);
  }
  write_inference_report(inf, ir);
  write_text_atomic(dir / "table.csv", csv.str());
  write_text_atomic(dir / "table.txt", txt.str());
  write_text_atomic(dir / "inference.txt", inf.str());
  return table;
}

void write_benchmark_csv(std::ostream& out, const BenchmarkTable& t) {
  const auto& cb = default_codebook();
  out << "model,status,params,best_epoch,stop_epoch";
  for (const auto& e : cb.entries) out << ',' << e.name << "_UA," << e.name << "_PA";
  out << ",OA,kappa,s_per_image,error\n";
  for (const auto& r : t.rows) {
    out << to_string(r.arch) << ',' << (r.ok ? "ok" : "failed") << ',' << r.train.params << ','
        << r.train.best_epoch << ',' << r.train.stop_epoch;
    for (std::size_t c = 0; c < cb.entries.size(); ++c) {
      const bool have = r.ok && c < r.metrics.classes.size();
      out << ',' << (have ? fmt(r.metrics.classes[c].user_accuracy, 2) : "") << ','
          << (have ? fmt(r.metrics.classes[c].producer_accuracy, 2) : "");
    }
    std::string err = r.error;
    for (auto& ch : err) {
      if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
    }
    out << ',' << (r.ok ? fmt(r.metrics.overall_accuracy, 2) : "") << ',' << (r.ok ? fmt(r.metrics.kappa, 3) : "")
        << ',' << (r.ok ? fmt(r.seconds_per_image, 4) : "") << ',' << err << '\n';
  }
}

void write_benchmark_text(std::ostream& out, const BenchmarkTable& t) {
  const auto& cb = default_codebook();
  constexpr int kLabel = 18;
  constexpr int kCol = 15;
  auto cell = [&](const std::string& s) { out << std::setw(kCol) << s; };
  out << "hardware: " << t.hardware << '\n';
  out << std::left << std::setw(kLabel) << "" << std::right;
  for (const auto& r : t.rows) cell(to_string(r.arch));
  out << '\n';
  auto line = [&](const std::string& label, auto value) {
    out << std::left << std::setw(kLabel) << label << std::right;
    for (const auto& r : t.rows) cell(r.ok ? value(r) : std::string("FAILED"));
    out << '\n';
  };
  for (std::size_t c = 0; c < cb.entries.size(); ++c) {
    const auto& name = cb.entries[c].name;
    line(name + " UA", [&](const BenchmarkRow& r) {
      return c < r.metrics.classes.size() ? fmt(r.metrics.classes[c].user_accuracy, 1) : std::string("n/a");
    });
    line(name + " PA", [&](const BenchmarkRow& r) {
      return c < r.metrics.classes.size() ? fmt(r.metrics.classes[c].producer_accuracy, 1) : std::string("n/a");
    });
  }
  line("OA", [](const BenchmarkRow& r) { return fmt(r.metrics.overall_accuracy, 2); });
  line("kappa", [](const BenchmarkRow& r) { return fmt(r.metrics.kappa, 3); });
  line("agreement", [](const BenchmarkRow& r) { return r.metrics.agreement.empty() ? "n/a" : r.metrics.agreement; });
  line("s/image", [](const BenchmarkRow& r) { return fmt(r.seconds_per_image, 4); });
  line("params", [](const BenchmarkRow& r) { return std::to_string(r.train.params); });
  line("best/stop epoch", [](const BenchmarkRow& r) {
    return std::to_string(r.train.best_epoch) + "/" + std::to_string(r.train.stop_epoch);
  });
  for (const auto& r : t.rows) {
    if (!r.ok) out << to_string(r.arch) << " failed: " << r.error << '\n';
  }
}

fs::path write_synthetic_dataset(const fs::path& dir, const SyntheticDatasetSpec& spec) {
  if (spec.scenes < 1) throw ConfigError("synthetic dataset needs at least one scene");
  fs::create_directories(dir / "scenes");
  fs::create_directories(dir / "labels");
  ojson cfg;
  cfg["variant"] = spec.scene.with_dem ? "RGB_SAR_DEM" : "RGB_SAR_RATIO";
  cfg["scenes"] = ojson::array();
  for (int i = 0; i < spec.scenes; ++i) {
    SyntheticSpec s = spec.scene;
    s.seed = hash_combine(spec.scene.seed, static_cast<std::uint64_t>(i));
    s.centre_lat = spec.first_lat + spec.lat_step * i;
    const auto generated = make_synthetic_scene(s);
    char id[16];
    std::snprintf(id, sizeof id, "S%02d", i + 1);
    write_scene(dir / "scenes" / (std::string(id) + ".sarlc"), generated.scene);
    write_labels(dir / "labels" / (std::string(id) + ".sarlc"), generated.labels);
    cfg["scenes"].push_back({{"id", id},
                             {"scene", "scenes/" + std::string(id) + ".sarlc"},
                             {"labels", "labels/" + std::string(id) + ".sarlc"}});
  }
  // Desk-scale defaults: 128 px imagelets and reduced quotas and models.
  cfg["output_dir"] = "out";
  cfg["sampling"] = {{"imagelet_px", 128},
                     {"per_mosaic_total", 20},
                     {"per_mosaic_test", 8},
                     {"per_mosaic_traindev", 12}};
  cfg["model"] = {{"width_scale", 0.25}, {"depth", "compact"}};
  cfg["train"] = {{"max_epochs", 30}, {"batch_size", 4}};
  cfg["tiling"] = {{"tile_px", 256}, {"overlap_px", 32}};
  cfg["seed"] = spec.scene.seed;
  cfg["benchmark"] = {{"repetitions", 3}, {"imagelets", 4}};
  const auto path = dir / "config.json";
  write_text_atomic(path, cfg.dump(2) + "\n");
  return path;
}

}  // namespace sarlc
