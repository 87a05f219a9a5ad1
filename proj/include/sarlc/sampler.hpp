#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "sarlc/geo.hpp"
#include "sarlc/grid.hpp"
#include "sarlc/preprocess.hpp"
#include "sarlc/raster_io.hpp"

namespace sarlc {

enum class Split { Train, Dev, Test };
std::string to_string(Split s);
Split parse_split(const std::string& s);

struct SamplingSpec {
  int imagelet_px = 512;
  int per_mosaic_total = 1000;
  int per_mosaic_test = 400;
  int per_mosaic_traindev = 600;
  double test_lon_min = 25.0;
  double test_lon_max = 29.0;
  double train_fraction_of_traindev = 0.6;
  std::uint64_t rng_seed = 0;
  // Candidate windows tried per requested imagelet before giving up.
  int attempt_budget_factor = 100;
  // Windows with a larger nodata fraction are rejected.
  double max_nodata_fraction = 0.5;

  void validate() const;  // throws ConfigError
  friend bool operator==(const SamplingSpec&, const SamplingSpec&) = default;
};

struct ImageletRecord {
  std::string scene_id;
  int row_offset = 0;
  int col_offset = 0;
  Split split = Split::Train;
  double centroid_lon = 0.0;
  double centroid_lat = 0.0;

  friend bool operator==(const ImageletRecord&, const ImageletRecord&) = default;
};

struct DatasetManifest {
  SamplingSpec spec;
  DatasetVariant variant = DatasetVariant::RgbSarRatio;
  std::vector<ImageletRecord> records;

  std::vector<ImageletRecord> split(Split s) const;
  std::size_t count(Split s) const;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

// What the sampler needs from a scene: its id, its geometry and, optionally,
// a per-pixel nodata mask (scene nodata or unlabelled pixels).
struct SceneFootprint {
  std::string scene_id;
  Geometry geometry;
  const Mask* nodata = nullptr;
};

bool in_test_band(double lon, const SamplingSpec& spec);

// TEST iff the centroid longitude lies in [test_lon_min, test_lon_max];
// otherwise TRAIN with probability train_fraction_of_traindev, decided by a
// seeded hash of (seed, scene_id, row, col), else DEV.
Split assign_split(const ImageletRecord& record, const SamplingSpec& spec);

// Random non-overlapping windows: per_mosaic_test with centroid inside the
// test band, per_mosaic_traindev outside it. Deterministic in (rng_seed,
// scene_id). Throws CapacityError with the achieved counts when the attempt
// budget runs out.
std::vector<ImageletRecord> sample_imagelets(const SceneFootprint& scene, const SamplingSpec& spec);

// Convenience overload: a pixel counts as nodata if it is nodata in the scene
// or unlabelled in the mask. Throws PairingError on geometry mismatch.
std::vector<ImageletRecord> sample_imagelets(const std::string& scene_id, const RasterScene& scene,
                                             const LabelMask& labels, const SamplingSpec& spec);

DatasetManifest build_manifest(const std::vector<SceneFootprint>& scenes, const SamplingSpec& spec,
                               DatasetVariant variant);

// Window contents for one record; labels are set to nodata wherever the
// input stack is nodata.
struct Imagelet {
  std::array<Grid<std::uint8_t>, 3> channels;
  Grid<std::uint8_t> labels;
};

// Throws InputError if the window leaves the scene, PairingError if the stack
// and labels differ in size. Stack nodata pixels come out as nodata labels.
Imagelet extract(const ChannelStack& stack, const LabelMask& labels, const ImageletRecord& record, int imagelet_px);

bool windows_overlap(const ImageletRecord& a, const ImageletRecord& b, int imagelet_px);

// Plain-text manifest: a `key=value` header block with the sampling spec,
// then `scene_id,row,col,split,lon,lat` lines. Numbers use shortest
// round-trip formatting, so write -> read -> write is byte-identical.
void write_manifest(std::ostream& out, const DatasetManifest& manifest);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(std::istream& in);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace sarlc
