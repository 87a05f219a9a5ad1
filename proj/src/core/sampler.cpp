#include "sarlc/sampler.hpp"

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <unordered_map>

#include "sarlc/errors.hpp"
#include "sarlc/random.hpp"

namespace sarlc {

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "TRAIN";
    case Split::Dev: return "DEV";
    case Split::Test: return "TEST";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "TRAIN") return Split::Train;
  if (s == "DEV") return Split::Dev;
  if (s == "TEST") return Split::Test;
  throw InputError("unknown split '" + s + "'");
}

void SamplingSpec::validate() const {
  if (imagelet_px <= 0) throw ConfigError("imagelet_px must be positive");
  if (per_mosaic_test < 0 || per_mosaic_traindev < 0) throw ConfigError("imagelet quotas must be non-negative");
  if (per_mosaic_test + per_mosaic_traindev != per_mosaic_total) {
    throw ConfigError("per_mosaic_test + per_mosaic_traindev must equal per_mosaic_total");
  }
  if (!(train_fraction_of_traindev > 0.0 && train_fraction_of_traindev < 1.0)) {
    throw ConfigError("train_fraction_of_traindev must lie strictly between 0 and 1");
  }
  if (!(test_lon_min <= test_lon_max)) throw ConfigError("test_lon_min must not exceed test_lon_max");
  if (attempt_budget_factor <= 0) throw ConfigError("attempt_budget_factor must be positive");
  if (!(max_nodata_fraction >= 0.0 && max_nodata_fraction <= 1.0)) {
    throw ConfigError("max_nodata_fraction must lie in [0, 1]");
  }
}

std::vector<ImageletRecord> DatasetManifest::split(Split s) const {
  std::vector<ImageletRecord> out;
  for (const auto& r : records) {
    if (r.split == s) out.push_back(r);
  }
  return out;
}

std::size_t DatasetManifest::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [s](const ImageletRecord& r) { return r.split == s; }));
}

bool in_test_band(double lon, const SamplingSpec& spec) {
  return lon >= spec.test_lon_min && lon <= spec.test_lon_max;
}

Split assign_split(const ImageletRecord& record, const SamplingSpec& spec) {
  if (in_test_band(record.centroid_lon, spec)) return Split::Test;
  std::uint64_t h = hash_combine(spec.rng_seed, fnv1a64(record.scene_id));
  h = hash_combine(h, static_cast<std::uint64_t>(record.row_offset));
  h = hash_combine(h, static_cast<std::uint64_t>(record.col_offset));
  return hash_to_unit(h) < spec.train_fraction_of_traindev ? Split::Train : Split::Dev;
}

bool windows_overlap(const ImageletRecord& a, const ImageletRecord& b, int imagelet_px) {
  return a.scene_id == b.scene_id && std::abs(a.row_offset - b.row_offset) < imagelet_px &&
         std::abs(a.col_offset - b.col_offset) < imagelet_px;
}

namespace {

// Summed-area table of nodata pixels for O(1) window counts.
class NodataCounter {
 public:
  explicit NodataCounter(const Mask& mask) : sums_(mask.rows() + 1, mask.cols() + 1, 0) {
    for (int r = 0; r < mask.rows(); ++r) {
      std::uint64_t row_sum = 0;
      for (int c = 0; c < mask.cols(); ++c) {
        row_sum += mask(r, c) ? 1 : 0;
        sums_(r + 1, c + 1) = sums_(r, c + 1) + row_sum;
      }
    }
  }

  std::uint64_t count(int row, int col, int size) const {
    return sums_(row + size, col + size) - sums_(row, col + size) - sums_(row + size, col) + sums_(row, col);
  }

 private:
  Grid<std::uint64_t> sums_;
};

// Buckets accepted windows by imagelet-sized cells; a candidate can only
// overlap windows in its own or the eight neighbouring cells.
class OverlapIndex {
 public:
  explicit OverlapIndex(int px) : px_(px) {}

  bool overlaps(int row, int col) const {
    const int cr = row / px_;
    const int cc = col / px_;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        auto it = cells_.find(key(cr + dr, cc + dc));
        if (it == cells_.end()) continue;
        for (const auto& [r, c] : it->second) {
          if (std::abs(r - row) < px_ && std::abs(c - col) < px_) return true;
        }
      }
    }
    return false;
  }

  void insert(int row, int col) { cells_[key(row / px_, col / px_)].emplace_back(row, col); }

 private:
  static std::uint64_t key(int r, int c) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(r)) << 32) | static_cast<std::uint32_t>(c);
  }

  int px_;
  std::unordered_map<std::uint64_t, std::vector<std::pair<int, int>>> cells_;
};

}  // namespace

std::vector<ImageletRecord> sample_imagelets(const SceneFootprint& scene, const SamplingSpec& spec) {
  spec.validate();
  if (scene.scene_id.empty() || scene.scene_id.find_first_of(",\n\r") != std::string::npos) {
    throw InputError("scene id must be non-empty and free of commas and newlines: '" + scene.scene_id + "'");
  }
  const Geometry& g = scene.geometry;
  if (scene.nodata && (scene.nodata->rows() != g.height || scene.nodata->cols() != g.width)) {
    throw InputError("scene " + scene.scene_id + ": nodata mask geometry differs from the footprint");
  }
  if (!crs_supported(g.crs)) throw InputError("scene " + scene.scene_id + ": unsupported CRS " + g.crs);

  const int px = spec.imagelet_px;
  std::vector<ImageletRecord> records;
  records.reserve(static_cast<std::size_t>(spec.per_mosaic_total));
  int test_count = 0;
  int traindev_count = 0;
  const std::uint64_t attempts = static_cast<std::uint64_t>(spec.attempt_budget_factor) *
                                 static_cast<std::uint64_t>(std::max(spec.per_mosaic_total, 1));

  auto done = [&] { return test_count == spec.per_mosaic_test && traindev_count == spec.per_mosaic_traindev; };

  if (g.height >= px && g.width >= px && !done()) {
    std::optional<NodataCounter> nodata;
    if (scene.nodata) nodata.emplace(*scene.nodata);
    const auto max_nodata = static_cast<std::uint64_t>(spec.max_nodata_fraction * static_cast<double>(px) * px);
    OverlapIndex index(px);
    Rng rng(hash_combine(spec.rng_seed, fnv1a64(scene.scene_id)));
    const auto row_choices = static_cast<std::uint64_t>(g.height - px + 1);
    const auto col_choices = static_cast<std::uint64_t>(g.width - px + 1);

    for (std::uint64_t attempt = 0; attempt < attempts && !done(); ++attempt) {
      const int row = static_cast<int>(uniform_below(rng, row_choices));
      const int col = static_cast<int>(uniform_below(rng, col_choices));
      LonLat centre = pixel_to_lonlat(g, col + px / 2.0, row + px / 2.0);
      const bool test = in_test_band(centre.lon, spec);
      if (test && test_count == spec.per_mosaic_test) continue;
      if (!test && traindev_count == spec.per_mosaic_traindev) continue;
      if (index.overlaps(row, col)) continue;
      if (nodata && nodata->count(row, col, px) > max_nodata) continue;

      ImageletRecord rec{scene.scene_id, row, col, Split::Train, centre.lon, centre.lat};
      rec.split = assign_split(rec, spec);
      index.insert(row, col);
      records.push_back(std::move(rec));
      (test ? test_count : traindev_count) += 1;
    }
  }

  if (!done()) {
    throw CapacityError("scene " + scene.scene_id + ": sampling budget of " + std::to_string(attempts) +
                        " attempts exhausted with test " + std::to_string(test_count) + "/" +
                        std::to_string(spec.per_mosaic_test) + " and train-dev " + std::to_string(traindev_count) +
                        "/" + std::to_string(spec.per_mosaic_traindev));
  }
  return records;
}

std::vector<ImageletRecord> sample_imagelets(const std::string& scene_id, const RasterScene& scene,
                                             const LabelMask& labels, const SamplingSpec& spec) {
  check_pairing(scene, labels);
  Mask combined(scene.height(), scene.width(), 0);
  for (std::size_t i = 0; i < combined.size(); ++i) {
    const bool scene_void = !scene.nodata.empty() && scene.nodata[i];
    combined[i] = (scene_void || labels.codes[i] == kNodataLabel) ? 1 : 0;
  }
  return sample_imagelets(SceneFootprint{scene_id, scene.geometry, &combined}, spec);
}

DatasetManifest build_manifest(const std::vector<SceneFootprint>& scenes, const SamplingSpec& spec,
                               DatasetVariant variant) {
  DatasetManifest m;
  m.spec = spec;
  m.variant = variant;
  for (const auto& s : scenes) {
    auto recs = sample_imagelets(s, spec);
    m.records.insert(m.records.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  return m;
}

Imagelet extract(const ChannelStack& stack, const LabelMask& labels, const ImageletRecord& record, int imagelet_px) {
  if (!stack.channels[0].same_shape(labels.codes)) throw PairingError("stack and label mask geometry differ");
  const int px = imagelet_px;
  if (record.row_offset < 0 || record.col_offset < 0 || record.row_offset + px > stack.height() ||
      record.col_offset + px > stack.width()) {
    throw InputError("window at (" + std::to_string(record.row_offset) + ", " + std::to_string(record.col_offset) +
                     ") of size " + std::to_string(px) + " leaves scene " + record.scene_id);
  }
  Imagelet out;
  for (std::size_t c = 0; c < 3; ++c) {
    out.channels[c] = crop(stack.channels[c], record.row_offset, record.col_offset, px, px);
  }
  out.labels = crop(labels.codes, record.row_offset, record.col_offset, px, px);
  if (!stack.nodata.empty()) {
    for (int r = 0; r < px; ++r) {
      for (int c = 0; c < px; ++c) {
        if (stack.nodata(record.row_offset + r, record.col_offset + c)) out.labels(r, c) = kNodataLabel;
      }
    }
  }
  return out;
}

}  // namespace sarlc
