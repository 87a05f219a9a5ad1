#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "sarlc/grid.hpp"
#include "sarlc/raster_io.hpp"

namespace sarlc {

enum class DatasetVariant { RgbSarRatio, RgbSarDem };

std::string to_string(DatasetVariant v);
DatasetVariant parse_dataset_variant(const std::string& s);

inline constexpr float kRatioEpsilon = 1e-6f;

// Percentile stretch to [out_min, out_max]. With the default percentiles at
// most 1% of the valid pixels fall outside [lo, hi] and get clipped.
struct StretchSpec {
  double lower_pct = 0.5;
  double upper_pct = 99.5;
  double out_min = 0.0;
  double out_max = 255.0;

  void validate() const;  // throws ConfigError
  friend bool operator==(const StretchSpec&, const StretchSpec&) = default;
};

struct StretchBounds {
  double lo = 0.0;
  double hi = 0.0;
};

// Three 8-bit channels: VH, VV, then cross-pol ratio or elevation.
struct ChannelStack {
  DatasetVariant variant = DatasetVariant::RgbSarRatio;
  Geometry geometry;
  std::array<Grid<std::uint8_t>, 3> channels;
  Mask nodata;
  std::array<StretchBounds, 3> bounds;

  int width() const { return geometry.width; }
  int height() const { return geometry.height; }
};

// vh / (vv + eps) per pixel; nodata pixels (when a mask is given) are 0.
Grid<float> cross_pol_ratio(const Grid<float>& vh, const Grid<float>& vv, const Mask* nodata = nullptr);

// Nearest-rank percentile of the valid samples: the value at 1-based rank
// ceil(pct/100 * n) of the sorted sample, clamped to [1, n].
double nearest_rank_percentile(std::span<const float> sorted_values, double pct);

// Throws EmptyBandError if every pixel is nodata.
StretchBounds stretch_bounds(const Grid<float>& band, const StretchSpec& spec, const Mask* nodata = nullptr);

// clip((x - lo) / (hi - lo)) mapped to the output range and rounded; a band
// with hi == lo (to 1e-4 relative) maps to out_min everywhere. Nodata pixels become out_min.
Grid<std::uint8_t> apply_stretch(const Grid<float>& band, StretchBounds bounds, const StretchSpec& spec,
                                 const Mask* nodata = nullptr);
Grid<std::uint8_t> percentile_stretch(const Grid<float>& band, const StretchSpec& spec, const Mask* nodata = nullptr);

// Each channel is stretched with its own bounds. Throws InputError if the
// DEM variant is requested for a scene without elevation.
ChannelStack compose_stack(const RasterScene& scene, DatasetVariant variant, const StretchSpec& spec = {});

}  // namespace sarlc
