#include "sarlc/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sarlc/errors.hpp"

namespace sarlc {

std::string to_string(DatasetVariant v) {
  return v == DatasetVariant::RgbSarRatio ? "RGB_SAR_RATIO" : "RGB_SAR_DEM";
}

DatasetVariant parse_dataset_variant(const std::string& s) {
  if (s == "RGB_SAR_RATIO") return DatasetVariant::RgbSarRatio;
  if (s == "RGB_SAR_DEM") return DatasetVariant::RgbSarDem;
  throw ConfigError("unknown dataset variant '" + s + "'");
}

void StretchSpec::validate() const {
  if (!(lower_pct >= 0.0 && upper_pct <= 100.0 && lower_pct < upper_pct)) {
    throw ConfigError("stretch percentiles must satisfy 0 <= lower < upper <= 100");
  }
  if (!(out_min >= 0.0 && out_max <= 255.0 && out_min < out_max)) {
    throw ConfigError("stretch output range must lie inside [0, 255]");
  }
}

Grid<float> cross_pol_ratio(const Grid<float>& vh, const Grid<float>& vv, const Mask* nodata) {
  if (!vh.same_shape(vv)) throw InputError("cross-pol ratio: VH and VV geometry differ");
  if (nodata && !nodata->same_shape(vh)) throw InputError("cross-pol ratio: nodata mask geometry differs");
  Grid<float> out(vh.rows(), vh.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (nodata && (*nodata)[i]) continue;
    out[i] = vh[i] / (vv[i] + kRatioEpsilon);
  }
  return out;
}

double nearest_rank_percentile(std::span<const float> sorted_values, double pct) {
  if (sorted_values.empty()) throw EmptyBandError("percentile of an empty sample");
  const auto n = static_cast<double>(sorted_values.size());
  // pct * n / 100 keeps round percentiles of round sizes exact.
  double rank = std::ceil(pct * n / 100.0 - 1e-9);
  rank = std::clamp(rank, 1.0, n);
  return sorted_values[static_cast<std::size_t>(rank) - 1];
}

namespace {

constexpr double kConstantSpan = 1e-4;

double kth_value(std::vector<float>& values, double pct) {
  const auto n = static_cast<double>(values.size());
  double rank = std::clamp(std::ceil(pct * n / 100.0 - 1e-9), 1.0, n);
  auto k = static_cast<std::size_t>(rank) - 1;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

}  // namespace

StretchBounds stretch_bounds(const Grid<float>& band, const StretchSpec& spec, const Mask* nodata) {
  spec.validate();
  if (nodata && !nodata->same_shape(band)) throw InputError("stretch: nodata mask geometry differs");
  std::vector<float> values;
  values.reserve(band.size());
  for (std::size_t i = 0; i < band.size(); ++i) {
    if (nodata && (*nodata)[i]) continue;
    if (!std::isfinite(band[i])) continue;
    values.push_back(band[i]);
  }
  if (values.empty()) throw EmptyBandError("stretch: band has no valid pixels");
  StretchBounds b;
  b.lo = kth_value(values, spec.lower_pct);
  b.hi = kth_value(values, spec.upper_pct);
  return b;
}

Grid<std::uint8_t> apply_stretch(const Grid<float>& band, StretchBounds bounds, const StretchSpec& spec,
                                 const Mask* nodata) {
  const auto floor_value = static_cast<std::uint8_t>(std::lround(spec.out_min));
  Grid<std::uint8_t> out(band.rows(), band.cols(), floor_value);
  const double span = bounds.hi - bounds.lo;
  // Spans at float resolution of the band magnitude (e.g. the ratio of
  // identical bands, 1 - eps/vv) count as constant.
  if (!(span > kConstantSpan * std::max(std::abs(bounds.lo), std::abs(bounds.hi)))) return out;
  const double scale = (spec.out_max - spec.out_min) / span;
  for (std::size_t i = 0; i < band.size(); ++i) {
    if (nodata && (*nodata)[i]) continue;
    double x = band[i];
    if (std::isnan(x)) continue;
    double y = spec.out_min + (std::clamp(x, bounds.lo, bounds.hi) - bounds.lo) * scale;
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(y, spec.out_min, spec.out_max)));
  }
  return out;
}

Grid<std::uint8_t> percentile_stretch(const Grid<float>& band, const StretchSpec& spec, const Mask* nodata) {
  return apply_stretch(band, stretch_bounds(band, spec, nodata), spec, nodata);
}

ChannelStack compose_stack(const RasterScene& scene, DatasetVariant variant, const StretchSpec& spec) {
  const Mask* mask = scene.nodata.empty() ? nullptr : &scene.nodata;
  const Grid<float>* third = nullptr;
  Grid<float> ratio;
  if (variant == DatasetVariant::RgbSarDem) {
    if (!scene.dem) throw InputError("RGB_SAR_DEM stack requested for a scene without a DEM band");
    third = &*scene.dem;
  } else {
    ratio = cross_pol_ratio(scene.vh, scene.vv, mask);
    third = &ratio;
  }
  ChannelStack stack;
  stack.variant = variant;
  stack.geometry = scene.geometry;
  stack.nodata = mask ? *mask : Mask(scene.height(), scene.width(), 0);
  const std::array<const Grid<float>*, 3> sources{&scene.vh, &scene.vv, third};
  for (std::size_t c = 0; c < 3; ++c) {
    stack.bounds[c] = stretch_bounds(*sources[c], spec, mask);
    stack.channels[c] = apply_stretch(*sources[c], stack.bounds[c], spec, mask);
  }
  return stack;
}

}  // namespace sarlc
