#include "sarlc/synthetic.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "sarlc/errors.hpp"
#include "sarlc/geo.hpp"
#include "sarlc/random.hpp"

namespace sarlc {

namespace {

// Mean amplitudes (VV, VH) and elevation offset per class.
struct ClassSignature {
  float vv;
  float vh;
  float dem;
};
constexpr ClassSignature kSignatures[kNumClasses] = {
    {0.45f, 0.12f, 40.0f},    // urban
    {0.20f, 0.04f, 20.0f},    // agriculture
    {0.25f, 0.08f, 60.0f},    // forest
    {0.12f, 0.025f, 5.0f},    // peatland
    {0.03f, 0.006f, -10.0f},  // water
};

// Unit-mean gamma intensity with integer looks, as an amplitude factor.
float speckle(Rng& rng, int looks) {
  double s = 0.0;
  for (int i = 0; i < looks; ++i) s -= std::log(1.0 - uniform01(rng));
  return static_cast<float>(std::sqrt(s / looks));
}

}  // namespace

void SyntheticSpec::validate() const {
  if (width < 1 || height < 1) throw ConfigError("synthetic scene size must be positive");
  if (!(pixel_size > 0.0)) throw ConfigError("synthetic pixel_size must be positive");
  if (regions < kNumClasses) throw ConfigError("synthetic scene needs at least one region per class");
  if (looks < 1) throw ConfigError("looks must be at least 1");
  if (nodata_corner_px < 0) throw ConfigError("nodata_corner_px must be non-negative");
  if (!crs_supported(crs)) throw ConfigError("unsupported CRS " + crs);
}

SyntheticScene make_synthetic_scene(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(hash_combine(spec.seed, 0x73796e74ULL));
  const int w = spec.width;
  const int h = spec.height;

  Geometry g;
  g.width = w;
  g.height = h;
  g.pixel_size = spec.pixel_size;
  g.crs = spec.crs;
  const auto centre = from_lonlat(spec.crs, {spec.centre_lon, spec.centre_lat});
  if (spec.crs == "EPSG:4326") {
    // Degrees per pixel from metres at the centre latitude.
    const double dy = spec.pixel_size / 111320.0;
    const double dx = dy / std::cos(spec.centre_lat * 3.14159265358979323846 / 180.0);
    g.transform.c = {centre[0] - dx * w / 2.0, dx, 0.0, centre[1] + dy * h / 2.0, 0.0, -dy};
  } else {
    g.transform.c = {centre[0] - spec.pixel_size * w / 2.0, spec.pixel_size, 0.0,
                     centre[1] + spec.pixel_size * h / 2.0, 0.0, -spec.pixel_size};
  }

  struct Site {
    double r, c;
    std::uint8_t cls;
  };
  std::vector<Site> sites(static_cast<std::size_t>(spec.regions));
  for (std::size_t i = 0; i < sites.size(); ++i) {
    sites[i].r = uniform01(rng) * h;
    sites[i].c = uniform01(rng) * w;
    sites[i].cls = static_cast<std::uint8_t>(i < kNumClasses ? i : uniform_below(rng, kNumClasses));
  }

  SyntheticScene out;
  auto& s = out.scene;
  s.geometry = g;
  s.vh = Grid<float>(h, w);
  s.vv = Grid<float>(h, w);
  s.nodata = Mask(h, w, 0);
  out.labels.geometry = g;
  out.labels.codes = Grid<std::uint8_t>(h, w);
  Grid<float> dem;
  if (spec.with_dem) {
    dem = Grid<float>(h, w);
    s.dataset_tag = "RGB_SAR_DEM";
  }
  const double phase = uniform01(rng) * 6.283185307179586;

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double best = std::numeric_limits<double>::infinity();
      std::uint8_t cls = 0;
      for (const auto& site : sites) {
        const double d = (site.r - r) * (site.r - r) + (site.c - c) * (site.c - c);
        if (d < best) {
          best = d;
          cls = site.cls;
        }
      }
      const auto& sig = kSignatures[cls];
      if (r < spec.nodata_corner_px && c < spec.nodata_corner_px) {
        s.nodata(r, c) = 1;
        s.vh(r, c) = 0.0f;
        s.vv(r, c) = 0.0f;
        out.labels.codes(r, c) = kNodataLabel;
        if (spec.with_dem) dem(r, c) = 0.0f;
        continue;
      }
      out.labels.codes(r, c) = cls;
      s.vv(r, c) = sig.vv * speckle(rng, spec.looks);
      s.vh(r, c) = sig.vh * speckle(rng, spec.looks);
      if (spec.with_dem) {
        const double relief = 80.0 + 40.0 * std::sin(phase + 6.0 * r / h) * std::cos(4.0 * c / w);
        dem(r, c) = static_cast<float>(relief + sig.dem);
      }
    }
  }
  if (spec.with_dem) s.dem = std::move(dem);
  return out;
}

}  // namespace sarlc
