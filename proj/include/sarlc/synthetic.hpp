#pragma once

#include <cstdint>
#include <string>

#include "sarlc/raster_io.hpp"

namespace sarlc {

// Desk-scale stand-in for a mosaic and its label map: Voronoi regions, one
// land-cover class each, with class-dependent backscatter under multilook
// speckle and an optional elevation band.
struct SyntheticSpec {
  int width = 1024;
  int height = 1024;
  double centre_lon = 27.0;
  double centre_lat = 63.0;
  double pixel_size = 20.0;
  std::string crs = "EPSG:3067";
  int regions = 24;
  int looks = 4;
  bool with_dem = false;
  // Side of a nodata square in the top-left corner, in pixels.
  int nodata_corner_px = 0;
  std::uint64_t seed = 0;
  void validate() const;  // throws ConfigError
};

struct SyntheticScene {
  RasterScene scene;
  LabelMask labels;
};

SyntheticScene make_synthetic_scene(const SyntheticSpec& spec);

}  // namespace sarlc
