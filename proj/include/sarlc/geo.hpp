#pragma once

#include <array>
#include <string>

namespace sarlc {

// GDAL-style affine pixel -> projected mapping:
//   x = c[0] + col * c[1] + row * c[2]
//   y = c[3] + col * c[4] + row * c[5]
// (col, row) are continuous pixel coordinates; (0, 0) is the outer corner of
// the top-left pixel.
struct GeoTransform {
  std::array<double, 6> c{0.0, 1.0, 0.0, 0.0, 0.0, 1.0};

  std::array<double, 2> apply(double col, double row) const {
    return {c[0] + col * c[1] + row * c[2], c[3] + col * c[4] + row * c[5]};
  }
  friend bool operator==(const GeoTransform&, const GeoTransform&) = default;
};

struct Geometry {
  int width = 0;
  int height = 0;
  double pixel_size = 20.0;  // metres per pixel
  GeoTransform transform;
  std::string crs = "EPSG:4326";

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

// Supported: EPSG:4326 (x = lon, y = lat), EPSG:3067 (ETRS-TM35FIN),
// EPSG:326zz (WGS 84 / UTM north) and EPSG:258zz (ETRS89 / UTM).
// Anything else throws InputError.
bool crs_supported(const std::string& crs);
LonLat to_lonlat(const std::string& crs, double x, double y);
std::array<double, 2> from_lonlat(const std::string& crs, LonLat p);

// Geographic position of a continuous pixel coordinate.
LonLat pixel_to_lonlat(const Geometry& g, double col, double row);

}  // namespace sarlc
