#include <doctest.h>

#include <cmath>

#include "sarlc/errors.hpp"
#include "sarlc/geo.hpp"

using namespace sarlc;

TEST_CASE("geographic CRS passes through") {
  auto p = to_lonlat("EPSG:4326", 26.5, 63.25);
  CHECK(p.lon == 26.5);
  CHECK(p.lat == 63.25);
}

TEST_CASE("TM35FIN central meridian and false easting") {
  auto p = to_lonlat("EPSG:3067", 500000.0, 6900000.0);
  CHECK(p.lon == doctest::Approx(27.0).epsilon(1e-12));
  CHECK(p.lat > 62.0);
  CHECK(p.lat < 62.5);
  auto xy = from_lonlat("EPSG:3067", {27.0, 0.0});
  CHECK(xy[0] == doctest::Approx(500000.0));
  CHECK(std::abs(xy[1]) < 1e-6);
}

TEST_CASE("forward projection matches reference coordinates") {
  // Reference values computed once with PROJ.
  struct Case {
    const char* crs;
    double lon, lat, x, y;
  };
  for (Case c : {Case{"EPSG:3067", 24.9384, 60.1699, 385611.3167, 6672118.3802},
                 Case{"EPSG:3067", 21.0, 69.5, 265818.1267, 7721614.3421},
                 Case{"EPSG:3067", 31.5, 61.0, 743253.5700, 6771148.5231},
                 Case{"EPSG:32635", 22.0, 66.0, 273260.0222, 7328955.7596}}) {
    auto xy = from_lonlat(c.crs, {c.lon, c.lat});
    CHECK(std::abs(xy[0] - c.x) < 1e-3);
    CHECK(std::abs(xy[1] - c.y) < 1e-3);
  }
}

TEST_CASE("transverse Mercator round trips") {
    struct Zone {
    const char* crs;
    double lon0;
  };
  for (Zone z : {Zone{"EPSG:3067", 27.0}, Zone{"EPSG:32635", 27.0}, Zone{"EPSG:25834", 21.0}}) {
    for (double dlon = -6.0; dlon <= 6.0; dlon += 1.1) {
      for (double lat = 59.0; lat <= 70.5; lat += 0.7) {
        const double lon = z.lon0 + dlon;
        auto xy = from_lonlat(z.crs, {lon, lat});
        auto back = to_lonlat(z.crs, xy[0], xy[1]);
        CHECK(std::abs(back.lon - lon) < 1e-9);
        CHECK(std::abs(back.lat - lat) < 1e-9);
      }
    }
  }
}

TEST_CASE("UTM zone central meridians") {
  CHECK(to_lonlat("EPSG:32635", 500000.0, 7000000.0).lon == doctest::Approx(27.0));
  CHECK(to_lonlat("EPSG:25834", 500000.0, 7000000.0).lon == doctest::Approx(21.0));
}

TEST_CASE("unsupported CRS") {
  CHECK_FALSE(crs_supported("EPSG:2393"));
  CHECK(crs_supported("EPSG:3067"));
  CHECK_THROWS_AS(to_lonlat("EPSG:2393", 0, 0), InputError);
}

TEST_CASE("pixel_to_lonlat applies the affine transform") {
  Geometry g;
  g.width = 10;
  g.height = 10;
  g.crs = "EPSG:4326";
  g.transform.c = {20.0, 0.5, 0.0, 70.0, 0.0, -0.25};
  auto p = pixel_to_lonlat(g, 2.0, 4.0);
  CHECK(p.lon == doctest::Approx(21.0));
  CHECK(p.lat == doctest::Approx(69.0));
}
