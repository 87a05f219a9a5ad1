#include <doctest.h>

#include <fstream>

#include "../test_support.hpp"
#include "sarlc/errors.hpp"
#include "sarlc/raster_io.hpp"

using namespace sarlc;
using sarlc::testing::TempDir;

namespace {

RasterFile make_raster(int w, int h, std::vector<std::string> names, SampleType dtype, double base = 0.0) {
  RasterFile r;
  r.header.geometry = sarlc::testing::small_geometry(w, h);
  r.header.dtype = dtype;
  r.header.band_names = std::move(names);
  for (std::size_t b = 0; b < r.header.band_names.size(); ++b) {
    Grid<double> g(h, w);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = base + static_cast<double>((i * 7 + b * 13) % 200);
    r.bands.push_back(std::move(g));
  }
  return r;
}

}  // namespace

TEST_CASE("load_scene reads a 2-band VH/VV container") {
  TempDir tmp("rio");
  auto path = tmp / "scene.srf";
  write_raster(path, make_raster(512, 512, {"VH", "VV"}, SampleType::Float32, 1.0));
  RasterScene s = load_scene(path);
  CHECK(s.width() == 512);
  CHECK(s.height() == 512);
  CHECK_FALSE(s.dem.has_value());
  CHECK(s.vh(3, 5) == doctest::Approx(1.0 + ((3 * 512 + 5) * 7 % 200)));
  CHECK(s.geometry.crs == "EPSG:3067");
}

TEST_CASE("load_scene picks up the elevation band of a DEM-tagged file") {
  TempDir tmp("rio");
  auto path = tmp / "scene.srf";
  auto r = make_raster(64, 32, {"VH", "VV", "DEM"}, SampleType::Float32);
  r.header.dataset_tag = "RGB_SAR_DEM";
  write_raster(path, r);
  RasterScene s = load_scene(path);
  REQUIRE(s.dem.has_value());
  CHECK(s.dem->rows() == 32);
  CHECK(s.dem->cols() == 64);
  CHECK(s.dataset_tag == "RGB_SAR_DEM");
}

TEST_CASE("load_scene rejects missing polarisations") {
  TempDir tmp("rio");
  write_raster(tmp / "vv.srf", make_raster(16, 16, {"VV"}, SampleType::Float32));
  write_raster(tmp / "vh.srf", make_raster(16, 16, {"VH"}, SampleType::Float32));
  CHECK_THROWS_AS(load_scene(tmp / "vv.srf"), InputError);
  CHECK_THROWS_AS(load_scene(tmp / "vh.srf"), InputError);

  auto dem_tagged = make_raster(16, 16, {"VH", "VV"}, SampleType::Float32);
  dem_tagged.header.dataset_tag = "RGB_SAR_DEM";
  write_raster(tmp / "nodem.srf", dem_tagged);
  CHECK_THROWS_AS(load_scene(tmp / "nodem.srf"), InputError);
}

TEST_CASE("headerless binary with sidecar header, big-endian int16") {
  TempDir tmp("rio");
  auto r = make_raster(40, 24, {"VH", "VV"}, SampleType::Int16, -50.0);
  r.header.big_endian = true;
  r.header.nodata = -50.0;
  write_raster_with_sidecar(tmp / "flat.bin", r);
  CHECK(std::filesystem::exists(tmp / "flat.bin.hdr"));
  RasterFile back = read_raster(tmp / "flat.bin");
  REQUIRE(back.bands.size() == 2);
  CHECK(back.bands[1] == r.bands[1]);
  RasterScene s = load_scene(tmp / "flat.bin");
  // -50 + 0 at pixel 0 of VH equals nodata.
  CHECK(s.nodata[0] == 1);
  CHECK(s.nodata[1] == 0);
}

TEST_CASE("truncated payload is an input error") {
  TempDir tmp("rio");
  write_raster(tmp / "s.srf", make_raster(32, 32, {"VH", "VV"}, SampleType::Float32));
  std::filesystem::resize_file(tmp / "s.srf", std::filesystem::file_size(tmp / "s.srf") - 10);
  CHECK_THROWS_AS(read_raster(tmp / "s.srf"), InputError);
  CHECK_THROWS_AS(read_raster(tmp / "missing.srf"), InputError);
}

TEST_CASE("load_labels validates codes") {
  TempDir tmp("rio");
  LabelMask m;
  m.geometry = sarlc::testing::small_geometry(8, 8);
  m.codes = Grid<std::uint8_t>(8, 8, 2);
  write_labels(tmp / "forest.srf", m);
  LabelMask forest = load_labels(tmp / "forest.srf");
  for (auto v : forest.codes.data()) CHECK(v == static_cast<int>(LandCover::Forest));
  CHECK(forest.coerced == 0);

  RasterFile r;
  r.header.geometry = m.geometry;
  r.header.dtype = SampleType::UInt8;
  r.header.band_names = {"class"};
  Grid<double> codes(8, 8, 4.0);
  codes(0, 0) = 7;
  codes(1, 1) = 7;
  r.bands.push_back(codes);
  write_raster(tmp / "seven.srf", r);
  LabelMask seven = load_labels(tmp / "seven.srf");
  CHECK(seven.codes(0, 0) == kNodataLabel);
  CHECK(seven.codes(1, 1) == kNodataLabel);
  CHECK(seven.codes(2, 2) == 4);
  CHECK(seven.coerced == 2);

  r.header.dtype = SampleType::Float32;
  write_raster(tmp / "float.srf", r);
  CHECK_THROWS_AS(load_labels(tmp / "float.srf"), InputError);
}

TEST_CASE("label geometry must match the scene") {
  RasterScene scene = sarlc::testing::random_scene(16, 16, 1);
  LabelMask labels;
  labels.geometry = scene.geometry;
  labels.codes = Grid<std::uint8_t>(16, 16, 0);
  CHECK_NOTHROW(check_pairing(scene, labels));
  labels.geometry.transform.c[0] += 20.0;
  CHECK_THROWS_AS(check_pairing(scene, labels), PairingError);
  labels.geometry = scene.geometry;
  labels.geometry.width = 15;
  CHECK_THROWS_AS(check_pairing(scene, labels), PairingError);
}

TEST_CASE("label round trip preserves every in-range code") {
  TempDir tmp("rio");
  std::mt19937 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    LabelMask m;
    m.geometry = sarlc::testing::small_geometry(33 + trial, 17);
    m.codes = Grid<std::uint8_t>(17, 33 + trial);
    for (auto& v : m.codes.data()) {
      int x = static_cast<int>(rng() % 6);
      v = x == 5 ? kNodataLabel : static_cast<std::uint8_t>(x);
    }
    write_labels(tmp / "m.srf", m);
    LabelMask back = load_labels(tmp / "m.srf");
    CHECK(back.codes == m.codes);
    CHECK(back.geometry == m.geometry);
  }
}

TEST_CASE("codebook colours") {
  const auto& book = default_codebook();
  REQUIRE(book.entries.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(book.entries[static_cast<std::size_t>(i)].id == i);
  using Rgb = std::array<std::uint8_t, 3>;
  CHECK(book.at(0).rgb == Rgb{128, 0, 0});
  CHECK(book.at(1).rgb == Rgb{222, 184, 135});
  CHECK(book.at(2).rgb == Rgb{127, 255, 0});
  CHECK(book.at(3).rgb == Rgb{173, 216, 230});
  CHECK(book.at(4).rgb == Rgb{0, 191, 255});
}

TEST_CASE("render_map colours classes and blacks out nodata") {
  LabelMask m;
  m.geometry = sarlc::testing::small_geometry(4, 3);
  using Rgb = std::array<std::uint8_t, 3>;

  m.codes = Grid<std::uint8_t>(3, 4, 0);
  {
    const auto img = render_map(m);
    for (const auto& px : img.data()) CHECK(px == Rgb{128, 0, 0});
  }
  m.codes = Grid<std::uint8_t>(3, 4, 4);
  {
    const auto img = render_map(m);
    for (const auto& px : img.data()) CHECK(px == Rgb{0, 191, 255});
  }
  m.codes = Grid<std::uint8_t>(3, 4, kNodataLabel);
  {
    const auto img = render_map(m);
    for (const auto& px : img.data()) CHECK(px == Rgb{0, 0, 0});
  }

  m.codes(1, 2) = 1;
  CHECK(render_map(m) == render_map(m));
  CHECK(render_map(m)(1, 2) == Rgb{222, 184, 135});
}

TEST_CASE("write_png emits a PNG file") {
  TempDir tmp("rio");
  LabelMask m;
  m.geometry = sarlc::testing::small_geometry(5, 6);
  m.codes = Grid<std::uint8_t>(6, 5, 3);
  write_png(tmp / "map.png", render_map(m));
  std::ifstream in(tmp / "map.png", std::ios::binary);
  char sig[8];
  in.read(sig, 8);
  CHECK(std::string(sig + 1, 3) == "PNG");
}

TEST_CASE("class aggregation") {
  auto agg = default_corine_aggregation();
  CHECK(agg.map(111) == 0);
  CHECK(agg.map(141) == 2);  // green urban areas count as forest
  CHECK(agg.map(211) == 1);
  CHECK(agg.map(412) == 3);
  CHECK(agg.map(512) == 4);
  CHECK(agg.map(999) == kNodataLabel);

  TempDir tmp("rio");
  {
    std::ofstream f(tmp / "agg.txt");
    f << "# comment\n10 urban\n20 4   # trailing comment\n30 nodata\n";
  }
  auto custom = read_aggregation(tmp / "agg.txt");
  CHECK(custom.map(10) == 0);
  CHECK(custom.map(20) == 4);
  CHECK(custom.map(30) == kNodataLabel);

  RasterFile r;
  r.header.geometry = sarlc::testing::small_geometry(3, 1);
  r.header.dtype = SampleType::UInt16;
  r.header.band_names = {"clc"};
  Grid<double> codes(1, 3);
  codes[0] = 10;
  codes[1] = 20;
  codes[2] = 30;
  r.bands.push_back(codes);
  write_raster(tmp / "clc.srf", r);
  LabelMask m = load_labels(tmp / "clc.srf", &custom);
  CHECK(m.codes[0] == 0);
  CHECK(m.codes[1] == 4);
  CHECK(m.codes[2] == kNodataLabel);
}

TEST_CASE("shipped aggregation file matches the built-in default") {
  auto shipped = read_aggregation(std::filesystem::path(SARLC_SOURCE_DIR) / "data" / "corine_to_superclass.txt");
  auto builtin = default_corine_aggregation();
  for (int code = 100; code < 600; ++code) CHECK(shipped.map(code) == builtin.map(code));
}
