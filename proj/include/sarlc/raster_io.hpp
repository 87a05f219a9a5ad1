#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sarlc/geo.hpp"
#include "sarlc/grid.hpp"

namespace sarlc {

// ---------------------------------------------------------------------------
// Container format
//
// A raster is stored either as one self-describing file (text header, a line
// reading `end_header`, then the band-sequential payload) or as a headerless
// flat binary file with a sidecar text header next to it (`scene.bin` +
// `scene.bin.hdr` or `scene.hdr`). The header holds one `key value...` pair
// per line:
//
//   sarlc_raster 1
//   width 4096
//   height 4096
//   dtype float32           (uint8 | uint16 | int16 | int32 | float32 | float64)
//   byte_order little       (little | big)
//   bands VH VV DEM
//   geo_transform 300000 20 0 7000000 0 -20
//   crs EPSG:3067
//   pixel_size 20
//   nodata 0                (optional)
//   dataset RGB_SAR_DEM     (optional tag)
//
// Lines starting with '#' are comments.
// ---------------------------------------------------------------------------

enum class SampleType { UInt8, UInt16, Int16, Int32, Float32, Float64 };

struct RasterHeader {
  Geometry geometry;
  SampleType dtype = SampleType::Float32;
  bool big_endian = false;
  std::vector<std::string> band_names;
  std::optional<double> nodata;
  std::string dataset_tag;
};

// Generic multiband raster, samples widened to double.
struct RasterFile {
  RasterHeader header;
  std::vector<Grid<double>> bands;
};

RasterFile read_raster(const std::filesystem::path& path);
// Writes the single-file container. Values are converted to header.dtype.
void write_raster(const std::filesystem::path& path, const RasterFile& raster);
// Writes `path` as headerless binary plus `path.hdr`.
void write_raster_with_sidecar(const std::filesystem::path& path, const RasterFile& raster);

bool is_integer_type(SampleType t);
std::string to_string(SampleType t);
SampleType parse_sample_type(const std::string& s);

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class LandCover : std::uint8_t { Urban = 0, Agriculture = 1, Forest = 2, Peatland = 3, Water = 4 };
inline constexpr int kNumClasses = 5;
inline constexpr std::uint8_t kNodataLabel = 255;

// Two backscatter amplitude bands, optionally elevation, sharing one geometry.
struct RasterScene {
  Geometry geometry;
  Grid<float> vh;
  Grid<float> vv;
  std::optional<Grid<float>> dem;  // metres
  Mask nodata;                     // 1 where any band is nodata
  std::string dataset_tag;

  int width() const { return geometry.width; }
  int height() const { return geometry.height; }
};

struct LabelMask {
  Geometry geometry;
  Grid<std::uint8_t> codes;  // 0..4 or kNodataLabel
  std::size_t coerced = 0;   // pixels whose code was out of range on load

  int width() const { return geometry.width; }
  int height() const { return geometry.height; }
};

struct CodebookEntry {
  int id = 0;
  std::string name;
  std::array<std::uint8_t, 3> rgb{};
  std::string description;
};

struct ClassCodebook {
  std::vector<CodebookEntry> entries;

  const CodebookEntry& at(int id) const;
};

// The five land-cover superclasses and their map colours.
const ClassCodebook& default_codebook();

// Mapping from source land-cover codes (e.g. CORINE level-3) to superclass
// ids. Codes missing from the table become nodata.
struct ClassAggregation {
  std::map<int, std::uint8_t> table;

  std::uint8_t map(int code) const;
};

// Text format: one `source_code target` pair per line, target being a class
// id or name (urban, agriculture, forest, peatland, water, nodata).
ClassAggregation read_aggregation(const std::filesystem::path& path);
ClassAggregation default_corine_aggregation();

RasterScene load_scene(const std::filesystem::path& path);
// Codes outside 0..4 (after optional aggregation) are coerced to nodata and
// counted in LabelMask::coerced.
LabelMask load_labels(const std::filesystem::path& path, const ClassAggregation* aggregation = nullptr);
void write_scene(const std::filesystem::path& path, const RasterScene& scene, SampleType dtype = SampleType::Float32);
void write_labels(const std::filesystem::path& path, const LabelMask& mask);

// Throws PairingError if the geometries differ.
void check_pairing(const RasterScene& scene, const LabelMask& labels);

using RgbImage = Grid<std::array<std::uint8_t, 3>>;

// Class colours from the codebook, nodata black.
RgbImage render_map(const LabelMask& mask, const ClassCodebook& codebook = default_codebook());
void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace sarlc
