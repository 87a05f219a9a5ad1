#include "sarlc/raster_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sarlc/errors.hpp"
#include "sarlc/log.hpp"

namespace sarlc {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMagic = "sarlc_raster";
constexpr std::string_view kEndHeader = "end_header";

std::size_t sample_bytes(SampleType t) {
  switch (t) {
    case SampleType::UInt8: return 1;
    case SampleType::UInt16:
    case SampleType::Int16: return 2;
    case SampleType::Int32:
    case SampleType::Float32: return 4;
    case SampleType::Float64: return 8;
  }
  return 0;
}

template <typename T>
T load_sample(const char* p, bool swap) {
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), p, sizeof(T));
  if (swap) std::reverse(buf.begin(), buf.end());
  T v;
  std::memcpy(&v, buf.data(), sizeof(T));
  return v;
}

template <typename T>
void store_sample(char* p, double value, bool swap) {
  T v;
  if constexpr (std::is_integral_v<T>) {
    double lo = static_cast<double>(std::numeric_limits<T>::min());
    double hi = static_cast<double>(std::numeric_limits<T>::max());
    v = static_cast<T>(std::clamp(std::round(value), lo, hi));
  } else {
    v = static_cast<T>(value);
  }
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), &v, sizeof(T));
  if (swap) std::reverse(buf.begin(), buf.end());
  std::memcpy(p, buf.data(), sizeof(T));
}

double decode(SampleType t, const char* p, bool swap) {
  switch (t) {
    case SampleType::UInt8: return static_cast<unsigned char>(*p);
    case SampleType::UInt16: return load_sample<std::uint16_t>(p, swap);
    case SampleType::Int16: return load_sample<std::int16_t>(p, swap);
    case SampleType::Int32: return load_sample<std::int32_t>(p, swap);
    case SampleType::Float32: return load_sample<float>(p, swap);
    case SampleType::Float64: return load_sample<double>(p, swap);
  }
  return 0.0;
}

void encode(SampleType t, char* p, double v, bool swap) {
  switch (t) {
    case SampleType::UInt8: store_sample<std::uint8_t>(p, v, false); break;
    case SampleType::UInt16: store_sample<std::uint16_t>(p, v, swap); break;
    case SampleType::Int16: store_sample<std::int16_t>(p, v, swap); break;
    case SampleType::Int32: store_sample<std::int32_t>(p, v, swap); break;
    case SampleType::Float32: store_sample<float>(p, v, swap); break;
    case SampleType::Float64: store_sample<double>(p, v, swap); break;
  }
}

bool host_big_endian() { return std::endian::native == std::endian::big; }

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Parses header lines until `end_header` or end of stream.
RasterHeader parse_header(std::istream& in, const fs::path& origin, bool require_end) {
  RasterHeader h;
  bool saw_width = false, saw_height = false, saw_bands = false, saw_end = false;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line == kEndHeader) {
      saw_end = true;
      break;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto fail = [&](const std::string& why) {
      throw InputError(origin.string() + ": bad header line '" + line + "': " + why);
    };
    if (key == kMagic) {
      int version = 0;
      ls >> version;
      if (version != 1) fail("unsupported version");
    } else if (key == "width") {
      if (!(ls >> h.geometry.width) || h.geometry.width <= 0) fail("width must be positive");
      saw_width = true;
    } else if (key == "height") {
      if (!(ls >> h.geometry.height) || h.geometry.height <= 0) fail("height must be positive");
      saw_height = true;
    } else if (key == "dtype") {
      std::string s;
      ls >> s;
      h.dtype = parse_sample_type(s);
    } else if (key == "byte_order") {
      std::string s;
      ls >> s;
      if (s == "little") h.big_endian = false;
      else if (s == "big") h.big_endian = true;
      else fail("byte_order must be little or big");
    } else if (key == "bands") {
      std::string name;
      while (ls >> name) h.band_names.push_back(name);
      if (h.band_names.empty()) fail("no band names");
      saw_bands = true;
    } else if (key == "geo_transform") {
      for (double& c : h.geometry.transform.c) {
        if (!(ls >> c)) fail("need 6 coefficients");
      }
    } else if (key == "crs") {
      ls >> h.geometry.crs;
    } else if (key == "pixel_size") {
      if (!(ls >> h.geometry.pixel_size) || !(h.geometry.pixel_size > 0.0)) fail("pixel_size must be positive");
    } else if (key == "nodata") {
      std::string s;
      ls >> s;
      if (s == "nan" || s == "NaN") h.nodata = std::nan("");
      else {
        try {
          h.nodata = std::stod(s);
        } catch (const std::exception&) {
          fail("nodata is not a number");
        }
      }
    } else if (key == "dataset") {
      ls >> h.dataset_tag;
    }
    // Unknown keys are ignored so headers can carry extra provenance.
  }
  if (!saw_width || !saw_height || !saw_bands) {
    throw InputError(origin.string() + ": header needs width, height and bands");
  }
  if (require_end && !saw_end) throw InputError(origin.string() + ": missing end_header");
  return h;
}

std::string header_text(const RasterHeader& h) {
  std::ostringstream os;
  os << kMagic << " 1\n";
  os << "width " << h.geometry.width << "\n";
  os << "height " << h.geometry.height << "\n";
  os << "dtype " << to_string(h.dtype) << "\n";
  os << "byte_order " << (h.big_endian ? "big" : "little") << "\n";
  os << "bands";
  for (const auto& b : h.band_names) os << ' ' << b;
  os << "\n";
  os << "geo_transform";
  for (double c : h.geometry.transform.c) os << ' ' << format_double(c);
  os << "\n";
  os << "crs " << h.geometry.crs << "\n";
  os << "pixel_size " << format_double(h.geometry.pixel_size) << "\n";
  if (h.nodata) os << "nodata " << (std::isnan(*h.nodata) ? std::string("nan") : format_double(*h.nodata)) << "\n";
  if (!h.dataset_tag.empty()) os << "dataset " << h.dataset_tag << "\n";
  return os.str();
}

std::vector<Grid<double>> read_payload(std::istream& in, const RasterHeader& h, const fs::path& origin) {
  const auto& g = h.geometry;
  const std::size_t n = static_cast<std::size_t>(g.width) * g.height;
  const std::size_t bytes = sample_bytes(h.dtype);
  const bool swap = h.big_endian != host_big_endian();
  std::vector<char> buffer(n * bytes);
  std::vector<Grid<double>> bands;
  bands.reserve(h.band_names.size());
  for (const auto& name : h.band_names) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (static_cast<std::size_t>(in.gcount()) != buffer.size()) {
      throw InputError(origin.string() + ": payload truncated in band " + name);
    }
    Grid<double> band(g.height, g.width);
    for (std::size_t i = 0; i < n; ++i) band[i] = decode(h.dtype, buffer.data() + i * bytes, swap);
    bands.push_back(std::move(band));
  }
  return bands;
}

void write_payload(std::ostream& out, const RasterFile& r) {
  const auto& h = r.header;
  const std::size_t bytes = sample_bytes(h.dtype);
  const bool swap = h.big_endian != host_big_endian();
  for (const auto& band : r.bands) {
    std::vector<char> buffer(band.size() * bytes);
    for (std::size_t i = 0; i < band.size(); ++i) encode(h.dtype, buffer.data() + i * bytes, band[i], swap);
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  }
}

void validate_for_write(const RasterFile& r) {
  const auto& g = r.header.geometry;
  if (r.bands.size() != r.header.band_names.size()) throw InputError("band count does not match band names");
  for (const auto& b : r.bands) {
    if (b.rows() != g.height || b.cols() != g.width) throw InputError("band geometry does not match header");
  }
}

std::optional<fs::path> find_sidecar(const fs::path& path) {
  fs::path a = path;
  a += ".hdr";
  if (fs::exists(a)) return a;
  fs::path b = path;
  b.replace_extension(".hdr");
  if (b != path && fs::exists(b)) return b;
  return std::nullopt;
}

bool is_nodata(double v, const std::optional<double>& nodata) {
  if (std::isnan(v)) return true;
  return nodata && !std::isnan(*nodata) && v == *nodata;
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

}  // namespace

bool is_integer_type(SampleType t) {
  return t == SampleType::UInt8 || t == SampleType::UInt16 || t == SampleType::Int16 || t == SampleType::Int32;
}

std::string to_string(SampleType t) {
  switch (t) {
    case SampleType::UInt8: return "uint8";
    case SampleType::UInt16: return "uint16";
    case SampleType::Int16: return "int16";
    case SampleType::Int32: return "int32";
    case SampleType::Float32: return "float32";
    case SampleType::Float64: return "float64";
  }
  return "?";
}

SampleType parse_sample_type(const std::string& s) {
  if (s == "uint8") return SampleType::UInt8;
  if (s == "uint16") return SampleType::UInt16;
  if (s == "int16") return SampleType::Int16;
  if (s == "int32") return SampleType::Int32;
  if (s == "float32") return SampleType::Float32;
  if (s == "float64") return SampleType::Float64;
  throw InputError("unknown dtype '" + s + "'");
}

RasterFile read_raster(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open raster " + path.string());
  std::string first;
  std::getline(in, first);
  RasterFile r;
  if (first.rfind(kMagic, 0) == 0) {
    in.seekg(0);
    r.header = parse_header(in, path, true);
    r.bands = read_payload(in, r.header, path);
    return r;
  }
  auto sidecar = find_sidecar(path);
  if (!sidecar) throw InputError(path.string() + ": not a raster container and no .hdr sidecar found");
  std::ifstream hin(*sidecar);
  r.header = parse_header(hin, *sidecar, false);
  in.clear();
  in.seekg(0);
  r.bands = read_payload(in, r.header, path);
  return r;
}

void write_raster(const fs::path& path, const RasterFile& raster) {
  validate_for_write(raster);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << header_text(raster.header) << kEndHeader << "\n";
  write_payload(out, raster);
  if (!out) throw InputError("write failed for " + path.string());
}

void write_raster_with_sidecar(const fs::path& path, const RasterFile& raster) {
  validate_for_write(raster);
  fs::path hdr = path;
  hdr += ".hdr";
  {
    std::ofstream h(hdr, std::ios::trunc);
    h << header_text(raster.header);
    if (!h) throw InputError("cannot write " + hdr.string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  write_payload(out, raster);
}

RasterScene load_scene(const fs::path& path) {
  RasterFile raw = read_raster(path);
  RasterScene scene;
  scene.geometry = raw.header.geometry;
  scene.dataset_tag = raw.header.dataset_tag;
  const int rows = scene.geometry.height;
  const int cols = scene.geometry.width;
  scene.nodata = Mask(rows, cols, 0);

  auto find_band = [&](std::initializer_list<std::string_view> names) -> const Grid<double>* {
    for (std::size_t i = 0; i < raw.header.band_names.size(); ++i) {
      std::string n = upper(raw.header.band_names[i]);
      for (auto want : names) {
        if (n == want) return &raw.bands[i];
      }
    }
    return nullptr;
  };
  const Grid<double>* vh = find_band({"VH"});
  const Grid<double>* vv = find_band({"VV"});
  const Grid<double>* dem = find_band({"DEM", "ELEVATION"});
  if (!vh) throw InputError(path.string() + ": missing VH band");
  if (!vv) throw InputError(path.string() + ": missing VV band");

  auto to_float = [&](const Grid<double>& src) {
    Grid<float> out(rows, cols);
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (is_nodata(src[i], raw.header.nodata)) {
        scene.nodata[i] = 1;
        out[i] = 0.0f;
      } else {
        out[i] = static_cast<float>(src[i]);
      }
    }
    return out;
  };
  scene.vh = to_float(*vh);
  scene.vv = to_float(*vv);
  if (dem) scene.dem = to_float(*dem);
  if (upper(scene.dataset_tag) == "RGB_SAR_DEM" && !scene.dem) {
    throw InputError(path.string() + ": tagged RGB_SAR_DEM but has no DEM band");
  }
  return scene;
}

LabelMask load_labels(const fs::path& path, const ClassAggregation* aggregation) {
  RasterFile raw = read_raster(path);
  if (!is_integer_type(raw.header.dtype)) {
    throw InputError(path.string() + ": label raster must have an integer dtype, got " + to_string(raw.header.dtype));
  }
  if (raw.bands.size() != 1) throw InputError(path.string() + ": label raster must have exactly one band");
  LabelMask mask;
  mask.geometry = raw.header.geometry;
  mask.codes = Grid<std::uint8_t>(mask.geometry.height, mask.geometry.width, kNodataLabel);
  const auto& band = raw.bands.front();
  for (std::size_t i = 0; i < band.size(); ++i) {
    double v = band[i];
    if (is_nodata(v, raw.header.nodata)) continue;
    int code = static_cast<int>(v);
    if (aggregation) code = aggregation->map(code);
    if (code == kNodataLabel) continue;
    if (code >= 0 && code < kNumClasses) {
      mask.codes[i] = static_cast<std::uint8_t>(code);
    } else {
      ++mask.coerced;
    }
  }
  if (mask.coerced > 0) {
    log::warn("raster-io", path.string() + ": " + std::to_string(mask.coerced) +
                               " pixels had out-of-range class codes and were set to nodata");
  }
  return mask;
}

void write_scene(const fs::path& path, const RasterScene& scene, SampleType dtype) {
  RasterFile r;
  r.header.geometry = scene.geometry;
  r.header.dtype = dtype;
  r.header.dataset_tag = scene.dataset_tag;
  r.header.nodata = std::nan("");
  const bool integer = is_integer_type(dtype);
  if (integer) r.header.nodata = 0.0;
  auto widen = [&](const Grid<float>& g) {
    Grid<double> out(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
      out[i] = (!scene.nodata.empty() && scene.nodata[i]) ? *r.header.nodata : g[i];
    }
    return out;
  };
  r.header.band_names = {"VH", "VV"};
  r.bands.push_back(widen(scene.vh));
  r.bands.push_back(widen(scene.vv));
  if (scene.dem) {
    r.header.band_names.push_back("DEM");
    r.bands.push_back(widen(*scene.dem));
  }
  write_raster(path, r);
}

void write_labels(const fs::path& path, const LabelMask& mask) {
  RasterFile r;
  r.header.geometry = mask.geometry;
  r.header.dtype = SampleType::UInt8;
  r.header.band_names = {"class"};
  r.header.nodata = kNodataLabel;
  Grid<double> band(mask.codes.rows(), mask.codes.cols());
  for (std::size_t i = 0; i < band.size(); ++i) band[i] = mask.codes[i];
  r.bands.push_back(std::move(band));
  write_raster(path, r);
}

void check_pairing(const RasterScene& scene, const LabelMask& labels) {
  if (!(scene.geometry == labels.geometry) || !scene.vh.same_shape(labels.codes)) {
    throw PairingError("label geometry " + std::to_string(labels.width()) + "x" + std::to_string(labels.height()) +
                       " does not match scene geometry " + std::to_string(scene.width()) + "x" +
                       std::to_string(scene.height()));
  }
}

}  // namespace sarlc
