#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "sarlc/errors.hpp"
#include "sarlc/sampler.hpp"

namespace sarlc {
namespace {

constexpr std::string_view kFormat = "sarlc-manifest-1";
constexpr std::string_view kColumns = "scene_id,row,col,split,lon,lat";

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw InputError("manifest: bad number for " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

template <typename Int>
Int parse_int(std::string_view s, std::string_view what) {
  Int v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw InputError("manifest: bad integer for " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

void write_manifest(std::ostream& out, const DatasetManifest& m) {
  const auto& s = m.spec;
  out << "# sarlc imagelet manifest\n";
  out << "format=" << kFormat << "\n";
  out << "variant=" << to_string(m.variant) << "\n";
  out << "imagelet_px=" << s.imagelet_px << "\n";
  out << "per_mosaic_total=" << s.per_mosaic_total << "\n";
  out << "per_mosaic_test=" << s.per_mosaic_test << "\n";
  out << "per_mosaic_traindev=" << s.per_mosaic_traindev << "\n";
  out << "test_lon_min=" << shortest(s.test_lon_min) << "\n";
  out << "test_lon_max=" << shortest(s.test_lon_max) << "\n";
  out << "train_fraction_of_traindev=" << shortest(s.train_fraction_of_traindev) << "\n";
  out << "rng_seed=" << s.rng_seed << "\n";
  out << "attempt_budget_factor=" << s.attempt_budget_factor << "\n";
  out << "max_nodata_fraction=" << shortest(s.max_nodata_fraction) << "\n";
  out << "records=" << m.records.size() << "\n";
  out << kColumns << "\n";
  for (const auto& r : m.records) {
    out << r.scene_id << ',' << r.row_offset << ',' << r.col_offset << ',' << to_string(r.split) << ','
        << shortest(r.centroid_lon) << ',' << shortest(r.centroid_lat) << '\n';
  }
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw InputError("cannot write manifest " + path.string());
  write_manifest(out, m);
  if (!out) throw InputError("write failed for manifest " + path.string());
}

DatasetManifest read_manifest(std::istream& in) {
  DatasetManifest m;
  std::map<std::string, std::string> header;
  std::string line;
  bool in_records = false;
  std::size_t expected = 0;
  bool have_count = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!in_records) {
      if (line.empty() || line[0] == '#') continue;
      if (line == kColumns) {
        in_records = true;
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string::npos) throw InputError("manifest: bad header line '" + line + "'");
      header[line.substr(0, eq)] = line.substr(eq + 1);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 6) throw InputError("manifest: record needs 6 fields: '" + line + "'");
    ImageletRecord r;
    r.scene_id = std::string(f[0]);
    r.row_offset = parse_int<int>(f[1], "row");
    r.col_offset = parse_int<int>(f[2], "col");
    r.split = parse_split(std::string(f[3]));
    r.centroid_lon = parse_double(f[4], "lon");
    r.centroid_lat = parse_double(f[5], "lat");
    m.records.push_back(std::move(r));
  }
  if (!in_records) throw InputError("manifest: missing record table");

  auto get = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw InputError("manifest: missing header key " + key);
    return it->second;
  };
  if (get("format") != kFormat) throw InputError("manifest: unsupported format " + get("format"));
  m.variant = parse_dataset_variant(get("variant"));
  auto& s = m.spec;
  s.imagelet_px = parse_int<int>(get("imagelet_px"), "imagelet_px");
  s.per_mosaic_total = parse_int<int>(get("per_mosaic_total"), "per_mosaic_total");
  s.per_mosaic_test = parse_int<int>(get("per_mosaic_test"), "per_mosaic_test");
  s.per_mosaic_traindev = parse_int<int>(get("per_mosaic_traindev"), "per_mosaic_traindev");
  s.test_lon_min = parse_double(get("test_lon_min"), "test_lon_min");
  s.test_lon_max = parse_double(get("test_lon_max"), "test_lon_max");
  s.train_fraction_of_traindev = parse_double(get("train_fraction_of_traindev"), "train_fraction_of_traindev");
  s.rng_seed = parse_int<std::uint64_t>(get("rng_seed"), "rng_seed");
  if (header.count("attempt_budget_factor")) {
    s.attempt_budget_factor = parse_int<int>(get("attempt_budget_factor"), "attempt_budget_factor");
  }
  if (header.count("max_nodata_fraction")) {
    s.max_nodata_fraction = parse_double(get("max_nodata_fraction"), "max_nodata_fraction");
  }
  if (header.count("records")) {
    expected = parse_int<std::size_t>(get("records"), "records");
    have_count = true;
  }
  if (have_count && expected != m.records.size()) {
    throw InputError("manifest: header announces " + std::to_string(expected) + " records, found " +
                     std::to_string(m.records.size()));
  }
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open manifest " + path.string());
  return read_manifest(in);
}

}  // namespace sarlc
