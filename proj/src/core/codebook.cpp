#include <fstream>
#include <sstream>

#include "sarlc/errors.hpp"
#include "sarlc/raster_io.hpp"

namespace sarlc {

const CodebookEntry& ClassCodebook::at(int id) const {
  for (const auto& e : entries) {
    if (e.id == id) return e;
  }
  throw InputError("class id " + std::to_string(id) + " not in codebook");
}

const ClassCodebook& default_codebook() {
  static const ClassCodebook book{{
      {0, "urban", {128, 0, 0}, "urban fabric, industrial and commercial units, construction sites, dump sites"},
      {1, "agriculture", {222, 184, 135},
       "agricultural and agro-forestry areas, fruit trees and berry plantations, pastures"},
      {2, "forest", {127, 255, 0}, "broad-leaved, coniferous and mixed forest, transitional woodland/shrub"},
      {3, "peatland", {173, 216, 230}, "peatland, bogs, inland marshes and salt marshes"},
      {4, "water", {0, 191, 255}, "rivers, lakes, sea"},
  }};
  return book;
}

std::uint8_t ClassAggregation::map(int code) const {
  auto it = table.find(code);
  return it == table.end() ? kNodataLabel : it->second;
}

namespace {

std::uint8_t parse_target(const std::string& token, const std::string& line) {
  static const std::map<std::string, std::uint8_t> names = {
      {"urban", 0}, {"agriculture", 1}, {"forest", 2}, {"peatland", 3}, {"water", 4}, {"nodata", kNodataLabel}};
  if (auto it = names.find(token); it != names.end()) return it->second;
  try {
    int v = std::stoi(token);
    if ((v >= 0 && v < kNumClasses) || v == kNodataLabel) return static_cast<std::uint8_t>(v);
  } catch (const std::exception&) {
  }
  throw InputError("bad aggregation target in line '" + line + "'");
}

}  // namespace

ClassAggregation read_aggregation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open aggregation table " + path.string());
  ClassAggregation agg;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int source = 0;
    std::string target;
    if (!(ls >> source)) continue;
    if (!(ls >> target)) throw InputError("aggregation line without target: '" + line + "'");
    agg.table[source] = parse_target(target, line);
  }
  return agg;
}

// CORINE level-3 codes grouped into the five superclasses. Green urban areas
// (141) go to forest. Open spaces with little vegetation (33x) have no
// superclass and are left as nodata.
ClassAggregation default_corine_aggregation() {
  ClassAggregation agg;
  for (int c : {111, 112, 121, 122, 123, 124, 131, 132, 133, 142}) agg.table[c] = 0;
  for (int c : {211, 212, 213, 221, 222, 223, 231, 241, 242, 243, 244, 321}) agg.table[c] = 1;
  for (int c : {141, 311, 312, 313, 322, 323, 324}) agg.table[c] = 2;
  for (int c : {411, 412, 421, 422, 423}) agg.table[c] = 3;
  for (int c : {511, 512, 521, 522, 523}) agg.table[c] = 4;
  return agg;
}

RgbImage render_map(const LabelMask& mask, const ClassCodebook& codebook) {
  std::array<std::array<std::uint8_t, 3>, 256> lut{};
  for (const auto& e : codebook.entries) {
    if (e.id >= 0 && e.id < 255) lut[static_cast<std::size_t>(e.id)] = e.rgb;
  }
  lut[kNodataLabel] = {0, 0, 0};
  RgbImage out(mask.codes.rows(), mask.codes.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lut[mask.codes[i]];
  return out;
}

}  // namespace sarlc
