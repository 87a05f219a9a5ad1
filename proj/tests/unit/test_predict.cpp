#include <set>

#include <torch/torch.h>

#include "sarlc/errors.hpp"
#include "sarlc/predict.hpp"
#include "test_support.hpp"
#include "doctest_torch.hpp"

using namespace sarlc;

namespace {

Network tiny_net() {
  auto s = ArchitectureSpec::make(Architecture::MobileUNet, 0.125, Depth::Compact);
  s.init_seed = 21;
  Network n = build(s);
  n.eval();
  return n;
}

ChannelStack stack_of(int h, int w, std::uint64_t seed) {
  return compose_stack(testing::random_scene(w, h, seed), DatasetVariant::RgbSarRatio);
}

// Forward + argmax of one window.
Grid<std::uint8_t> direct(Network& net, const ChannelStack& s, int r, int c, int px) {
  Imagelet im;
  for (std::size_t ch = 0; ch < 3; ++ch) im.channels[ch] = crop(s.channels[ch], r, c, px, px);
  im.labels = Grid<std::uint8_t>(px, px, 0);
  torch::NoGradGuard g;
  auto cls = net.forward_nchw(make_batch({im}).images).argmax(1).to(torch::kUInt8).contiguous();
  Grid<std::uint8_t> out(px, px);
  std::copy_n(cls.data_ptr<std::uint8_t>(), out.size(), out.data().begin());
  return out;
}

}  // namespace

TEST_CASE("tiling plan: validation, order, edge anchoring and coverage") {
  TilingPlan p;
  CHECK(p.tile_px == 512);
  CHECK(p.overlap_px == 64);
  CHECK_NOTHROW(p.validate());
  CHECK_THROWS_AS((TilingPlan{64, 64}.validate()), ConfigError);
  CHECK_THROWS_AS((TilingPlan{64, -1}.validate()), ConfigError);
  CHECK_THROWS_AS(p.tiles(511, 1024), InputError);

  const auto t = p.tiles(768, 768);
  // Steps of 448; the second tile of each axis is pulled back to end at 768.
  CHECK((t == std::vector<std::pair<int, int>>{{0, 0}, {0, 256}, {256, 0}, {256, 256}}));
  CHECK((p.tiles(512, 512) == std::vector<std::pair<int, int>>{{0, 0}}));

  for (auto [h, w] : {std::pair{700, 1300}, std::pair{512, 2000}, std::pair{1000, 1001}}) {
    Grid<int> hits(h, w, 0);
    for (auto [r, c] : p.tiles(h, w)) {
      CHECK(r >= 0);
      CHECK(c >= 0);
      CHECK(r + p.tile_px <= h);
      CHECK(c + p.tile_px <= w);
      for (int y = r; y < r + p.tile_px; ++y) {
        for (int x = c; x < c + p.tile_px; ++x) ++hits(y, x);
      }
    }
    for (int v : hits.data()) CHECK_UNARY(v >= 1);
  }
  // Row-major.
  const auto many = TilingPlan{64, 0}.tiles(128, 192);
  CHECK((many == std::vector<std::pair<int, int>>{{0, 0}, {0, 64}, {0, 128}, {64, 0}, {64, 64}, {64, 128}}));
}

TEST_CASE("a scene of exactly one tile equals a single forward pass") {
  Network net = tiny_net();
  const auto s = stack_of(64, 64, 1);
  const auto m = predict_stack(net, s, TilingPlan{64, 0});
  CHECK(m.codes == direct(net, s, 0, 0, 64));
  CHECK(m.geometry == s.geometry);
}

TEST_CASE("without overlap the stitched map is the concatenation of tile predictions") {
  Network net = tiny_net();
  const auto s = stack_of(128, 192, 2);
  const TilingPlan plan{64, 0};
  const auto m = predict_stack(net, s, plan, 4);
  for (auto [r, c] : plan.tiles(128, 192)) {
    CHECK(crop(m.codes, r, c, 64, 64) == direct(net, s, r, c, 64));
  }
}

TEST_CASE("overlapping tiles cover the scene and stitch deterministically") {
  Network net = tiny_net();
  const auto s = stack_of(160, 160, 3);
  const TilingPlan plan{64, 16};
  const auto a = predict_stack(net, s, plan, 1);
  const auto b = predict_stack(net, s, plan, 1);
  CHECK(a.codes.rows() == 160);
  CHECK(a.codes.cols() == 160);
  CHECK(a.codes == b.codes);
  for (auto v : a.codes.data()) CHECK_UNARY(v < kNumClasses);
  // Batching tiles together does not change the result.
  CHECK(predict_stack(net, s, plan, 3).codes == a.codes);
}

TEST_CASE("nodata input pixels come out as nodata") {
  Network net = tiny_net();
  auto scene = testing::random_scene(96, 64, 4);
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 20; ++c) scene.nodata(r, c) = 1;
  }
  const auto m = predict_scene(net, scene, DatasetVariant::RgbSarRatio, TilingPlan{64, 32});
  for (int r = 0; r < 64; ++r) {
    for (int c = 0; c < 96; ++c) CHECK((m.codes(r, c) == kNodataLabel) == (r < 10 && c < 20));
  }
  CHECK_THROWS_AS(predict_scene(net, scene, DatasetVariant::RgbSarDem, TilingPlan{64, 0}), InputError);
  CHECK_THROWS_AS(predict_stack(net, stack_of(64, 64, 1), TilingPlan{48, 0}), ShapeError);
}

TEST_CASE("manifest prediction accumulates a confusion over labelled pixels") {
  Network net = tiny_net();
  SceneStore scenes;
  auto scene = testing::random_scene(128, 128, 5);
  LabelMask labels;
  labels.geometry = scene.geometry;
  labels.codes = Grid<std::uint8_t>(128, 128);
  for (std::size_t i = 0; i < labels.codes.size(); ++i) labels.codes[i] = i % 7 == 0 ? kNodataLabel : i % 5;
  scenes.emplace("A", SceneData{compose_stack(scene, DatasetVariant::RgbSarRatio), labels});

  DatasetManifest m;
  m.spec.imagelet_px = 64;
  m.records = {{"A", 0, 0, Split::Test}, {"A", 64, 64, Split::Test}, {"A", 0, 0, Split::Test},
               {"A", 0, 64, Split::Train}};
  const auto p = predict_manifest(net, m, Split::Test, scenes, 2);
  REQUIRE(p.records.size() == 3);
  REQUIRE(p.predictions.size() == 3);
  CHECK(p.predictions[0] == p.predictions[2]);

  std::uint64_t labelled = 0;
  for (const auto& r : p.records) {
    const auto window = crop(labels.codes, r.row_offset, r.col_offset, 64, 64);
    for (auto v : window.data()) labelled += v != kNodataLabel;
  }
  CHECK(p.confusion.total() == labelled);
  for (std::size_t i = 0; i < p.predictions[0].size(); ++i) {
    const auto ref = crop(labels.codes, 0, 0, 64, 64)[i];
    CHECK((p.predictions[0][i] == kNodataLabel) == (ref == kNodataLabel));
  }

  CHECK(predict_manifest(net, m, Split::Test, scenes, 1, false).predictions.empty());
  CHECK(predict_manifest(net, m, Split::Test, scenes, 1, false).confusion == p.confusion);
  CHECK_THROWS_AS(predict_manifest(net, m, Split::Dev, scenes), ConfigError);

  m.records.push_back({"B", 0, 0, Split::Test});
  try {
    predict_manifest(net, m, Split::Test, scenes);
    FAIL("missing scene accepted");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("(B, 0, 0)") != std::string::npos);
  }
}
