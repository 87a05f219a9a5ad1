#include "sarlc/predict.hpp"

#include <cstring>

#include "sarlc/errors.hpp"

namespace sarlc {

void TilingPlan::validate() const {
  if (tile_px < 1) throw ConfigError("tile_px must be positive");
  if (overlap_px < 0 || overlap_px >= tile_px) throw ConfigError("overlap_px must lie in [0, tile_px)");
}

namespace {

std::vector<int> axis_starts(int extent, int tile, int step) {
  std::vector<int> s;
  for (int p = 0;; p += step) {
    if (p + tile >= extent) {
      s.push_back(extent - tile);
      break;
    }
    s.push_back(p);
  }
  return s;
}

}  // namespace

std::vector<std::pair<int, int>> TilingPlan::tiles(int height, int width) const {
  validate();
  if (height < tile_px || width < tile_px) {
    throw InputError("scene " + std::to_string(height) + "x" + std::to_string(width) + " is smaller than one " +
                     std::to_string(tile_px) + " px tile");
  }
  const int step = tile_px - overlap_px;
  std::vector<std::pair<int, int>> out;
  for (int r : axis_starts(height, tile_px, step)) {
    for (int c : axis_starts(width, tile_px, step)) out.emplace_back(r, c);
  }
  return out;
}

LabelMask predict_stack(Network& net, const ChannelStack& stack, const TilingPlan& plan, int batch_size) {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  const int h = stack.height();
  const int w = stack.width();
  const auto corners = plan.tiles(h, w);
  const int t = plan.tile_px;
  net.check_input_size(t, t);
  torch::NoGradGuard guard;
  net.eval();

  const int k = net.spec().num_classes;
  auto sum = torch::zeros({k, h, w}, torch::kFloat32);
  auto hits = torch::zeros({1, h, w}, torch::kFloat32);
  for (std::size_t b = 0; b < corners.size(); b += static_cast<std::size_t>(batch_size)) {
    const auto e = std::min(corners.size(), b + static_cast<std::size_t>(batch_size));
    std::vector<Imagelet> items;
    for (std::size_t i = b; i < e; ++i) {
      Imagelet im;
      for (std::size_t c = 0; c < 3; ++c) im.channels[c] = crop(stack.channels[c], corners[i].first, corners[i].second, t, t);
      im.labels = Grid<std::uint8_t>(t, t, 0);
      items.push_back(std::move(im));
    }
    auto logits = net.forward_nchw(make_batch(items).images.to(net.device())).to(torch::kCPU).to(torch::kFloat32);
    for (std::size_t i = b; i < e; ++i) {
      const auto [r, c] = corners[i];
      using torch::indexing::Slice;
      sum.index({Slice(), Slice(r, r + t), Slice(c, c + t)}) += logits[static_cast<std::int64_t>(i - b)];
      hits.index({Slice(), Slice(r, r + t), Slice(c, c + t)}) += 1.0f;
    }
  }
  auto classes = (sum / hits).argmax(0).to(torch::kUInt8).contiguous();

  LabelMask out;
  out.geometry = stack.geometry;
  out.codes = Grid<std::uint8_t>(h, w);
  std::memcpy(out.codes.data().data(), classes.data_ptr<std::uint8_t>(), out.codes.size());
  if (!stack.nodata.empty()) {
    for (std::size_t i = 0; i < out.codes.size(); ++i) {
      if (stack.nodata[i]) out.codes[i] = kNodataLabel;
    }
  }
  return out;
}

LabelMask predict_scene(Network& net, const RasterScene& scene, DatasetVariant variant, const TilingPlan& plan,
                        const StretchSpec& stretch, int batch_size) {
  return predict_stack(net, compose_stack(scene, variant, stretch), plan, batch_size);
}

ManifestPrediction predict_manifest(Network& net, const DatasetManifest& manifest, Split split,
                                    const SceneStore& scenes, int batch_size, bool keep_predictions) {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  ManifestPrediction out;
  out.records = manifest.split(split);
  if (out.records.empty()) throw ConfigError(to_string(split) + " split is empty");
  ManifestSource source(scenes, out.records, manifest.spec.imagelet_px);
  torch::NoGradGuard guard;
  net.eval();
  for (std::size_t b = 0; b < source.size(); b += static_cast<std::size_t>(batch_size)) {
    const auto e = std::min(source.size(), b + static_cast<std::size_t>(batch_size));
    std::vector<Imagelet> items;
    for (std::size_t i = b; i < e; ++i) items.push_back(source.get(i));
    auto classes = net.forward_nchw(make_batch(items).images.to(net.device()))
                       .argmax(1)
                       .to(torch::kCPU)
                       .to(torch::kUInt8)
                       .contiguous();
    for (std::size_t i = b; i < e; ++i) {
      const auto& ref = items[i - b].labels;
      Grid<std::uint8_t> pred(ref.rows(), ref.cols());
      std::memcpy(pred.data().data(), classes[static_cast<std::int64_t>(i - b)].data_ptr<std::uint8_t>(), pred.size());
      for (std::size_t p = 0; p < pred.size(); ++p) {
        if (ref[p] == kNodataLabel) pred[p] = kNodataLabel;
      }
      accumulate(out.confusion, ref, pred);
      if (keep_predictions) out.predictions.push_back(std::move(pred));
    }
  }
  return out;
}

}  // namespace sarlc
