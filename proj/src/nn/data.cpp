#include "sarlc/data.hpp"

#include <cstring>

#include "sarlc/errors.hpp"

namespace sarlc {

ManifestSource::ManifestSource(const SceneStore& scenes, std::vector<ImageletRecord> records, int imagelet_px)
    : scenes_(scenes), records_(std::move(records)), px_(imagelet_px) {
  for (const auto& r : records_) {
    if (!scenes_.count(r.scene_id)) {
      throw InputError("record (" + r.scene_id + ", " + std::to_string(r.row_offset) + ", " +
                       std::to_string(r.col_offset) + ") refers to a scene that is not loaded");
    }
  }
}

Imagelet ManifestSource::get(std::size_t index) const {
  const auto& r = records_.at(index);
  const auto& scene = scenes_.at(r.scene_id);
  return extract(scene.stack, scene.labels, r, px_);
}

Batch make_batch(const std::vector<Imagelet>& items) {
  if (items.empty()) throw InputError("empty batch");
  const int h = items.front().labels.rows();
  const int w = items.front().labels.cols();
  const auto b = static_cast<std::int64_t>(items.size());
  auto images = torch::empty({b, 3, h, w}, torch::kUInt8);
  auto labels = torch::empty({b, h, w}, torch::kUInt8);
  const auto plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  auto* img = images.data_ptr<std::uint8_t>();
  auto* lab = labels.data_ptr<std::uint8_t>();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    if (it.labels.rows() != h || it.labels.cols() != w) throw InputError("imagelets in a batch differ in size");
    for (std::size_t c = 0; c < 3; ++c) {
      if (!it.channels[c].same_shape(it.labels)) throw InputError("imagelet channel and label sizes differ");
      std::memcpy(img + (i * 3 + c) * plane, it.channels[c].data().data(), plane);
    }
    std::memcpy(lab + i * plane, it.labels.data().data(), plane);
  }
  return {images.to(torch::kFloat32), labels.to(torch::kInt64)};
}

Imagelet imagelet_from_stack(const ChannelStack& stack) {
  Imagelet im;
  im.channels = stack.channels;
  im.labels = Grid<std::uint8_t>(stack.height(), stack.width(), 0);
  return im;
}

}  // namespace sarlc
