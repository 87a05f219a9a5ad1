#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <torch/types.h>

#include "sarlc/preprocess.hpp"
#include "sarlc/raster_io.hpp"
#include "sarlc/sampler.hpp"

namespace sarlc {

// Random-access imagelet collection feeding the trainer and predictor.
class ImageletSource {
 public:
  virtual ~ImageletSource() = default;
  virtual std::size_t size() const = 0;
  virtual Imagelet get(std::size_t index) const = 0;
};

class VectorSource : public ImageletSource {
 public:
  VectorSource() = default;
  explicit VectorSource(std::vector<Imagelet> items) : items_(std::move(items)) {}
  std::size_t size() const override { return items_.size(); }
  Imagelet get(std::size_t index) const override { return items_.at(index); }
  void push_back(Imagelet im) { items_.push_back(std::move(im)); }

 private:
  std::vector<Imagelet> items_;
};

struct SceneData {
  ChannelStack stack;
  LabelMask labels;
};
using SceneStore = std::map<std::string, SceneData>;

// Windows of one manifest split cut on demand from in-memory scenes.
class ManifestSource : public ImageletSource {
 public:
  // Throws InputError naming the first record whose scene is missing.
  ManifestSource(const SceneStore& scenes, std::vector<ImageletRecord> records, int imagelet_px);
  std::size_t size() const override { return records_.size(); }
  Imagelet get(std::size_t index) const override;
  const ImageletRecord& record(std::size_t index) const { return records_.at(index); }

 private:
  const SceneStore& scenes_;
  std::vector<ImageletRecord> records_;
  int px_;
};

struct Batch {
  torch::Tensor images;  // B x 3 x H x W float32 in [0, 255]
  torch::Tensor labels;  // B x H x W int64, kNodataLabel where unlabelled
};

Batch make_batch(const std::vector<Imagelet>& items);
Imagelet imagelet_from_stack(const ChannelStack& stack);

}  // namespace sarlc
