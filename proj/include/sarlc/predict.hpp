#pragma once

#include <utility>
#include <vector>

#include "sarlc/data.hpp"
#include "sarlc/evaluate.hpp"
#include "sarlc/models.hpp"

namespace sarlc {

struct TilingPlan {
  int tile_px = 512;
  int overlap_px = 64;
  void validate() const;  // throws ConfigError
  // Top-left corners in row-major order. Tiles step by tile - overlap; the
  // last tile of a row or column is shifted inward to end on the boundary.
  // Throws InputError if the scene is smaller than one tile.
  std::vector<std::pair<int, int>> tiles(int height, int width) const;
};

// Logits summed over overlapping tiles and averaged before the argmax.
// Pixels that are nodata in the stack come out as nodata.
LabelMask predict_stack(Network& net, const ChannelStack& stack, const TilingPlan& plan, int batch_size = 1);

// Builds the variant's channel stack from raw bands first.
LabelMask predict_scene(Network& net, const RasterScene& scene, DatasetVariant variant, const TilingPlan& plan,
                        const StretchSpec& stretch = {}, int batch_size = 1);

struct ManifestPrediction {
  std::vector<ImageletRecord> records;
  std::vector<Grid<std::uint8_t>> predictions;  // empty unless kept
  ConfusionMatrix confusion;
};

ManifestPrediction predict_manifest(Network& net, const DatasetManifest& manifest, Split split,
                                    const SceneStore& scenes, int batch_size = 1, bool keep_predictions = true);

}  // namespace sarlc
