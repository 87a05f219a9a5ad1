#pragma once

#include <cmath>
#include <cstdint>

#include "sarlc/data.hpp"
#include "sarlc/preprocess.hpp"
#include "sarlc/random.hpp"
#include "sarlc/trainer.hpp"

namespace sarlc::testing {

// Imagelets split by one straight line into two land-cover classes, with
// class backscatter under 4-look speckle. They are laid side by side in one
// strip that is stretched as a whole, so brightness keeps its class meaning.
inline VectorSource two_region_imagelets(int count, int px, std::uint64_t seed) {
  // VV, VH amplitude per class.
  constexpr float kVv[5] = {0.45f, 0.20f, 0.25f, 0.12f, 0.03f};
  constexpr float kVh[5] = {0.12f, 0.04f, 0.08f, 0.025f, 0.006f};
  Rng rng(seed);
  auto speckle = [&] {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s -= std::log(1.0 - uniform01(rng));
    return static_cast<float>(std::sqrt(s / 4.0));
  };
  const int width = px * count;
  RasterScene s;
  s.geometry.width = width;
  s.geometry.height = px;
  s.vh = Grid<float>(px, width);
  s.vv = Grid<float>(px, width);
  s.nodata = Mask(px, width, 0);
  Grid<std::uint8_t> labels(px, width);
  for (int n = 0; n < count; ++n) {
    const auto a = static_cast<std::uint8_t>(uniform_below(rng, 5));
    const auto b = static_cast<std::uint8_t>((a + 1 + uniform_below(rng, 4)) % 5);
    const double angle = uniform01(rng) * 6.283185307179586;
    const double offset = (uniform01(rng) - 0.5) * 0.4 * px;
    for (int r = 0; r < px; ++r) {
      for (int c = 0; c < px; ++c) {
        const double side = (c - px / 2.0) * std::cos(angle) + (r - px / 2.0) * std::sin(angle) - offset;
        const std::uint8_t cls = side < 0 ? a : b;
        const int col = n * px + c;
        labels(r, col) = cls;
        s.vv(r, col) = kVv[cls] * speckle();
        s.vh(r, col) = kVh[cls] * speckle();
      }
    }
  }
  const ChannelStack stack = compose_stack(s, DatasetVariant::RgbSarRatio);
  VectorSource out;
  for (int n = 0; n < count; ++n) {
    Imagelet im;
    for (std::size_t ch = 0; ch < 3; ++ch) im.channels[ch] = crop(stack.channels[ch], 0, n * px, px, px);
    im.labels = crop(labels, 0, n * px, px, px);
    out.push_back(std::move(im));
  }
  return out;
}

}  // namespace sarlc::testing
