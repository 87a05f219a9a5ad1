#pragma once

#include <array>
#include <string>
#include <utility>

#include "sarlc/errors.hpp"
#include "sarlc/grid.hpp"
#include "sarlc/random.hpp"
#include "sarlc/sampler.hpp"

namespace sarlc {

// Geometric-only augmentations of a square tile. FlipHV coincides with
// Rot180 but is kept as its own kind, so uniform sampling over the seven
// kinds draws the half-turn twice as often as the other transforms.
enum class AugmentOp { Identity, Rot90, Rot180, Rot270, FlipH, FlipV, FlipHV };

inline constexpr std::array<AugmentOp, 7> kAllAugmentOps{AugmentOp::Identity, AugmentOp::Rot90,  AugmentOp::Rot180,
                                                         AugmentOp::Rot270,   AugmentOp::FlipH,  AugmentOp::FlipV,
                                                         AugmentOp::FlipHV};

std::string to_string(AugmentOp op);

// Where the pixel at (row, col) of an n x n tile lands. Rot90 turns the
// tile clockwise; FlipH mirrors left-right; FlipV mirrors top-bottom.
std::pair<int, int> map_coords(AugmentOp op, int n, int row, int col);

template <typename T>
Grid<T> transform(const Grid<T>& src, AugmentOp op) {
  if (src.rows() != src.cols()) throw InputError("augmentation requires a square tile");
  const int n = src.rows();
  Grid<T> out(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      auto [rr, cc] = map_coords(op, n, r, c);
      out(rr, cc) = src(r, c);
    }
  }
  return out;
}

// Same transform on every channel and on the labels.
Imagelet apply(AugmentOp op, const Imagelet& input);

// Uniform over the seven kinds.
AugmentOp sample_op(Rng& rng);

// Stream for one (imagelet, epoch) draw, independent of every other seed
// stream in a run.
Rng augment_stream(std::uint64_t augment_seed, std::uint64_t epoch, std::uint64_t sample_index);

}  // namespace sarlc
