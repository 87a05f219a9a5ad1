#include "sarlc/augment.hpp"

namespace sarlc {

std::string to_string(AugmentOp op) {
  switch (op) {
    case AugmentOp::Identity: return "IDENTITY";
    case AugmentOp::Rot90: return "ROT90";
    case AugmentOp::Rot180: return "ROT180";
    case AugmentOp::Rot270: return "ROT270";
    case AugmentOp::FlipH: return "FLIP_H";
    case AugmentOp::FlipV: return "FLIP_V";
    case AugmentOp::FlipHV: return "FLIP_HV";
  }
  return "?";
}

std::pair<int, int> map_coords(AugmentOp op, int n, int row, int col) {
  const int last = n - 1;
  switch (op) {
    case AugmentOp::Identity: return {row, col};
    case AugmentOp::Rot90: return {col, last - row};
    case AugmentOp::Rot180: return {last - row, last - col};
    case AugmentOp::Rot270: return {last - col, row};
    case AugmentOp::FlipH: return {row, last - col};
    case AugmentOp::FlipV: return {last - row, col};
    case AugmentOp::FlipHV: return {last - row, last - col};
  }
  return {row, col};
}

Imagelet apply(AugmentOp op, const Imagelet& input) {
  for (const auto& ch : input.channels) {
    if (!ch.same_shape(input.labels)) throw InputError("augmentation: channel and label shapes differ");
  }
  if (op == AugmentOp::Identity) {
    if (input.labels.rows() != input.labels.cols()) throw InputError("augmentation requires a square tile");
    return input;
  }
  Imagelet out;
  for (std::size_t c = 0; c < 3; ++c) out.channels[c] = transform(input.channels[c], op);
  out.labels = transform(input.labels, op);
  return out;
}

AugmentOp sample_op(Rng& rng) { return kAllAugmentOps[uniform_below(rng, kAllAugmentOps.size())]; }

Rng augment_stream(std::uint64_t augment_seed, std::uint64_t epoch, std::uint64_t sample_index) {
  // Salt keeps this stream disjoint from shuffle/init streams seeded with the same integer.
  constexpr std::uint64_t kSalt = 0x6175676d656e7421ull;
  return Rng(hash_combine(hash_combine(hash_combine(kSalt, augment_seed), epoch), sample_index));
}

}  // namespace sarlc
