#include "sarlc/models/architectures.hpp"

namespace sarlc::nnl {

namespace {

// Output widths of the decoder convs per stage, deepest stage first.
std::vector<std::vector<int>> decoder_widths(Depth depth) {
  if (depth == Depth::Compact) return {{512}, {256}, {128}, {64}, {64}};
  return {{512, 512, 512}, {512, 512, 256}, {256, 256, 128}, {128, 64}, {64}};
}

}  // namespace

SegNetImpl::SegNetImpl(const ArchitectureSpec& spec) : tag_(encoder_tag("vgg16_bn", spec.width_scale, spec.depth)) {
  const double w = spec.width_scale;
  encoder = register_module("encoder", VggEncoder(spec.in_channels, w, spec.depth));
  decoder = register_module("decoder", torch::nn::ModuleList());
  int in = encoder->channels(4);
  const auto widths = decoder_widths(spec.depth);
  for (std::size_t d = 0; d < 5; ++d) {
    const int skip = encoder->channels(static_cast<int>(4 - d));
    in += skip;
    torch::nn::Sequential stage;
    for (int width : widths[d]) {
      const int out = scaled(width, w);
      stage->push_back(ConvBnRelu(in, out, 3));
      in = out;
    }
    decoder->push_back(stage);
  }
  classifier = register_module("classifier", torch::nn::Conv2d(conv_options(in, spec.num_classes, 3, 1, 1, true)));
}

torch::Tensor SegNetImpl::forward(const torch::Tensor& x) {
  namespace F = torch::nn::functional;
  auto stages = encoder->forward(x);
  torch::Tensor y = stages.back().pooled;
  unpool_count_ = 0;
  for (std::size_t d = 0; d < 5; ++d) {
    const auto& enc = stages[4 - d];
    y = torch::max_unpool2d(y, enc.indices, enc.pre_pool_size);
    ++unpool_count_;
    y = torch::cat({y, enc.features}, 1);
    y = decoder[d]->as<torch::nn::Sequential>()->forward(y);
  }
  return classifier(y);
}

FeatureFlags SegNetImpl::flags() const {
  FeatureFlags f;
  f.uses_pool_indices = true;
  return f;
}

std::string SegNetImpl::encoder_id() const { return tag_; }

}  // namespace sarlc::nnl
