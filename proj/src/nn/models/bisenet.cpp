#include "sarlc/models/architectures.hpp"

namespace sarlc::nnl {

AttentionRefinementImpl::AttentionRefinementImpl(int in, int out) {
  conv = register_module("conv", ConvBnRelu(in, out, 3));
  attention = register_module("attention", torch::nn::Conv2d(conv_options(out, out, 1, 1, 1, true)));
}

torch::Tensor AttentionRefinementImpl::forward(const torch::Tensor& x) {
  auto y = conv(x);
  return y * torch::sigmoid(attention(torch::adaptive_avg_pool2d(y, {1, 1})));
}

FeatureFusionImpl::FeatureFusionImpl(int in, int out) {
  fuse = register_module("fuse", ConvBnRelu(in, out, 1));
  const int mid = std::max(1, out / 4);
  squeeze = register_module("squeeze", torch::nn::Conv2d(conv_options(out, mid, 1, 1, 1, true)));
  excite = register_module("excite", torch::nn::Conv2d(conv_options(mid, out, 1, 1, 1, true)));
}

torch::Tensor FeatureFusionImpl::forward(const torch::Tensor& spatial, const torch::Tensor& context) {
  auto f = fuse(torch::cat({spatial, context}, 1));
  auto att = torch::sigmoid(excite(torch::relu(squeeze(torch::adaptive_avg_pool2d(f, {1, 1})))));
  return f + f * att;
}

BiSeNetImpl::BiSeNetImpl(const ArchitectureSpec& spec) : context_width_(kContextWidth * spec.width_scale),
      tag_(encoder_tag("resnet101", context_width_, spec.depth)) {
  const double w = spec.width_scale;
  const int s1 = scaled(64, w), s2 = scaled(128, w), s3 = scaled(256, w);
  spatial = register_module("spatial", torch::nn::Sequential(ConvBnRelu(spec.in_channels, s1, 3, 2),
                                                             ConvBnRelu(s1, s2, 3, 2), ConvBnRelu(s2, s3, 3, 2)));
  encoder = register_module("encoder", ResNetEncoder(context_width_, spec.depth, 32));
  const int ctx = scaled(128, w);
  arm16 = register_module("arm16", AttentionRefinement(encoder->channels(3), ctx));
  arm32 = register_module("arm32", AttentionRefinement(encoder->channels(4), ctx));
  // Global average of the deepest features: 1x1 maps, no batch norm.
  global_context =
      register_module("global_context", torch::nn::Conv2d(conv_options(encoder->channels(4), ctx, 1, 1, 1, true)));
  refine32 = register_module("refine32", ConvBnRelu(ctx, ctx, 3));
  refine16 = register_module("refine16", ConvBnRelu(ctx, ctx, 3));
  const int fused = scaled(256, w);
  ffm = register_module("ffm", FeatureFusion(s3 + ctx, fused));
  head = register_module("head", ConvBnRelu(fused, fused, 3));
  classifier = register_module("classifier", torch::nn::Conv2d(conv_options(fused, spec.num_classes, 1, 1, 1, true)));
}

torch::Tensor BiSeNetImpl::forward(const torch::Tensor& x) {
  auto sp = spatial->forward(x);
  auto f = encoder->forward(x);
  auto global = torch::relu(global_context(torch::adaptive_avg_pool2d(f.c4, {1, 1})));
  auto c32 = arm32(f.c4) + global;
  c32 = refine32(resize_like(c32, f.c3));
  auto c16 = arm16(f.c3) + c32;
  c16 = refine16(resize_like(c16, sp));
  return classifier(head(ffm(sp, c16)));
}

FeatureFlags BiSeNetImpl::flags() const {
  FeatureFlags f;
  f.has_spatial_and_context_paths = true;
  return f;
}

std::string BiSeNetImpl::encoder_id() const { return tag_; }

}  // namespace sarlc::nnl
