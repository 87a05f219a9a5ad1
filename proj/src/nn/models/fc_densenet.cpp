#include "sarlc/models/architectures.hpp"

namespace sarlc::nnl {

namespace {

constexpr double kDropout = 0.2;

struct DensePlan {
  std::vector<int> down;
  int bottleneck;
  std::vector<int> up;
};

DensePlan plan(Depth d) {
  if (d == Depth::Compact) return {{2, 2, 2, 2, 2}, 3, {2, 2, 2, 2, 2}};
  return {{4, 5, 7, 10, 12}, 15, {12, 10, 7, 5, 4}};
}

}  // namespace

DenseLayerImpl::DenseLayerImpl(int in, int growth, double dropout) {
  bn = register_module("bn", torch::nn::BatchNorm2d(in));
  conv = register_module("conv", torch::nn::Conv2d(conv_options(in, growth, 3, 1, 1, true)));
  drop = register_module("drop", torch::nn::Dropout(dropout));
}

torch::Tensor DenseLayerImpl::forward(const torch::Tensor& x) { return drop(conv(torch::relu(bn(x)))); }

DenseBlockImpl::DenseBlockImpl(int in, int growth, int n, double dropout) : in_(in), growth_(growth) {
  layers = register_module("layers", torch::nn::ModuleList());
  for (int i = 0; i < n; ++i) layers->push_back(DenseLayer(in + i * growth, growth, dropout));
}

torch::Tensor DenseBlockImpl::forward(const torch::Tensor& x) {
  torch::Tensor stack = x;
  for (const auto& m : *layers) stack = torch::cat({stack, m->as<DenseLayer>()->forward(stack)}, 1);
  return stack;
}

torch::Tensor DenseBlockImpl::forward_new(const torch::Tensor& x) {
  torch::Tensor stack = x;
  std::vector<torch::Tensor> fresh;
  for (const auto& m : *layers) {
    auto y = m->as<DenseLayer>()->forward(stack);
    fresh.push_back(y);
    stack = torch::cat({stack, y}, 1);
  }
  return torch::cat(fresh, 1);
}

TransitionDownImpl::TransitionDownImpl(int channels, double dropout) {
  bn = register_module("bn", torch::nn::BatchNorm2d(channels));
  conv = register_module("conv", torch::nn::Conv2d(conv_options(channels, channels, 1, 1, 1, true)));
  drop = register_module("drop", torch::nn::Dropout(dropout));
}

torch::Tensor TransitionDownImpl::forward(const torch::Tensor& x) {
  namespace F = torch::nn::functional;
  return F::max_pool2d(drop(conv(torch::relu(bn(x)))), F::MaxPool2dFuncOptions(2).stride(2));
}

FcDenseEncoderImpl::FcDenseEncoderImpl(int in_channels, int stem_channels, int growth, const std::vector<int>& sizes,
                                       double dropout) {
  stem = register_module("stem", torch::nn::Conv2d(conv_options(in_channels, stem_channels, 3, 1, 1, true)));
  blocks = register_module("blocks", torch::nn::ModuleList());
  downs = register_module("downs", torch::nn::ModuleList());
  int c = stem_channels;
  for (int n : sizes) {
    DenseBlock block(c, growth, n, dropout);
    c = block->out_channels();
    blocks->push_back(block);
    downs->push_back(TransitionDown(c, dropout));
    skip_channels_.push_back(c);
  }
}

std::pair<torch::Tensor, std::vector<torch::Tensor>> FcDenseEncoderImpl::forward(const torch::Tensor& x) {
  torch::Tensor y = stem(x);
  std::vector<torch::Tensor> skips;
  for (std::size_t i = 0; i < blocks->size(); ++i) {
    y = blocks[i]->as<DenseBlock>()->forward(y);
    skips.push_back(y);
    y = downs[i]->as<TransitionDown>()->forward(y);
  }
  return {y, skips};
}

FcDenseNetImpl::FcDenseNetImpl(const ArchitectureSpec& spec)
    : growth_(scaled(16, spec.width_scale, 2)), tag_(encoder_tag("fc_densenet103", spec.width_scale, spec.depth)) {
  const DensePlan p = plan(spec.depth);
  encoder = register_module(
      "encoder", FcDenseEncoder(spec.in_channels, scaled(48, spec.width_scale), growth_, p.down, kDropout));
  bottleneck = register_module("bottleneck", DenseBlock(encoder->out_channels(), growth_, p.bottleneck, kDropout));
  ups = register_module("ups", torch::nn::ModuleList());
  up_blocks = register_module("up_blocks", torch::nn::ModuleList());
  int fresh = p.bottleneck * growth_;
  int out = 0;
  const auto& skips = encoder->skip_channels();
  for (std::size_t i = 0; i < p.up.size(); ++i) {
    ups->push_back(torch::nn::ConvTranspose2d(
        torch::nn::ConvTranspose2dOptions(fresh, fresh, 3).stride(2).padding(1).output_padding(1)));
    const int in = fresh + skips[skips.size() - 1 - i];
    DenseBlock block(in, growth_, p.up[i], kDropout);
    out = block->out_channels();
    fresh = p.up[i] * growth_;
    up_blocks->push_back(block);
  }
  classifier = register_module("classifier", torch::nn::Conv2d(conv_options(out, spec.num_classes, 1, 1, 1, true)));
}

torch::Tensor FcDenseNetImpl::forward(const torch::Tensor& x) {
  auto [y, skips] = encoder->forward(x);
  y = bottleneck->forward_new(y);
  const std::size_t n = up_blocks->size();
  for (std::size_t i = 0; i < n; ++i) {
    y = ups[i]->as<torch::nn::ConvTranspose2d>()->forward(y);
    y = torch::cat({y, skips[skips.size() - 1 - i]}, 1);
    auto* block = up_blocks[i]->as<DenseBlock>();
    // Only the last block hands its full concatenation to the classifier.
    y = i + 1 < n ? block->forward_new(y) : block->forward(y);
  }
  return classifier(y);
}

FeatureFlags FcDenseNetImpl::flags() const {
  FeatureFlags f;
  f.has_dense_skip_concat = true;
  return f;
}

std::string FcDenseNetImpl::encoder_id() const { return tag_; }

}  // namespace sarlc::nnl
