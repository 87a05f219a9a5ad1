#include "sarlc/models/architectures.hpp"

namespace sarlc::nnl {

PyramidPoolingImpl::PyramidPoolingImpl(int in, int branch_channels, std::vector<int> bins) : bins_(std::move(bins)) {
  branches = register_module("branches", torch::nn::ModuleList());
  for (int bin : bins_) {
    // The 1x1 bin has a single value per channel; batch norm needs more.
    if (bin == 1) {
      branches->push_back(torch::nn::Conv2d(conv_options(in, branch_channels, 1, 1, 1, true)));
    } else {
      branches->push_back(ConvBnRelu(in, branch_channels, 1));
    }
  }
}

torch::Tensor PyramidPoolingImpl::forward(const torch::Tensor& x) {
  std::vector<torch::Tensor> parts{x};
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    auto pooled = torch::adaptive_avg_pool2d(x, {bins_[i], bins_[i]});
    torch::Tensor y;
    if (auto* plain = branches[i]->as<torch::nn::Conv2d>()) {
      y = torch::relu(plain->forward(pooled));
    } else {
      y = branches[i]->as<ConvBnRelu>()->forward(pooled);
    }
    parts.push_back(resize_like(y, x));
  }
  return torch::cat(parts, 1);
}

PSPNetImpl::PSPNetImpl(const ArchitectureSpec& spec) : tag_(encoder_tag("resnet101", spec.width_scale, spec.depth)) {
  const double w = spec.width_scale;
  encoder = register_module("encoder", ResNetEncoder(w, spec.depth, 8));
  const int in = encoder->channels(4);
  const int branch = in / 4;
  ppm = register_module("ppm", PyramidPooling(in, branch, std::vector<int>{1, 2, 3, 6}));
  const int mid = scaled(256, w);
  bottleneck = register_module("bottleneck", ConvBnRelu(in + 4 * branch, mid, 3));
  dropout = register_module("dropout", torch::nn::Dropout2d(0.1));
  classifier = register_module("classifier", torch::nn::Conv2d(conv_options(mid, spec.num_classes, 1, 1, 1, true)));
}

torch::Tensor PSPNetImpl::forward(const torch::Tensor& x) {
  auto f = encoder->forward(x);
  return classifier(dropout(bottleneck(ppm(f.c4))));
}

FeatureFlags PSPNetImpl::flags() const {
  FeatureFlags f;
  f.pyramid_levels = 4;
  f.uses_atrous = true;
  return f;
}

std::string PSPNetImpl::encoder_id() const { return tag_; }

}  // namespace sarlc::nnl
