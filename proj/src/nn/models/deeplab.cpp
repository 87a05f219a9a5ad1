#include "sarlc/models/architectures.hpp"

namespace sarlc::nnl {

AsppImpl::AsppImpl(int in, int out, std::vector<int> rates) : rates_(std::move(rates)) {
  point = register_module("point", ConvBnRelu(in, out, 1));
  atrous = register_module("atrous", torch::nn::ModuleList());
  for (int r : rates_) atrous->push_back(SeparableConv(in, out, r));
  // Pooled to 1x1, so no batch norm on this branch.
  image_pool = register_module("image_pool", torch::nn::Conv2d(conv_options(in, out, 1, 1, 1, true)));
  project = register_module("project", ConvBnRelu(out * static_cast<int>(rates_.size() + 2), out, 1));
  dropout = register_module("dropout", torch::nn::Dropout(0.1));
}

torch::Tensor AsppImpl::forward(const torch::Tensor& x) {
  std::vector<torch::Tensor> branches{point(x)};
  for (const auto& m : *atrous) branches.push_back(m->as<SeparableConv>()->forward(x));
  auto pooled = torch::relu(image_pool(torch::adaptive_avg_pool2d(x, {1, 1})));
  branches.push_back(pooled.expand({-1, -1, x.size(2), x.size(3)}));
  return dropout(project(torch::cat(branches, 1)));
}

DeepLabV3PlusImpl::DeepLabV3PlusImpl(const ArchitectureSpec& spec)
    : tag_(encoder_tag("resnet101", spec.width_scale, spec.depth)) {
  const double w = spec.width_scale;
  encoder = register_module("encoder", ResNetEncoder(w, spec.depth, 16));
  const int aspp_out = scaled(256, w);
  aspp = register_module("aspp", Aspp(encoder->channels(4), aspp_out, std::vector<int>{6, 12, 18}));
  const int low = scaled(48, w);
  low_level = register_module("low_level", ConvBnRelu(encoder->channels(1), low, 1));
  const int fused = scaled(256, w);
  fuse = register_module("fuse", torch::nn::Sequential(ConvBnRelu(aspp_out + low, fused, 3),
                                                       ConvBnRelu(fused, fused, 3)));
  classifier =
      register_module("classifier", torch::nn::Conv2d(conv_options(fused, spec.num_classes, 1, 1, 1, true)));
}

torch::Tensor DeepLabV3PlusImpl::forward(const torch::Tensor& x) {
  auto f = encoder->forward(x);
  auto context = aspp(f.c4);
  auto detail = low_level(f.c1);
  auto y = torch::cat({resize_like(context, detail), detail}, 1);
  return classifier(fuse->forward(y));
}

FeatureFlags DeepLabV3PlusImpl::flags() const {
  FeatureFlags f;
  f.uses_atrous = true;
  return f;
}

std::string DeepLabV3PlusImpl::encoder_id() const { return tag_; }

}  // namespace sarlc::nnl
