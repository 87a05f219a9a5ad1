#include "sarlc/models/encoders.hpp"

namespace sarlc::nnl {

VggEncoderImpl::VggEncoderImpl(int in_channels, double width, Depth depth) {
  convs_ = depth == Depth::Full ? std::vector<int>{2, 2, 3, 3, 3} : std::vector<int>{1, 1, 1, 1, 1};
  const std::array<int, 5> widths{64, 128, 256, 512, 512};
  stages = register_module("stages", torch::nn::ModuleList());
  int in = in_channels;
  for (std::size_t s = 0; s < 5; ++s) {
    const int out = scaled(widths[s], width);
    torch::nn::Sequential stage;
    for (int c = 0; c < convs_[s]; ++c) {
      stage->push_back(ConvBnRelu(in, out, 3));
      in = out;
    }
    stages->push_back(stage);
    stage_channels_.push_back(out);
  }
}

std::vector<VggStageOutput> VggEncoderImpl::forward(const torch::Tensor& x) {
  namespace F = torch::nn::functional;
  std::vector<VggStageOutput> out;
  torch::Tensor y = x;
  for (const auto& stage : *stages) {
    VggStageOutput o;
    o.features = stage->as<torch::nn::Sequential>()->forward(y);
    o.pre_pool_size = {o.features.size(2), o.features.size(3)};
    auto [pooled, indices] = F::max_pool2d_with_indices(o.features, F::MaxPool2dFuncOptions(2).stride(2));
    o.pooled = pooled;
    o.indices = indices;
    y = pooled;
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace sarlc::nnl
