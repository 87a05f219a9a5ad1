#include "sarlc/models/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace sarlc::nnl {

int scaled(int channels, double scale, int minimum) {
  return std::max(minimum, static_cast<int>(std::lround(channels * scale)));
}

torch::nn::Conv2dOptions conv_options(int in, int out, int kernel, int stride, int dilation, bool bias, int groups) {
  return torch::nn::Conv2dOptions(in, out, kernel)
      .stride(stride)
      .padding(dilation * (kernel - 1) / 2)
      .dilation(dilation)
      .groups(groups)
      .bias(bias);
}

ConvBnReluImpl::ConvBnReluImpl(int in, int out, int kernel, int stride, int dilation, bool relu, int groups)
    : relu_(relu) {
  conv = register_module("conv", torch::nn::Conv2d(conv_options(in, out, kernel, stride, dilation, false, groups)));
  bn = register_module("bn", torch::nn::BatchNorm2d(out));
}

torch::Tensor ConvBnReluImpl::forward(const torch::Tensor& x) {
  auto y = bn(conv(x));
  return relu_ ? torch::relu(y) : y;
}

SeparableConvImpl::SeparableConvImpl(int in, int out, int dilation) {
  depthwise = register_module("depthwise", torch::nn::Conv2d(conv_options(in, in, 3, 1, dilation, false, in)));
  bn_depthwise = register_module("bn_depthwise", torch::nn::BatchNorm2d(in));
  pointwise = register_module("pointwise", torch::nn::Conv2d(conv_options(in, out, 1)));
  bn_pointwise = register_module("bn_pointwise", torch::nn::BatchNorm2d(out));
}

torch::Tensor SeparableConvImpl::forward(const torch::Tensor& x) {
  auto y = torch::relu(bn_depthwise(depthwise(x)));
  return torch::relu(bn_pointwise(pointwise(y)));
}

torch::Tensor resize_bilinear(const torch::Tensor& x, std::int64_t height, std::int64_t width) {
  if (x.size(2) == height && x.size(3) == width) return x;
  namespace F = torch::nn::functional;
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(std::vector<std::int64_t>{height, width})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

torch::Tensor resize_like(const torch::Tensor& x, const torch::Tensor& reference) {
  return resize_bilinear(x, reference.size(2), reference.size(3));
}

std::string encoder_tag(const std::string& family, double width, Depth depth) {
  if (width == 1.0 && depth == Depth::Full) return family;
  char buf[32];
  std::snprintf(buf, sizeof buf, "-w%.4g-", width);
  return family + buf + to_string(depth);
}

void init_weights(torch::nn::Module& module) {
  torch::NoGradGuard guard;
  for (auto& m : module.modules(/*include_self=*/true)) {
    if (auto* conv = m->as<torch::nn::Conv2d>()) {
      torch::nn::init::kaiming_normal_(conv->weight, 0.0, torch::kFanOut, torch::kReLU);
      if (conv->bias.defined()) conv->bias.zero_();
    } else if (auto* deconv = m->as<torch::nn::ConvTranspose2d>()) {
      torch::nn::init::kaiming_normal_(deconv->weight, 0.0, torch::kFanIn, torch::kReLU);
      if (deconv->bias.defined()) deconv->bias.zero_();
    } else if (auto* bn = m->as<torch::nn::BatchNorm2d>()) {
      bn->weight.fill_(1.0);
      bn->bias.zero_();
    }
  }
}

}  // namespace sarlc::nnl
