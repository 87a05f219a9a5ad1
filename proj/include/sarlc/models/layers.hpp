#pragma once

#include <string>

#include <torch/torch.h>

#include "sarlc/models.hpp"

namespace sarlc::nnl {

// Channel count after width scaling, never below `minimum`.
int scaled(int channels, double scale, int minimum = 4);

// 'same' padding for odd kernels, bias off by default (BN follows).
torch::nn::Conv2dOptions conv_options(int in, int out, int kernel, int stride = 1, int dilation = 1,
                                      bool bias = false, int groups = 1);

class ConvBnReluImpl : public torch::nn::Module {
 public:
  ConvBnReluImpl(int in, int out, int kernel, int stride = 1, int dilation = 1, bool relu = true, int groups = 1);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv{nullptr};
  torch::nn::BatchNorm2d bn{nullptr};

 private:
  bool relu_;
};
TORCH_MODULE(ConvBnRelu);

// Depthwise 3x3 then pointwise 1x1, each followed by BN and ReLU.
class SeparableConvImpl : public torch::nn::Module {
 public:
  SeparableConvImpl(int in, int out, int dilation = 1);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d depthwise{nullptr};
  torch::nn::BatchNorm2d bn_depthwise{nullptr};
  torch::nn::Conv2d pointwise{nullptr};
  torch::nn::BatchNorm2d bn_pointwise{nullptr};
};
TORCH_MODULE(SeparableConv);

torch::Tensor resize_bilinear(const torch::Tensor& x, std::int64_t height, std::int64_t width);
torch::Tensor resize_like(const torch::Tensor& x, const torch::Tensor& reference);

// Weight-set tag: the family name at full width and depth, otherwise the
// family with its width multiplier and depth.
std::string encoder_tag(const std::string& family, double width, Depth depth);

// He-normal conv weights, unit BN, zero biases.
void init_weights(torch::nn::Module& module);

}  // namespace sarlc::nnl
