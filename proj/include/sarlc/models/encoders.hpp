#pragma once

#include <vector>

#include "sarlc/models.hpp"
#include "sarlc/models/layers.hpp"

namespace sarlc::nnl {

class BottleneckImpl : public torch::nn::Module {
 public:
  static constexpr int kExpansion = 4;
  BottleneckImpl(int in, int planes, int stride, int dilation);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  ConvBnRelu reduce{nullptr};
  ConvBnRelu spatial{nullptr};
  ConvBnRelu expand{nullptr};
  torch::nn::Sequential downsample{nullptr};
};
TORCH_MODULE(Bottleneck);

struct ResNetFeatures {
  torch::Tensor c1;  // after layer1, stride 4
  torch::Tensor c2;  // stride 8
  torch::Tensor c3;  // stride 16, or 8 when dilated
  torch::Tensor c4;  // stride 32, 16 or 8
};

// ResNet-101 bottleneck encoder, blocks [3, 4, 23, 3] at Depth::Full.
// output_stride 16 and 8 replace the last strides with dilation.
class ResNetEncoderImpl : public torch::nn::Module {
 public:
  ResNetEncoderImpl(double width, Depth depth, int output_stride);
  ResNetFeatures forward(const torch::Tensor& x);

  int channels(int layer) const { return layer_channels_.at(static_cast<std::size_t>(layer - 1)); }
  int output_stride() const { return output_stride_; }
  const std::vector<int>& blocks() const { return blocks_; }

 private:
  ConvBnRelu stem{nullptr};
  torch::nn::Sequential layer1{nullptr}, layer2{nullptr}, layer3{nullptr}, layer4{nullptr};
  std::vector<int> blocks_;
  std::vector<int> layer_channels_;
  int output_stride_;
};
TORCH_MODULE(ResNetEncoder);

struct VggStageOutput {
  torch::Tensor features;  // before pooling
  torch::Tensor pooled;
  torch::Tensor indices;
  std::vector<std::int64_t> pre_pool_size;
};

// VGG16 with batch norm: stages of [2, 2, 3, 3, 3] 3x3 convs, each stage
// closed by a 2x2 max pool that keeps its argmax indices.
class VggEncoderImpl : public torch::nn::Module {
 public:
  VggEncoderImpl(int in_channels, double width, Depth depth);
  std::vector<VggStageOutput> forward(const torch::Tensor& x);

  int channels(int stage) const { return stage_channels_.at(static_cast<std::size_t>(stage)); }
  const std::vector<int>& convs_per_stage() const { return convs_; }

 private:
  torch::nn::ModuleList stages{nullptr};
  std::vector<int> stage_channels_;
  std::vector<int> convs_;
};
TORCH_MODULE(VggEncoder);

}  // namespace sarlc::nnl
