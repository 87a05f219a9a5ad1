#include "sarlc/errors.hpp"
#include "sarlc/models/encoders.hpp"

namespace sarlc::nnl {

BottleneckImpl::BottleneckImpl(int in, int planes, int stride, int dilation) {
  const int out = planes * kExpansion;
  reduce = register_module("reduce", ConvBnRelu(in, planes, 1));
  spatial = register_module("spatial", ConvBnRelu(planes, planes, 3, stride, dilation));
  expand = register_module("expand", ConvBnRelu(planes, out, 1, 1, 1, /*relu=*/false));
  if (stride != 1 || in != out) {
    downsample = register_module(
        "downsample", torch::nn::Sequential(torch::nn::Conv2d(conv_options(in, out, 1, stride)),
                                            torch::nn::BatchNorm2d(out)));
  }
}

torch::Tensor BottleneckImpl::forward(const torch::Tensor& x) {
  auto y = expand(spatial(reduce(x)));
  auto shortcut = downsample ? downsample->forward(x) : x;
  return torch::relu(y + shortcut);
}

ResNetEncoderImpl::ResNetEncoderImpl(double width, Depth depth, int output_stride) : output_stride_(output_stride) {
  if (output_stride != 32 && output_stride != 16 && output_stride != 8) {
    throw SpecError("ResNet output stride must be 8, 16 or 32");
  }
  blocks_ = depth == Depth::Full ? std::vector<int>{3, 4, 23, 3} : std::vector<int>{1, 1, 2, 1};
  const int stem_channels = scaled(64, width);
  stem = register_module("stem", ConvBnRelu(3, stem_channels, 7, 2));

  // Stride and dilation per layer; dilation takes over once the target
  // output stride is reached.
  const std::array<int, 4> strides{1, 2, output_stride >= 16 ? 2 : 1, output_stride == 32 ? 2 : 1};
  const std::array<int, 4> dilations{1, 1, output_stride >= 16 ? 1 : 2,
                                     output_stride == 32 ? 1 : (output_stride == 16 ? 2 : 4)};
  int in = stem_channels;
  std::array<torch::nn::Sequential*, 4> layers{&layer1, &layer2, &layer3, &layer4};
  for (int l = 0; l < 4; ++l) {
    const int planes = scaled(64 << l, width);
    torch::nn::Sequential seq;
    for (int b = 0; b < blocks_[static_cast<std::size_t>(l)]; ++b) {
      seq->push_back(Bottleneck(in, planes, b == 0 ? strides[static_cast<std::size_t>(l)] : 1,
                                dilations[static_cast<std::size_t>(l)]));
      in = planes * BottleneckImpl::kExpansion;
    }
    *layers[static_cast<std::size_t>(l)] = register_module("layer" + std::to_string(l + 1), seq);
    layer_channels_.push_back(in);
  }
}

ResNetFeatures ResNetEncoderImpl::forward(const torch::Tensor& x) {
  namespace F = torch::nn::functional;
  auto y = F::max_pool2d(stem(x), F::MaxPool2dFuncOptions(3).stride(2).padding(1));
  ResNetFeatures f;
  f.c1 = layer1->forward(y);
  f.c2 = layer2->forward(f.c1);
  f.c3 = layer3->forward(f.c2);
  f.c4 = layer4->forward(f.c3);
  return f;
}

}  // namespace sarlc::nnl
