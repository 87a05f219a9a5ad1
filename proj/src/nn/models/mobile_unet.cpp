#include "sarlc/models/architectures.hpp"

namespace sarlc::nnl {

namespace {

std::vector<std::vector<int>> encoder_plan(Depth d) {
  if (d == Depth::Compact) return {{64}, {128}, {256}, {512}, {512}};
  return {{64}, {128, 128}, {256, 256, 256}, {512, 512, 512}, {512, 512, 512}};
}

// Transposed-conv width, then the separable stack, per decoder stage.
std::vector<std::pair<int, std::vector<int>>> decoder_plan(Depth d) {
  if (d == Depth::Compact) return {{512, {512}}, {512, {256}}, {256, {128}}, {128, {64}}, {64, {64}}};
  return {{512, {512, 512, 512}}, {512, {512, 512, 256}}, {256, {256, 256, 128}}, {128, {128, 64}}, {64, {64, 64}}};
}

torch::nn::Sequential separable_stack(int& in, const std::vector<int>& widths, double w) {
  torch::nn::Sequential seq;
  for (int width : widths) {
    const int out = scaled(width, w);
    seq->push_back(SeparableConv(in, out));
    in = out;
  }
  return seq;
}

}  // namespace

MobileUNetImpl::MobileUNetImpl(const ArchitectureSpec& spec) {
  const double w = spec.width_scale;
  int in = scaled(64, w);
  stem = register_module("stem", ConvBnRelu(spec.in_channels, in, 3));
  down = register_module("down", torch::nn::ModuleList());
  for (const auto& widths : encoder_plan(spec.depth)) down->push_back(separable_stack(in, widths, w));

  up_sample = register_module("up_sample", torch::nn::ModuleList());
  up = register_module("up", torch::nn::ModuleList());
  for (const auto& [t_width, widths] : decoder_plan(spec.depth)) {
    const int t_out = scaled(t_width, w);
    up_sample->push_back(torch::nn::Sequential(
        torch::nn::ConvTranspose2d(
            torch::nn::ConvTranspose2dOptions(in, t_out, 3).stride(2).padding(1).output_padding(1).bias(false)),
        torch::nn::BatchNorm2d(t_out), torch::nn::ReLU()));
    in = t_out;
    up->push_back(separable_stack(in, widths, w));
  }
  classifier = register_module("classifier", torch::nn::Conv2d(conv_options(in, spec.num_classes, 1, 1, 1, true)));
}

torch::Tensor MobileUNetImpl::forward(const torch::Tensor& x) {
  namespace F = torch::nn::functional;
  std::vector<torch::Tensor> skips;
  torch::Tensor y = stem(x);
  for (const auto& stage : *down) {
    y = stage->as<torch::nn::Sequential>()->forward(y);
    y = F::max_pool2d(y, F::MaxPool2dFuncOptions(2).stride(2));
    skips.push_back(y);
  }
  for (std::size_t d = 0; d < up->size(); ++d) {
    y = up_sample[d]->as<torch::nn::Sequential>()->forward(y);
    y = up[d]->as<torch::nn::Sequential>()->forward(y);
    // Stage outputs 0..3 meet the pooled encoder features of matching size.
    if (d < 4) y = y + skips[3 - d];
  }
  return classifier(y);
}

FeatureFlags MobileUNetImpl::flags() const {
  FeatureFlags f;
  f.uses_depthwise_separable = true;
  return f;
}

int MobileUNetImpl::depthwise_conv_count() const {
  int n = 0;
  for (const auto& m : modules(false)) {
    if (auto* conv = m->as<torch::nn::Conv2d>()) {
      const auto& o = conv->options;
      if (o.groups() > 1 && o.groups() == o.in_channels()) ++n;
    }
  }
  return n;
}

}  // namespace sarlc::nnl
