#include "sarlc/models/architectures.hpp"

namespace sarlc::nnl {

namespace {

struct Level {
  int channels;
  int units;
};

std::vector<Level> encoder_levels(Depth d) {
  if (d == Depth::Compact) return {{96, 1}, {192, 1}, {384, 1}, {384, 1}, {384, 1}};
  return {{96, 3}, {192, 4}, {384, 2}, {384, 2}, {384, 2}};
}

std::vector<Level> decoder_levels(Depth d) {
  if (d == Depth::Compact) return {{192, 1}, {192, 1}, {192, 1}, {96, 1}};
  return {{192, 2}, {192, 2}, {192, 2}, {96, 2}};
}

torch::Tensor pool2(const torch::Tensor& x) {
  namespace F = torch::nn::functional;
  return F::max_pool2d(x, F::MaxPool2dFuncOptions(2).stride(2));
}

torch::Tensor upsample2(const torch::Tensor& x) {
  return resize_bilinear(x, x.size(2) * 2, x.size(3) * 2);
}

// Runs one level of FRRUs over the pooling stream y and residual stream z.
void run_level(torch::nn::ModuleListImpl& level, torch::Tensor& y, torch::Tensor& z) {
  for (const auto& m : level) std::tie(y, z) = m->as<Frru>()->forward(y, z);
}

}  // namespace

ResidualUnitImpl::ResidualUnitImpl(int channels) {
  a = register_module("a", ConvBnRelu(channels, channels, 3));
  b = register_module("b", ConvBnRelu(channels, channels, 3, 1, 1, /*relu=*/false));
}

torch::Tensor ResidualUnitImpl::forward(const torch::Tensor& x) { return torch::relu(x + b(a(x))); }

FrruImpl::FrruImpl(int in, int out, int residual_channels, int scale) : scale_(scale) {
  a = register_module("a", ConvBnRelu(in + residual_channels, out, 3));
  b = register_module("b", ConvBnRelu(out, out, 3));
  to_residual = register_module("to_residual", torch::nn::Conv2d(conv_options(out, residual_channels, 1, 1, 1, true)));
}

std::pair<torch::Tensor, torch::Tensor> FrruImpl::forward(const torch::Tensor& y, const torch::Tensor& z) {
  namespace F = torch::nn::functional;
  auto pooled_z = F::max_pool2d(z, F::MaxPool2dFuncOptions(scale_).stride(scale_));
  auto y_out = b(a(torch::cat({y, pooled_z}, 1)));
  auto back = F::interpolate(to_residual(y_out), F::InterpolateFuncOptions()
                                                     .size(std::vector<std::int64_t>{z.size(2), z.size(3)})
                                                     .mode(torch::kNearest));
  return {y_out, z + back};
}

FrrnEncoderImpl::FrrnEncoderImpl(int in_channels, double width, Depth depth) {
  const int base = scaled(48, width);
  residual_channels_ = scaled(32, width);
  stem = register_module("stem", ConvBnRelu(in_channels, base, 5));
  head_units = register_module("head_units", torch::nn::ModuleList());
  for (int i = 0; i < 3; ++i) head_units->push_back(ResidualUnit(base));
  split = register_module("split", torch::nn::Conv2d(conv_options(base, residual_channels_, 1, 1, 1, true)));
  levels = register_module("levels", torch::nn::ModuleList());
  int in = base;
  int scale = 1;
  for (const auto& lv : encoder_levels(depth)) {
    scale *= 2;
    const int out = scaled(lv.channels, width);
    torch::nn::ModuleList level;
    for (int u = 0; u < lv.units; ++u) {
      level->push_back(Frru(in, out, residual_channels_, scale));
      in = out;
    }
    levels->push_back(level);
  }
  out_channels_ = in;
}

std::pair<torch::Tensor, torch::Tensor> FrrnEncoderImpl::forward(const torch::Tensor& x) {
  torch::Tensor y = stem(x);
  for (const auto& m : *head_units) y = m->as<ResidualUnit>()->forward(y);
  torch::Tensor z = split(y);
  for (const auto& level : *levels) {
    y = pool2(y);
    run_level(*level->as<torch::nn::ModuleList>(), y, z);
  }
  return {y, z};
}

FrrnBImpl::FrrnBImpl(const ArchitectureSpec& spec) : tag_(encoder_tag("frrn_b", spec.width_scale, spec.depth)) {
  const double w = spec.width_scale;
  encoder = register_module("encoder", FrrnEncoder(spec.in_channels, w, spec.depth));
  levels = register_module("levels", torch::nn::ModuleList());
  int in = encoder->pool_channels();
  const int res = encoder->residual_channels();
  int scale = 32;
  for (const auto& lv : decoder_levels(spec.depth)) {
    scale /= 2;
    const int out = scaled(lv.channels, w);
    torch::nn::ModuleList level;
    for (int u = 0; u < lv.units; ++u) {
      level->push_back(Frru(in, out, res, scale));
      in = out;
    }
    levels->push_back(level);
  }
  const int base = scaled(48, w);
  merge = register_module("merge", ConvBnRelu(in + res, base, 1));
  tail_units = register_module("tail_units", torch::nn::ModuleList());
  for (int i = 0; i < 3; ++i) tail_units->push_back(ResidualUnit(base));
  classifier = register_module("classifier", torch::nn::Conv2d(conv_options(base, spec.num_classes, 1, 1, 1, true)));
}

torch::Tensor FrrnBImpl::forward(const torch::Tensor& x) {
  auto [y, z] = encoder->forward(x);
  for (const auto& level : *levels) {
    y = upsample2(y);
    run_level(*level->as<torch::nn::ModuleList>(), y, z);
  }
  residual_size_ = {z.size(2), z.size(3)};
  y = merge(torch::cat({upsample2(y), z}, 1));
  for (const auto& m : *tail_units) y = m->as<ResidualUnit>()->forward(y);
  return classifier(y);
}

FeatureFlags FrrnBImpl::flags() const {
  FeatureFlags f;
  f.has_full_resolution_stream = true;
  return f;
}

std::string FrrnBImpl::encoder_id() const { return tag_; }

}  // namespace sarlc::nnl
