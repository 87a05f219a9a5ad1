#pragma once

#include <vector>

#include "sarlc/models.hpp"
#include "sarlc/models/encoders.hpp"
#include "sarlc/models/layers.hpp"

namespace sarlc::nnl {

// ---------------------------------------------------------------------------
// SegNet: VGG16 encoder; each decoder stage unpools with the indices kept by
// the matching encoder pool, concatenates that stage's encoder features and
// runs the mirrored conv stack.
class SegNetImpl : public SegmentationModel {
 public:
  SegNetImpl(const ArchitectureSpec& spec);
  torch::Tensor forward(const torch::Tensor& x) override;
  int stride_multiple() const override { return 32; }
  FeatureFlags flags() const override;
  std::string encoder_id() const override;

  // Unpooling steps of the last forward pass that consumed pool indices.
  int last_unpool_count() const { return unpool_count_; }

 private:
  VggEncoder encoder{nullptr};
  torch::nn::ModuleList decoder{nullptr};
  torch::nn::Conv2d classifier{nullptr};
  int unpool_count_ = 0;
  std::string tag_;
};

// ---------------------------------------------------------------------------
// Mobile U-Net: depthwise-separable blocks, transposed-conv upsampling and
// additive skips. No pretrained encoder.
class MobileUNetImpl : public SegmentationModel {
 public:
  MobileUNetImpl(const ArchitectureSpec& spec);
  torch::Tensor forward(const torch::Tensor& x) override;
  int stride_multiple() const override { return 32; }
  FeatureFlags flags() const override;
  std::string encoder_id() const override { return {}; }

  int depthwise_conv_count() const;

 private:
  ConvBnRelu stem{nullptr};
  torch::nn::ModuleList down{nullptr};
  torch::nn::ModuleList up_sample{nullptr};
  torch::nn::ModuleList up{nullptr};
  torch::nn::Conv2d classifier{nullptr};
};

// ---------------------------------------------------------------------------
// DeepLabV3+: ResNet-101 at output stride 16, atrous spatial pyramid pooling,
// decoder fusing the stride-4 features.
class AsppImpl : public torch::nn::Module {
 public:
  AsppImpl(int in, int out, std::vector<int> rates);
  torch::Tensor forward(const torch::Tensor& x);
  const std::vector<int>& rates() const { return rates_; }

 private:
  ConvBnRelu point{nullptr};
  torch::nn::ModuleList atrous{nullptr};
  torch::nn::Conv2d image_pool{nullptr};
  ConvBnRelu project{nullptr};
  torch::nn::Dropout dropout{nullptr};
  std::vector<int> rates_;
};
TORCH_MODULE(Aspp);

class DeepLabV3PlusImpl : public SegmentationModel {
 public:
  DeepLabV3PlusImpl(const ArchitectureSpec& spec);
  torch::Tensor forward(const torch::Tensor& x) override;
  int stride_multiple() const override { return 16; }
  FeatureFlags flags() const override;
  std::string encoder_id() const override;

  const Aspp& aspp_module() const { return aspp; }
  int encoder_output_stride() const { return encoder->output_stride(); }

 private:
  ResNetEncoder encoder{nullptr};
  Aspp aspp{nullptr};
  ConvBnRelu low_level{nullptr};
  torch::nn::Sequential fuse{nullptr};
  torch::nn::Conv2d classifier{nullptr};
  std::string tag_;
};

// ---------------------------------------------------------------------------
// PSPNet: ResNet-101 at output stride 8 and a four-level pyramid pooling
// module (bins 1, 2, 3, 6).
class PyramidPoolingImpl : public torch::nn::Module {
 public:
  PyramidPoolingImpl(int in, int branch_channels, std::vector<int> bins);
  torch::Tensor forward(const torch::Tensor& x);
  const std::vector<int>& bins() const { return bins_; }
  std::size_t branch_count() const { return branches->size(); }

 private:
  torch::nn::ModuleList branches{nullptr};
  std::vector<int> bins_;
};
TORCH_MODULE(PyramidPooling);

class PSPNetImpl : public SegmentationModel {
 public:
  PSPNetImpl(const ArchitectureSpec& spec);
  torch::Tensor forward(const torch::Tensor& x) override;
  int stride_multiple() const override { return 8; }
  FeatureFlags flags() const override;
  std::string encoder_id() const override;

  const PyramidPooling& pyramid() const { return ppm; }

 private:
  ResNetEncoder encoder{nullptr};
  PyramidPooling ppm{nullptr};
  ConvBnRelu bottleneck{nullptr};
  torch::nn::Dropout2d dropout{nullptr};
  torch::nn::Conv2d classifier{nullptr};
  std::string tag_;
};

// ---------------------------------------------------------------------------
// FRRN-B: a residual stream kept at full resolution next to a pooling stream
// that descends to 1/32 and comes back.
class ResidualUnitImpl : public torch::nn::Module {
 public:
  explicit ResidualUnitImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  ConvBnRelu a{nullptr};
  ConvBnRelu b{nullptr};
};
TORCH_MODULE(ResidualUnit);

class FrruImpl : public torch::nn::Module {
 public:
  FrruImpl(int in, int out, int residual_channels, int scale);
  // Returns (pooling stream, residual stream).
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& y, const torch::Tensor& z);
  int scale() const { return scale_; }

 private:
  ConvBnRelu a{nullptr};
  ConvBnRelu b{nullptr};
  torch::nn::Conv2d to_residual{nullptr};
  int scale_;
};
TORCH_MODULE(Frru);

// Stem, leading residual units and the descending FRRU levels.
class FrrnEncoderImpl : public torch::nn::Module {
 public:
  FrrnEncoderImpl(int in_channels, double width, Depth depth);
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& x);
  int pool_channels() const { return out_channels_; }
  int residual_channels() const { return residual_channels_; }

 private:
  ConvBnRelu stem{nullptr};
  torch::nn::ModuleList head_units{nullptr};
  torch::nn::Conv2d split{nullptr};
  torch::nn::ModuleList levels{nullptr};  // each a ModuleList of Frru
  int out_channels_;
  int residual_channels_;
};
TORCH_MODULE(FrrnEncoder);

class FrrnBImpl : public SegmentationModel {
 public:
  FrrnBImpl(const ArchitectureSpec& spec);
  torch::Tensor forward(const torch::Tensor& x) override;
  int stride_multiple() const override { return 32; }
  FeatureFlags flags() const override;
  std::string encoder_id() const override;

  // Spatial size of the residual stream in the last forward pass.
  std::vector<std::int64_t> last_residual_stream_size() const { return residual_size_; }

 private:
  FrrnEncoder encoder{nullptr};
  torch::nn::ModuleList levels{nullptr};
  ConvBnRelu merge{nullptr};
  torch::nn::ModuleList tail_units{nullptr};
  torch::nn::Conv2d classifier{nullptr};
  std::vector<std::int64_t> residual_size_;
  std::string tag_;
};

// ---------------------------------------------------------------------------
// FC-DenseNet103: dense blocks whose layers see the concatenation of all
// earlier outputs; transposed-conv transition-up on the new features only.
class DenseLayerImpl : public torch::nn::Module {
 public:
  DenseLayerImpl(int in, int growth, double dropout);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::BatchNorm2d bn{nullptr};
  torch::nn::Conv2d conv{nullptr};
  torch::nn::Dropout drop{nullptr};
};
TORCH_MODULE(DenseLayer);

class DenseBlockImpl : public torch::nn::Module {
 public:
  DenseBlockImpl(int in, int growth, int layers, double dropout);
  // Input concatenated with all new features.
  torch::Tensor forward(const torch::Tensor& x);
  // Only the new features.
  torch::Tensor forward_new(const torch::Tensor& x);
  int layer_count() const { return static_cast<int>(layers->size()); }
  int out_channels() const { return in_ + growth_ * layer_count(); }

 private:
  torch::nn::ModuleList layers{nullptr};
  int in_;
  int growth_;
};
TORCH_MODULE(DenseBlock);

class TransitionDownImpl : public torch::nn::Module {
 public:
  TransitionDownImpl(int channels, double dropout);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::BatchNorm2d bn{nullptr};
  torch::nn::Conv2d conv{nullptr};
  torch::nn::Dropout drop{nullptr};
};
TORCH_MODULE(TransitionDown);

class FcDenseEncoderImpl : public torch::nn::Module {
 public:
  FcDenseEncoderImpl(int in_channels, int stem_channels, int growth, const std::vector<int>& blocks, double dropout);
  // Pooled output plus the pre-pool skip of every block.
  std::pair<torch::Tensor, std::vector<torch::Tensor>> forward(const torch::Tensor& x);
  const std::vector<int>& skip_channels() const { return skip_channels_; }
  int out_channels() const { return skip_channels_.back(); }

 private:
  torch::nn::Conv2d stem{nullptr};
  torch::nn::ModuleList blocks{nullptr};
  torch::nn::ModuleList downs{nullptr};
  std::vector<int> skip_channels_;
};
TORCH_MODULE(FcDenseEncoder);

class FcDenseNetImpl : public SegmentationModel {
 public:
  FcDenseNetImpl(const ArchitectureSpec& spec);
  torch::Tensor forward(const torch::Tensor& x) override;
  int stride_multiple() const override { return 32; }
  FeatureFlags flags() const override;
  std::string encoder_id() const override;

  const FcDenseEncoder& encoder_module() const { return encoder; }
  const DenseBlock& bottleneck_block() const { return bottleneck; }
  int growth_rate() const { return growth_; }

 private:
  FcDenseEncoder encoder{nullptr};
  DenseBlock bottleneck{nullptr};
  torch::nn::ModuleList ups{nullptr};
  torch::nn::ModuleList up_blocks{nullptr};
  torch::nn::Conv2d classifier{nullptr};
  int growth_;
  std::string tag_;
};

// ---------------------------------------------------------------------------
// BiSeNet: a shallow spatial path at 1/8 and a ResNet-101 context path with
// attention refinement, joined by a feature fusion module.
class AttentionRefinementImpl : public torch::nn::Module {
 public:
  AttentionRefinementImpl(int in, int out);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  ConvBnRelu conv{nullptr};
  torch::nn::Conv2d attention{nullptr};
};
TORCH_MODULE(AttentionRefinement);

class FeatureFusionImpl : public torch::nn::Module {
 public:
  FeatureFusionImpl(int in, int out);
  torch::Tensor forward(const torch::Tensor& spatial, const torch::Tensor& context);

 private:
  ConvBnRelu fuse{nullptr};
  torch::nn::Conv2d squeeze{nullptr};
  torch::nn::Conv2d excite{nullptr};
};
TORCH_MODULE(FeatureFusion);

class BiSeNetImpl : public SegmentationModel {
 public:
  // Context-path width relative to ResNet-101 at width_scale 1.
  static constexpr double kContextWidth = 0.7;

  BiSeNetImpl(const ArchitectureSpec& spec);
  torch::Tensor forward(const torch::Tensor& x) override;
  int stride_multiple() const override { return 32; }
  FeatureFlags flags() const override;
  std::string encoder_id() const override;

  const torch::nn::Sequential& spatial_path() const { return spatial; }
  const ResNetEncoder& context_path() const { return encoder; }

 private:
  torch::nn::Sequential spatial{nullptr};
  ResNetEncoder encoder{nullptr};
  AttentionRefinement arm16{nullptr};
  AttentionRefinement arm32{nullptr};
  torch::nn::Conv2d global_context{nullptr};
  ConvBnRelu refine16{nullptr};
  ConvBnRelu refine32{nullptr};
  FeatureFusion ffm{nullptr};
  ConvBnRelu head{nullptr};
  torch::nn::Conv2d classifier{nullptr};
  double context_width_;
  std::string tag_;
};

std::shared_ptr<SegmentationModel> make_model(const ArchitectureSpec& spec);

}  // namespace sarlc::nnl
