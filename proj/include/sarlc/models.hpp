#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/nn/module.h>
#include <torch/types.h>

namespace sarlc {

enum class Architecture { BiSeNet, SegNet, MobileUNet, DeepLabV3Plus, FRRN_B, PSPNet, FCDenseNet };
enum class Backbone { ResNet101, VGG16, None };

// Full keeps the published layer counts; Compact keeps every structural
// element but trims repeated units, for desk-scale runs.
enum class Depth { Full, Compact };

inline constexpr std::array<Architecture, 7> kAllArchitectures{
    Architecture::BiSeNet,      Architecture::SegNet, Architecture::MobileUNet, Architecture::DeepLabV3Plus,
    Architecture::FRRN_B,       Architecture::PSPNet, Architecture::FCDenseNet};

std::string to_string(Architecture a);
Architecture parse_architecture(const std::string& s);  // throws SpecError
std::string to_string(Backbone b);
Backbone parse_backbone(const std::string& s);
Backbone default_backbone(Architecture a);
std::string to_string(Depth d);
Depth parse_depth(const std::string& s);

struct ArchitectureSpec {
  Architecture name = Architecture::SegNet;
  Backbone backbone = Backbone::VGG16;
  int num_classes = 5;
  int in_channels = 3;
  double width_scale = 1.0;  // (0, 1]
  Depth depth = Depth::Full;
  std::optional<std::filesystem::path> pretrained_encoder;
  std::uint64_t init_seed = 0;

  static ArchitectureSpec make(Architecture a, double width_scale = 1.0, Depth depth = Depth::Full);
  void validate() const;  // throws SpecError
  std::string to_json() const;
  static ArchitectureSpec from_json(const std::string& text);
  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

struct FeatureFlags {
  bool uses_pool_indices = false;
  int pyramid_levels = 0;
  bool has_full_resolution_stream = false;
  bool has_dense_skip_concat = false;
  bool uses_atrous = false;
  bool uses_depthwise_separable = false;
  bool has_spatial_and_context_paths = false;
};

// Interface every architecture implements. Input is standardized NCHW; the
// output is NCHW logits at the model's native resolution.
class SegmentationModel : public torch::nn::Module {
 public:
  virtual torch::Tensor forward(const torch::Tensor& x) = 0;
  virtual int stride_multiple() const = 0;
  virtual FeatureFlags flags() const = 0;
  // Identifier of the encoder weight set; empty if the model has none. The
  // encoder is registered as the submodule named "encoder".
  virtual std::string encoder_id() const = 0;
};

// Fixed input statistics: x / 255 standardized per channel.
struct InputNormalization {
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> stddev{0.229f, 0.224f, 0.225f};
};

struct WeightReport {
  std::string encoder_id;
  std::vector<std::string> matched;
  std::vector<std::string> unmatched;  // encoder tensors absent from the weight set
  std::vector<std::string> unused;     // weight-set tensors not in the encoder
  double matched_fraction() const;
};

class Network {
 public:
  Network(ArchitectureSpec spec, std::shared_ptr<SegmentationModel> model, InputNormalization norm = {});

  // B x H x W x 3 in [0, 255] -> B x H x W x classes logits.
  torch::Tensor forward(const torch::Tensor& nhwc);
  // Same contract on B x 3 x H x W input and B x classes x H x W output.
  torch::Tensor forward_nchw(const torch::Tensor& nchw);
  // B x H x W class ids.
  torch::Tensor predict_classes(const torch::Tensor& nhwc);

  const ArchitectureSpec& spec() const { return spec_; }
  FeatureFlags flags() const { return model_->flags(); }
  int stride_multiple() const { return model_->stride_multiple(); }
  std::int64_t param_count() const;
  std::string encoder_id() const { return model_->encoder_id(); }

  SegmentationModel& model() { return *model_; }
  const SegmentationModel& model() const { return *model_; }
  std::shared_ptr<SegmentationModel> model_ptr() { return model_; }

  void train(bool on = true) { model_->train(on); }
  void eval() { model_->eval(); }
  void to(torch::Device device);
  void to(torch::Dtype dtype);
  torch::Device device() const;

  // Throws ShapeError unless both sides are multiples of stride_multiple().
  void check_input_size(std::int64_t height, std::int64_t width) const;

 private:
  ArchitectureSpec spec_;
  std::shared_ptr<SegmentationModel> model_;
  torch::Tensor mean_;
  torch::Tensor inv_std_;
};

// Seeds torch with spec.init_seed, builds the model and, when
// spec.pretrained_encoder is set, loads it (WeightError on mismatch).
Network build(const ArchitectureSpec& spec);

std::int64_t param_count(const torch::nn::Module& module);

// Weight sets: the encoder id plus every encoder parameter and buffer.
void export_encoder_weights(const Network& net, const std::filesystem::path& path);
WeightReport load_pretrained_encoder(Network& net, const std::filesystem::path& path);

// Parameter-count target for the scale-1 model, in parameters.
double reference_param_count(Architecture a);

struct BuildReportRow {
  Architecture arch;
  std::int64_t params = 0;
  double target = 0.0;
  double deviation = 0.0;  // (params - target) / target
};
std::vector<BuildReportRow> build_report(const std::vector<Architecture>& archs);

// Checkpoints: spec, all parameters and buffers, free-form training metadata.
inline constexpr std::int64_t kCheckpointVersion = 1;

struct Checkpoint {
  ArchitectureSpec spec;
  std::string train_meta_json;
};

// Written to a temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, Network& net, const std::string& train_meta_json = "{}");
// Rebuilds the network from the stored spec and loads its state.
Network load_checkpoint(const std::filesystem::path& path, Checkpoint* info = nullptr);
Checkpoint read_checkpoint_info(const std::filesystem::path& path);

}  // namespace sarlc
