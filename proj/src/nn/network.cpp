#include <json.hpp>

#include "sarlc/errors.hpp"
#include "sarlc/models.hpp"
#include "sarlc/models/architectures.hpp"

namespace sarlc {

namespace {

struct ArchInfo {
  Architecture arch;
  const char* name;
  double params;  // scale-1 reference count
};

constexpr std::array<ArchInfo, 7> kArchInfo{{
    {Architecture::BiSeNet, "BISENET", 24.75e6},
    {Architecture::SegNet, "SEGNET", 34.97e6},
    {Architecture::MobileUNet, "MOBILE_UNET", 8.87e6},
    {Architecture::DeepLabV3Plus, "DEEPLABV3PLUS", 47.96e6},
    {Architecture::FRRN_B, "FRRN_B", 24.75e6},
    {Architecture::PSPNet, "PSPNET", 56.0e6},
    {Architecture::FCDenseNet, "FC_DENSENET", 9.27e6},
}};

const ArchInfo& info(Architecture a) {
  for (const auto& i : kArchInfo) {
    if (i.arch == a) return i;
  }
  throw SpecError("unknown architecture");
}

}  // namespace

std::string to_string(Architecture a) { return info(a).name; }

Architecture parse_architecture(const std::string& s) {
  for (const auto& i : kArchInfo) {
    if (s == i.name) return i.arch;
  }
  throw SpecError("unknown architecture '" + s + "'");
}

std::string to_string(Backbone b) {
  switch (b) {
    case Backbone::ResNet101: return "ResNet101";
    case Backbone::VGG16: return "VGG16";
    case Backbone::None: return "none";
  }
  return "?";
}

Backbone parse_backbone(const std::string& s) {
  if (s == "ResNet101") return Backbone::ResNet101;
  if (s == "VGG16") return Backbone::VGG16;
  if (s == "none") return Backbone::None;
  throw SpecError("unknown backbone '" + s + "'");
}

Backbone default_backbone(Architecture a) {
  switch (a) {
    case Architecture::SegNet: return Backbone::VGG16;
    case Architecture::MobileUNet: return Backbone::None;
    default: return Backbone::ResNet101;
  }
}

std::string to_string(Depth d) { return d == Depth::Full ? "full" : "compact"; }

Depth parse_depth(const std::string& s) {
  if (s == "full") return Depth::Full;
  if (s == "compact") return Depth::Compact;
  throw SpecError("unknown depth '" + s + "'");
}

double reference_param_count(Architecture a) { return info(a).params; }

ArchitectureSpec ArchitectureSpec::make(Architecture a, double width_scale, Depth depth) {
  ArchitectureSpec s;
  s.name = a;
  s.backbone = default_backbone(a);
  s.width_scale = width_scale;
  s.depth = depth;
  return s;
}

void ArchitectureSpec::validate() const {
  if (backbone != default_backbone(name)) {
    throw SpecError(to_string(name) + " pairs with backbone " + to_string(default_backbone(name)) + ", not " +
                    to_string(backbone));
  }
  if (num_classes < 2) throw SpecError("num_classes must be at least 2");
  if (in_channels != 3) throw SpecError("in_channels must be 3");
  if (!(width_scale > 0.0 && width_scale <= 1.0)) throw SpecError("width_scale must lie in (0, 1]");
}

std::string ArchitectureSpec::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = to_string(name);
  j["backbone"] = to_string(backbone);
  j["num_classes"] = num_classes;
  j["in_channels"] = in_channels;
  j["width_scale"] = width_scale;
  j["depth"] = to_string(depth);
  j["pretrained_encoder"] = pretrained_encoder ? nlohmann::ordered_json(pretrained_encoder->string()) : nullptr;
  j["init_seed"] = init_seed;
  return j.dump();
}

ArchitectureSpec ArchitectureSpec::from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    ArchitectureSpec s = make(parse_architecture(j.at("name").get<std::string>()));
    if (j.contains("backbone")) s.backbone = parse_backbone(j["backbone"].get<std::string>());
    s.num_classes = j.value("num_classes", s.num_classes);
    s.in_channels = j.value("in_channels", s.in_channels);
    s.width_scale = j.value("width_scale", s.width_scale);
    if (j.contains("depth")) s.depth = parse_depth(j["depth"].get<std::string>());
    if (j.contains("pretrained_encoder") && !j["pretrained_encoder"].is_null()) {
      s.pretrained_encoder = j["pretrained_encoder"].get<std::string>();
    }
    s.init_seed = j.value("init_seed", s.init_seed);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("architecture spec: ") + e.what());
  }
}

double WeightReport::matched_fraction() const {
  const auto total = matched.size() + unmatched.size();
  return total == 0 ? 0.0 : static_cast<double>(matched.size()) / static_cast<double>(total);
}

Network::Network(ArchitectureSpec spec, std::shared_ptr<SegmentationModel> model, InputNormalization norm)
    : spec_(std::move(spec)), model_(std::move(model)) {
  mean_ = torch::tensor({norm.mean[0], norm.mean[1], norm.mean[2]}).view({1, 3, 1, 1});
  inv_std_ = 1.0 / torch::tensor({norm.stddev[0], norm.stddev[1], norm.stddev[2]}).view({1, 3, 1, 1});
}

void Network::check_input_size(std::int64_t height, std::int64_t width) const {
  const int m = stride_multiple();
  if (height <= 0 || width <= 0 || height % m != 0 || width % m != 0) {
    throw ShapeError(to_string(spec_.name) + " needs input sides that are multiples of " + std::to_string(m) +
                     ", got " + std::to_string(height) + "x" + std::to_string(width));
  }
}

torch::Tensor Network::forward_nchw(const torch::Tensor& nchw) {
  if (nchw.dim() != 4 || nchw.size(1) != spec_.in_channels) {
    throw ShapeError("expected a B x " + std::to_string(spec_.in_channels) + " x H x W batch");
  }
  const auto h = nchw.size(2), w = nchw.size(3);
  check_input_size(h, w);
  auto x = (nchw.to(mean_.options()) / 255.0 - mean_) * inv_std_;
  return nnl::resize_bilinear(model_->forward(x), h, w);
}

torch::Tensor Network::forward(const torch::Tensor& nhwc) {
  if (nhwc.dim() != 4 || nhwc.size(3) != spec_.in_channels) {
    throw ShapeError("expected a B x H x W x " + std::to_string(spec_.in_channels) + " batch");
  }
  return forward_nchw(nhwc.permute({0, 3, 1, 2})).permute({0, 2, 3, 1}).contiguous();
}

torch::Tensor Network::predict_classes(const torch::Tensor& nhwc) { return forward(nhwc).argmax(3); }

std::int64_t Network::param_count() const { return sarlc::param_count(*model_); }

void Network::to(torch::Device device) {
  model_->to(device);
  mean_ = mean_.to(device);
  inv_std_ = inv_std_.to(device);
}

void Network::to(torch::Dtype dtype) {
  model_->to(dtype);
  mean_ = mean_.to(dtype);
  inv_std_ = inv_std_.to(dtype);
}

torch::Device Network::device() const { return mean_.device(); }

std::int64_t param_count(const torch::nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters()) {
    if (p.requires_grad()) n += p.numel();
  }
  return n;
}

Network build(const ArchitectureSpec& spec) {
  spec.validate();
  torch::manual_seed(spec.init_seed);
  auto model = nnl::make_model(spec);
  nnl::init_weights(*model);
  Network net(spec, model);
  if (spec.pretrained_encoder) {
    WeightReport r = load_pretrained_encoder(net, *spec.pretrained_encoder);
    if (!r.unmatched.empty()) {
      throw WeightError(std::to_string(r.unmatched.size()) + " encoder tensors missing from " +
                        spec.pretrained_encoder->string() + ", first: " + r.unmatched.front());
    }
  }
  return net;
}

std::vector<BuildReportRow> build_report(const std::vector<Architecture>& archs) {
  std::vector<BuildReportRow> rows;
  for (Architecture a : archs) {
    auto model = nnl::make_model(ArchitectureSpec::make(a));
    BuildReportRow r;
    r.arch = a;
    r.params = param_count(*model);
    r.target = reference_param_count(a);
    r.deviation = (static_cast<double>(r.params) - r.target) / r.target;
    rows.push_back(r);
  }
  return rows;
}

namespace nnl {

std::shared_ptr<SegmentationModel> make_model(const ArchitectureSpec& spec) {
  switch (spec.name) {
    case Architecture::BiSeNet: return std::make_shared<BiSeNetImpl>(spec);
    case Architecture::SegNet: return std::make_shared<SegNetImpl>(spec);
    case Architecture::MobileUNet: return std::make_shared<MobileUNetImpl>(spec);
    case Architecture::DeepLabV3Plus: return std::make_shared<DeepLabV3PlusImpl>(spec);
    case Architecture::FRRN_B: return std::make_shared<FrrnBImpl>(spec);
    case Architecture::PSPNet: return std::make_shared<PSPNetImpl>(spec);
    case Architecture::FCDenseNet: return std::make_shared<FcDenseNetImpl>(spec);
  }
  throw SpecError("unknown architecture");
}

}  // namespace nnl

}  // namespace sarlc
