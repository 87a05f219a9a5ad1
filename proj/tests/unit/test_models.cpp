#include <cmath>
#include <fstream>

#include <torch/torch.h>

#include "sarlc/errors.hpp"
#include "sarlc/models.hpp"
#include "sarlc/models/architectures.hpp"
#include "test_support.hpp"
#include "doctest_torch.hpp"

using namespace sarlc;

namespace {

ArchitectureSpec tiny(Architecture a, std::uint64_t seed = 1) {
  auto s = ArchitectureSpec::make(a, 0.125, Depth::Compact);
  s.init_seed = seed;
  return s;
}

torch::Tensor random_nhwc(int b, int h, int w, std::uint64_t seed) {
  torch::manual_seed(seed);
  return torch::rand({b, h, w, 3}) * 255.0;
}

template <typename T>
T* find_model(Network& net) {
  return dynamic_cast<T*>(&net.model());
}

}  // namespace

TEST_CASE("architecture names, backbones and spec validation") {
  for (auto a : kAllArchitectures) {
    CHECK(parse_architecture(to_string(a)) == a);
    const auto s = ArchitectureSpec::make(a);
    CHECK(s.backbone == default_backbone(a));
    CHECK(s.num_classes == 5);
    CHECK(s.in_channels == 3);
    CHECK(ArchitectureSpec::from_json(s.to_json()) == s);
  }
  CHECK(default_backbone(Architecture::SegNet) == Backbone::VGG16);
  CHECK(default_backbone(Architecture::MobileUNet) == Backbone::None);
  CHECK(default_backbone(Architecture::PSPNet) == Backbone::ResNet101);
  CHECK_THROWS_AS(parse_architecture("UNET"), SpecError);

  auto bad = ArchitectureSpec::make(Architecture::SegNet);
  bad.backbone = Backbone::ResNet101;
  CHECK_THROWS_AS(build(bad), SpecError);
  bad = ArchitectureSpec::make(Architecture::SegNet, 0.0);
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = ArchitectureSpec::make(Architecture::SegNet, 1.5);
  CHECK_THROWS_AS(bad.validate(), SpecError);
}

TEST_CASE("forward maps B x H x W x 3 to B x H x W x 5 finite logits") {
  for (auto a : kAllArchitectures) {
    CAPTURE(to_string(a));
    Network net = build(tiny(a));
    net.eval();
    torch::NoGradGuard g;
    for (int side : {64, 96, 128}) {
      auto y = net.forward(random_nhwc(2, side, side, 3));
      CHECK(y.sizes() == torch::IntArrayRef({2, side, side, 5}));
      CHECK(torch::isfinite(y).all().item<bool>());
    }
    auto z = net.forward(torch::zeros({1, 64, 96, 3}));
    CHECK(z.sizes() == torch::IntArrayRef({1, 64, 96, 5}));
    CHECK(torch::isfinite(z).all().item<bool>());
    auto cls = net.predict_classes(random_nhwc(1, 64, 64, 4));
    CHECK(cls.sizes() == torch::IntArrayRef({1, 64, 64}));
    CHECK(cls.min().item<int64_t>() >= 0);
    CHECK(cls.max().item<int64_t>() < 5);
  }
}

TEST_CASE("indivisible input sides raise ShapeError naming the multiple") {
  for (auto a : kAllArchitectures) {
    Network net = build(tiny(a));
    const int m = net.stride_multiple();
    try {
      net.forward(torch::zeros({1, m * 2 + 1, m * 2, 3}));
      FAIL("no ShapeError for " << to_string(a));
    } catch (const ShapeError& e) {
      CHECK(std::string(e.what()).find("multiples of " + std::to_string(m)) != std::string::npos);
    }
  }
  Network net = build(tiny(Architecture::SegNet));
  CHECK_THROWS_AS(net.forward(torch::zeros({1, 64, 64, 4})), ShapeError);
  CHECK_THROWS_AS(net.forward(torch::zeros({64, 64, 3})), ShapeError);
}

TEST_CASE("feature flags are set per architecture") {
  auto flags = [](Architecture a) { return build(tiny(a)).flags(); };
  const auto segnet = flags(Architecture::SegNet);
  CHECK(segnet.uses_pool_indices);
  CHECK_FALSE(segnet.uses_atrous);
  CHECK(flags(Architecture::PSPNet).pyramid_levels == 4);
  CHECK(flags(Architecture::FRRN_B).has_full_resolution_stream);
  CHECK(flags(Architecture::FCDenseNet).has_dense_skip_concat);
  CHECK(flags(Architecture::DeepLabV3Plus).uses_atrous);
  CHECK(flags(Architecture::MobileUNet).uses_depthwise_separable);
  CHECK(flags(Architecture::BiSeNet).has_spatial_and_context_paths);
  CHECK(flags(Architecture::BiSeNet).pyramid_levels == 0);
}

TEST_CASE("feature flags are backed by structure") {
  torch::NoGradGuard g;
  {
    Network net = build(tiny(Architecture::SegNet));
    net.eval();
    net.forward(random_nhwc(1, 64, 64, 5));
    CHECK(find_model<nnl::SegNetImpl>(net)->last_unpool_count() == 5);
  }
  {
    Network net = build(tiny(Architecture::PSPNet));
    auto* m = find_model<nnl::PSPNetImpl>(net);
    CHECK(m->pyramid()->branch_count() == 4);
    CHECK((m->pyramid()->bins() == std::vector<int>{1, 2, 3, 6}));
  }
  {
    Network net = build(tiny(Architecture::FRRN_B));
    net.eval();
    net.forward(random_nhwc(1, 64, 96, 5));
    CHECK((find_model<nnl::FrrnBImpl>(net)->last_residual_stream_size() == std::vector<std::int64_t>{64, 96}));
  }
  {
    Network net = build(tiny(Architecture::DeepLabV3Plus));
    auto* m = find_model<nnl::DeepLabV3PlusImpl>(net);
    CHECK((m->aspp_module()->rates() == std::vector<int>{6, 12, 18}));
    CHECK(m->encoder_output_stride() == 16);
  }
  {
    Network net = build(tiny(Architecture::MobileUNet));
    CHECK(find_model<nnl::MobileUNetImpl>(net)->depthwise_conv_count() == 10);
    Network full = build(ArchitectureSpec::make(Architecture::MobileUNet, 0.125, Depth::Full));
    CHECK(find_model<nnl::MobileUNetImpl>(full)->depthwise_conv_count() == 25);
    CHECK(net.encoder_id().empty());
  }
  {
    Network net = build(ArchitectureSpec::make(Architecture::FCDenseNet));
    auto* m = find_model<nnl::FcDenseNetImpl>(net);
    CHECK(m->growth_rate() == 16);
    CHECK(m->bottleneck_block()->layer_count() == 15);
  }
  {
    Network net = build(tiny(Architecture::BiSeNet));
    auto* m = find_model<nnl::BiSeNetImpl>(net);
    CHECK(m->spatial_path()->size() == 3);
    CHECK(m->context_path()->output_stride() == 32);
  }
}

TEST_CASE("parameter counts grow with width and are deterministic") {
  for (auto a : kAllArchitectures) {
    CAPTURE(to_string(a));
    const auto p25 = build(ArchitectureSpec::make(a, 0.25)).param_count();
    const auto p50 = build(ArchitectureSpec::make(a, 0.5)).param_count();
    CHECK(p25 < p50);
    CHECK(build(ArchitectureSpec::make(a, 0.25)).param_count() == p25);
    CHECK(build(ArchitectureSpec::make(a, 0.25, Depth::Compact)).param_count() < p25);
  }
}

TEST_CASE("same spec and seed give identical outputs, other seeds differ") {
  torch::NoGradGuard g;
  for (auto a : kAllArchitectures) {
    CAPTURE(to_string(a));
    Network n1 = build(tiny(a, 7));
    Network n2 = build(tiny(a, 7));
    Network n3 = build(tiny(a, 8));
    n1.eval();
    n2.eval();
    n3.eval();
    const auto x = random_nhwc(1, 64, 64, 11);
    CHECK(torch::equal(n1.forward(x), n2.forward(x)));
    CHECK_FALSE(torch::equal(n1.forward(x), n3.forward(x)));
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  // Double precision, eval mode (fixed batch-norm statistics, no dropout).
  for (auto a : kAllArchitectures) {
    CAPTURE(to_string(a));
    Network net = build(tiny(a, 3));
    net.to(torch::kFloat64);
    net.eval();
    torch::manual_seed(5);
    const auto x = torch::rand({1, 3, 32, 32}, torch::kFloat64) * 255.0;
    const auto labels = torch::randint(0, 5, {1, 32, 32}, torch::kInt64);
    auto loss_fn = [&] { return torch::nn::functional::cross_entropy(net.forward_nchw(x), labels); };

    auto params = net.model().named_parameters();
    // First, a middle and the last parameter tensor; a few scalars of each.
    std::vector<std::size_t> picks{0, params.size() / 2, params.size() - 1};
    net.model().zero_grad();
    loss_fn().backward();
    int checked = 0;
    for (std::size_t pi : picks) {
      auto& p = params[pi].value();
      const auto flat_grad = p.grad().reshape(-1);
      for (std::int64_t k : {std::int64_t{0}, p.numel() / 2, p.numel() - 1}) {
        CAPTURE(params[pi].key());
        const double analytic = flat_grad[k].item<double>();
        const double eps = 1e-6;
        double numeric = 0.0;
        {
          torch::NoGradGuard g;
          auto flat = p.view(-1);
          const double orig = flat[k].item<double>();
          flat[k] = orig + eps;
          const double up = loss_fn().item<double>();
          flat[k] = orig - eps;
          const double down = loss_fn().item<double>();
          flat[k] = orig;
          numeric = (up - down) / (2 * eps);
        }
        const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        CHECK(std::abs(analytic - numeric) / scale <= 1e-2);
        ++checked;
      }
    }
    CHECK(checked == 9);
  }
}

TEST_CASE("encoder weight sets load into a matching network") {
  testing::TempDir dir("weights");
  torch::NoGradGuard g;
  Network src = build(tiny(Architecture::DeepLabV3Plus, 1));
  const auto path = dir / "encoder.pt";
  export_encoder_weights(src, path);

  Network dst = build(tiny(Architecture::DeepLabV3Plus, 2));
  dst.eval();
  const auto x = random_nhwc(1, 64, 64, 9);
  const auto before = dst.forward(x);
  const auto decoder_before = dst.model().named_parameters()["classifier.weight"].clone();

  const WeightReport r = load_pretrained_encoder(dst, path);
  CHECK(r.matched_fraction() == 1.0);
  CHECK(r.unmatched.empty());
  CHECK(r.unused.empty());
  CHECK(r.encoder_id == src.encoder_id());
  auto sp = src.model().named_parameters();
  for (const auto& kv : dst.model().named_parameters()) {
    if (kv.key().rfind("encoder.", 0) == 0) CHECK(torch::equal(kv.value(), sp[kv.key()]));
  }
  CHECK(torch::equal(dst.model().named_parameters()["classifier.weight"], decoder_before));
  CHECK_FALSE(torch::equal(dst.forward(x), before));

  // Encoder shared across architectures: the BiSeNet context path differs in width.
  Network other = build(tiny(Architecture::SegNet));
  CHECK_THROWS_AS(load_pretrained_encoder(other, path), WeightError);
  Network wider = build(ArchitectureSpec::make(Architecture::DeepLabV3Plus, 0.25, Depth::Compact));
  CHECK_THROWS_AS(load_pretrained_encoder(wider, path), WeightError);
  Network none = build(tiny(Architecture::MobileUNet));
  CHECK_THROWS_AS(load_pretrained_encoder(none, path), WeightError);

  auto spec = tiny(Architecture::DeepLabV3Plus, 3);
  spec.pretrained_encoder = path;
  Network via_spec = build(spec);
  CHECK(torch::equal(via_spec.model().named_parameters()["encoder.stem.conv.weight"],
                     sp["encoder.stem.conv.weight"]));
  spec.pretrained_encoder = dir / "missing.pt";
  CHECK_THROWS_AS(build(spec), WeightError);
}

TEST_CASE("checkpoints restore spec, weights and metadata") {
  testing::TempDir dir("ckpt");
  torch::NoGradGuard g;
  for (auto a : {Architecture::SegNet, Architecture::FCDenseNet, Architecture::BiSeNet}) {
    CAPTURE(to_string(a));
    Network net = build(tiny(a, 4));
    // Perturb batch-norm buffers so they are checked too.
    for (auto& b : net.model().buffers()) {
      if (b.is_floating_point()) b.add_(0.25);
    }
    net.eval();
    const auto path = dir / (to_string(a) + ".pt");
    save_checkpoint(path, net, R"({"best_epoch":3})");
    Checkpoint info;
    Network back = load_checkpoint(path, &info);
    back.eval();
    CHECK(info.spec == net.spec());
    CHECK(info.train_meta_json == R"({"best_epoch":3})");
    CHECK(read_checkpoint_info(path).spec == net.spec());
    const auto x = random_nhwc(1, 64, 64, 2);
    CHECK(torch::equal(net.forward(x), back.forward(x)));
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "absent.pt"), InputError);
  {
    std::ofstream junk(dir / "junk.pt");
    junk << "not a checkpoint";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.pt"), InputError);
}

TEST_CASE("build report lists every architecture against its target") {
  const auto rows = build_report({Architecture::SegNet, Architecture::FCDenseNet});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].target == doctest::Approx(34.97e6));
  CHECK(rows[1].target == doctest::Approx(9.27e6));
  for (const auto& r : rows) {
    CHECK(r.deviation == doctest::Approx((r.params - r.target) / r.target));
    CHECK(std::abs(r.deviation) <= 0.15);
  }
}
