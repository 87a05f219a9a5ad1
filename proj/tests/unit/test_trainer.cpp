#include <algorithm>
#include <cmath>
#include <sstream>

#include <torch/torch.h>

#include "nn_support.hpp"
#include "sarlc/errors.hpp"
#include "sarlc/trainer.hpp"
#include "test_support.hpp"
#include "doctest_torch.hpp"

using namespace sarlc;

namespace {

ArchitectureSpec small_spec(Architecture a = Architecture::MobileUNet) {
  auto s = ArchitectureSpec::make(a, 0.125, Depth::Compact);
  s.init_seed = 11;
  return s;
}

TrainConfig quick(int max_epochs) {
  TrainConfig c;
  c.max_epochs = max_epochs;
  c.batch_size = 2;
  c.learning_rate = 1e-3;
  return c;
}

std::vector<torch::Tensor> params_of(Network& net) {
  std::vector<torch::Tensor> out;
  for (const auto& p : net.model().parameters()) out.push_back(p.detach().clone());
  for (const auto& b : net.model().buffers()) out.push_back(b.detach().clone());
  return out;
}

bool same_state(Network& net, const std::vector<torch::Tensor>& s) {
  auto now = params_of(net);
  if (now.size() != s.size()) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!torch::equal(now[i], s[i])) return false;
  }
  return true;
}

Imagelet all_nodata(int px) {
  Imagelet im;
  for (auto& c : im.channels) c = Grid<std::uint8_t>(px, px, 100);
  im.labels = Grid<std::uint8_t>(px, px, kNodataLabel);
  return im;
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK(c.learning_rate == 1e-4);
  CHECK(c.beta1 == 0.9);
  CHECK(c.beta2 == 0.999);
  CHECK(c.patience_epochs == 10);
  CHECK_NOTHROW(c.validate());
  c.patience_epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.learning_rate = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("masked cross-entropy: uniform logits, one-hot logits and masking") {
  const auto labels = torch::randint(0, 5, {2, 8, 8}, torch::kInt64);
  const auto uniform = torch::zeros({2, 5, 8, 8});
  const LossSum u = masked_cross_entropy(uniform, labels);
  CHECK(u.count == 128);
  CHECK(std::abs(u.mean() - std::log(5.0)) <= 1e-6);

  const auto onehot = torch::one_hot(labels, 5).permute({0, 3, 1, 2}).to(torch::kFloat32) * 50.0f;
  CHECK(masked_cross_entropy(onehot, labels).mean() < 1e-12);

  // Nodata pixels change neither the mean nor the sum.
  auto logits = torch::randn({2, 5, 8, 8});
  auto masked = labels.clone();
  masked.index_put_({0, torch::indexing::Slice(0, 4)}, kNodataLabel);
  const LossSum full = masked_cross_entropy(logits, labels);
  const LossSum part = masked_cross_entropy(logits, masked);
  CHECK(part.count == 128 - 32);
  auto bigger_logits = torch::cat({logits, torch::randn({1, 5, 8, 8})}, 0);
  auto bigger_labels = torch::cat({masked, torch::full({1, 8, 8}, kNodataLabel, torch::kInt64)}, 0);
  const LossSum padded = masked_cross_entropy(bigger_logits, bigger_labels);
  CHECK(padded.count == part.count);
  CHECK(padded.sum == doctest::Approx(part.sum).epsilon(1e-6));
  CHECK(full.count == 128);
  CHECK(masked_cross_entropy(logits, torch::full({2, 8, 8}, kNodataLabel, torch::kInt64)).count == 0);
}

TEST_CASE("dev loss ignores all-nodata imagelets") {
  auto data = testing::two_region_imagelets(3, 64, 4);
  Network net = build(small_spec());
  const auto base = evaluate_dev_loss(net, data, 2);
  VectorSource with_void = data;
  with_void.push_back(all_nodata(64));
  const auto padded = evaluate_dev_loss(net, with_void, 2);
  CHECK(padded.pixels == base.pixels);
  CHECK(padded.loss == doctest::Approx(base.loss).epsilon(1e-6));
  CHECK(padded.overall_accuracy == doctest::Approx(base.overall_accuracy));
  CHECK(base.pixels == 3 * 64 * 64);
}

TEST_CASE("empty splits are rejected") {
  Network net = build(small_spec());
  VectorSource empty;
  auto data = testing::two_region_imagelets(2, 64, 1);
  CHECK_THROWS_AS(train(net, empty, data, quick(1)), ConfigError);
  CHECK_THROWS_AS(train(net, data, empty, quick(1)), ConfigError);
}

TEST_CASE("one optimiser step changes the parameters") {
  auto data = testing::two_region_imagelets(2, 64, 2);
  Network net = build(small_spec());
  const auto before = params_of(net);
  auto c = quick(1);
  c.augment = false;
  const auto h = train(net, data, data, c);
  CHECK(h.epochs.size() == 1);
  CHECK(h.best_epoch == 1);
  CHECK_FALSE(same_state(net, before));
}

TEST_CASE("scripted dev trace: best at 2, stop at 12, epoch-2 weights returned") {
  testing::TempDir dir("trainer");
  auto data = testing::two_region_imagelets(2, 64, 3);
  Network net = build(small_spec());
  std::vector<double> trace{1.0, 0.9, 0.95};
  std::vector<torch::Tensor> at_best;
  TrainHooks hooks;
  hooks.dev_loss_override = [&](int epoch, double) { return epoch <= 3 ? trace[epoch - 1] : 0.95; };
  hooks.on_epoch_end = [&](int epoch, Network& n, const EpochRecord&) {
    if (epoch == 2) at_best = params_of(n);
  };
  auto c = quick(100);
  const auto ckpt = dir / "best.pt";
  const TrainHistory h = train(net, data, data, c, ckpt, hooks);
  CHECK(h.best_epoch == 2);
  CHECK(h.stop_epoch == 12);
  CHECK(h.early_stopped);
  CHECK(h.epochs.size() == 12);
  CHECK(h.stop_epoch == h.best_epoch + c.patience_epochs);
  for (const auto& e : h.epochs) CHECK(e.dev_loss >= h.epochs[1].dev_loss);
  CHECK(same_state(net, at_best));

  Checkpoint info;
  Network back = load_checkpoint(ckpt, &info);
  CHECK(same_state(back, at_best));
  CHECK(info.train_meta_json.find("\"best_epoch\":2") != std::string::npos);

  std::ostringstream csv;
  write_history_csv(csv, h);
  const std::string text = csv.str();
  CHECK(text.substr(0, text.find('\n')) == "epoch,train_loss,dev_loss,dev_oa");
  CHECK(std::count(text.begin(), text.end(), '\n') == 13);
}

TEST_CASE("best epoch is chosen by strict improvement") {
  auto data = testing::two_region_imagelets(2, 64, 3);
  Network net = build(small_spec());
  TrainHooks hooks;
  // Ties after epoch 1 never count as improvement.
  hooks.dev_loss_override = [](int, double) { return 0.5; };
  auto c = quick(50);
  c.patience_epochs = 3;
  const auto h = train(net, data, data, c, {}, hooks);
  CHECK(h.best_epoch == 1);
  CHECK(h.stop_epoch == 4);
}

TEST_CASE("max_epochs caps a run that keeps improving") {
  auto data = testing::two_region_imagelets(2, 64, 3);
  Network net = build(small_spec());
  TrainHooks hooks;
  hooks.dev_loss_override = [](int epoch, double) { return 1.0 / epoch; };
  const auto h = train(net, data, data, quick(4), {}, hooks);
  CHECK(h.best_epoch == 4);
  CHECK(h.stop_epoch == 4);
  CHECK_FALSE(h.early_stopped);
  CHECK(h.stop_reason == "max_epochs reached");
}

TEST_CASE("non-finite dev loss raises DivergenceError and keeps the best weights") {
  auto data = testing::two_region_imagelets(2, 64, 3);
  Network net = build(small_spec());
  std::vector<torch::Tensor> at_best;
  TrainHooks hooks;
  hooks.dev_loss_override = [](int epoch, double) {
    return epoch == 3 ? std::numeric_limits<double>::quiet_NaN() : 1.0 / epoch;
  };
  hooks.on_epoch_end = [&](int epoch, Network& n, const EpochRecord&) {
    if (epoch == 2) at_best = params_of(n);
  };
  CHECK_THROWS_AS(train(net, data, data, quick(10), {}, hooks), DivergenceError);
  CHECK(same_state(net, at_best));
}

TEST_CASE("same config and seeds give the same history") {
  auto data = testing::two_region_imagelets(4, 64, 8);
  auto run = [&] {
    Network net = build(small_spec(Architecture::FCDenseNet));
    return train(net, data, data, quick(3));
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.epochs.size() == b.epochs.size());
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    CHECK(std::abs(a.epochs[i].train_loss - b.epochs[i].train_loss) <= 1e-4);
    CHECK(std::abs(a.epochs[i].dev_loss - b.epochs[i].dev_loss) <= 1e-4);
  }
  CHECK(a.best_epoch == b.best_epoch);
}

TEST_CASE("accuracy target stops on a best epoch") {
  auto data = testing::two_region_imagelets(2, 64, 3);
  Network net = build(small_spec());
  auto c = quick(20);
  c.stop_at_dev_accuracy = 0.0;
  const auto h = train(net, data, data, c);
  CHECK(h.stop_epoch == 1);
  CHECK(h.best_epoch == 1);
  CHECK_FALSE(h.early_stopped);
}
