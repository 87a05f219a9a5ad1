#include "sarlc/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sarlc/augment.hpp"
#include "sarlc/errors.hpp"
#include "sarlc/log.hpp"
#include "sarlc/random.hpp"

namespace sarlc {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (patience_epochs < 1) throw ConfigError("patience_epochs must be at least 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
}

void write_history_csv(std::ostream& out, const TrainHistory& h) {
  out << "epoch,train_loss,dev_loss,dev_oa\n";
  out.precision(10);
  for (const auto& e : h.epochs) {
    out << e.epoch << ',' << e.train_loss << ',' << e.dev_loss << ',' << e.dev_overall_accuracy << '\n';
  }
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& h) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  write_history_csv(out, h);
}

torch::Tensor masked_cross_entropy_sum(const torch::Tensor& logits, const torch::Tensor& labels) {
  namespace F = torch::nn::functional;
  return F::cross_entropy(logits, labels,
                          F::CrossEntropyFuncOptions().ignore_index(kNodataLabel).reduction(torch::kSum));
}

LossSum masked_cross_entropy(const torch::Tensor& logits, const torch::Tensor& labels) {
  LossSum s;
  s.count = labels.ne(kNodataLabel).sum().item<std::int64_t>();
  s.sum = s.count == 0 ? 0.0 : masked_cross_entropy_sum(logits, labels).item<double>();
  return s;
}

namespace {

std::vector<Imagelet> gather(const ImageletSource& src, const std::vector<std::size_t>& order, std::size_t begin,
                             std::size_t end) {
  std::vector<Imagelet> out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) out.push_back(src.get(order[i]));
  return out;
}

// Parameters and buffers, detached copies in module order.
std::vector<torch::Tensor> snapshot(torch::nn::Module& m) {
  std::vector<torch::Tensor> s;
  for (const auto& p : m.parameters()) s.push_back(p.detach().clone());
  for (const auto& b : m.buffers()) s.push_back(b.detach().clone());
  return s;
}

void restore(torch::nn::Module& m, const std::vector<torch::Tensor>& s) {
  torch::NoGradGuard guard;
  std::size_t i = 0;
  for (auto& p : m.parameters()) p.copy_(s.at(i++));
  for (auto& b : m.buffers()) b.copy_(s.at(i++));
}

std::string meta_json(const TrainConfig& c, const EpochRecord& best) {
  nlohmann::ordered_json j;
  j["best_epoch"] = best.epoch;
  j["dev_loss"] = best.dev_loss;
  j["dev_oa"] = best.dev_overall_accuracy;
  j["learning_rate"] = c.learning_rate;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["batch_size"] = c.batch_size;
  return j.dump();
}

}  // namespace

DevEvaluation evaluate_dev_loss(Network& net, const ImageletSource& dev, int batch_size) {
  torch::NoGradGuard guard;
  net.eval();
  double sum = 0.0;
  std::int64_t count = 0;
  std::int64_t correct = 0;
  std::vector<std::size_t> order(dev.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(batch_size)) {
    const auto e = std::min(order.size(), b + static_cast<std::size_t>(batch_size));
    Batch batch = make_batch(gather(dev, order, b, e));
    auto labels = batch.labels.to(net.device());
    auto logits = net.forward_nchw(batch.images.to(net.device()));
    auto valid = labels.ne(kNodataLabel);
    const auto n = valid.sum().item<std::int64_t>();
    if (n == 0) continue;
    sum += masked_cross_entropy_sum(logits, labels).item<double>();
    count += n;
    correct += (logits.argmax(1).eq(labels) & valid).sum().item<std::int64_t>();
  }
  DevEvaluation d;
  d.pixels = count;
  if (count > 0) {
    d.loss = sum / static_cast<double>(count);
    d.overall_accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(count);
  }
  return d;
}

TrainHistory train(Network& net, const ImageletSource& train_set, const ImageletSource& dev_set,
                   const TrainConfig& config, const std::filesystem::path& checkpoint_path, const TrainHooks& hooks) {
  config.validate();
  if (train_set.size() == 0) throw ConfigError("TRAIN split is empty");
  if (dev_set.size() == 0) throw ConfigError("DEV split is empty");

  torch::manual_seed(hash_combine(config.shuffle_seed, 0x64726f70ULL));  // dropout stream
  torch::optim::Adam optimizer(net.model().parameters(), torch::optim::AdamOptions(config.learning_rate)
                                                             .betas({config.beta1, config.beta2}));
  TrainHistory history;
  std::vector<torch::Tensor> best_state = snapshot(net.model());
  double best_loss = std::numeric_limits<double>::infinity();
  EpochRecord best_record;
  const auto bs = static_cast<std::size_t>(config.batch_size);
  const bool have_checkpoint = !checkpoint_path.empty();

  auto diverge = [&](int epoch, const std::string& what) {
    restore(net.model(), best_state);
    throw DivergenceError("non-finite " + what + " in epoch " + std::to_string(epoch) +
                          (history.best_epoch > 0 ? "; weights of epoch " + std::to_string(history.best_epoch) +
                                                        " retained"
                                                  : std::string()));
  };

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    net.train();
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle(hash_combine(config.shuffle_seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(shuffle, i)]);

    double loss_sum = 0.0;
    std::int64_t loss_count = 0;
    for (std::size_t b = 0; b < order.size(); b += bs) {
      const auto e = std::min(order.size(), b + bs);
      auto items = gather(train_set, order, b, e);
      if (config.augment) {
        for (std::size_t k = 0; k < items.size(); ++k) {
          Rng draw = augment_stream(config.augment_seed, static_cast<std::uint64_t>(epoch), order[b + k]);
          items[k] = apply(sample_op(draw), items[k]);
        }
      }
      Batch batch = make_batch(items);
      auto labels = batch.labels.to(net.device());
      const auto n = labels.ne(kNodataLabel).sum().item<std::int64_t>();
      if (n == 0) continue;
      optimizer.zero_grad();
      auto logits = net.forward_nchw(batch.images.to(net.device()));
      auto total = masked_cross_entropy_sum(logits, labels);
      const double value = total.item<double>();
      if (!std::isfinite(value)) diverge(epoch, "training loss");
      (total / static_cast<double>(n)).backward();
      optimizer.step();
      loss_sum += value;
      loss_count += n;
    }

    DevEvaluation dev = evaluate_dev_loss(net, dev_set, config.batch_size);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    rec.dev_loss = hooks.dev_loss_override ? hooks.dev_loss_override(epoch, dev.loss) : dev.loss;
    rec.dev_overall_accuracy = dev.overall_accuracy;
    if (!std::isfinite(rec.dev_loss)) diverge(epoch, "dev loss");
    history.epochs.push_back(rec);

    if (rec.dev_loss < best_loss) {
      best_loss = rec.dev_loss;
      best_record = rec;
      history.best_epoch = epoch;
      best_state = snapshot(net.model());
      if (have_checkpoint) save_checkpoint(checkpoint_path, net, meta_json(config, rec));
    }
    std::ostringstream msg;
    msg << to_string(net.spec().name) << " epoch " << epoch << " train_loss " << rec.train_loss << " dev_loss "
        << rec.dev_loss << " dev_oa " << rec.dev_overall_accuracy << (history.best_epoch == epoch ? " *" : "");
    log::info("trainer", msg.str());
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, net, rec);

    history.stop_epoch = epoch;
    // Only on a best epoch, so the returned weights still are the best ones.
    if (config.stop_at_dev_accuracy && history.best_epoch == epoch &&
        rec.dev_overall_accuracy >= *config.stop_at_dev_accuracy) {
      history.stop_reason = "dev accuracy target reached";
      break;
    }
    if (epoch - history.best_epoch >= config.patience_epochs) {
      history.early_stopped = true;
      history.stop_reason = "no dev loss improvement for " + std::to_string(config.patience_epochs) + " epochs";
      break;
    }
  }
  if (history.stop_reason.empty()) history.stop_reason = "max_epochs reached";

  restore(net.model(), best_state);
  net.eval();
  return history;
}

}  // namespace sarlc
