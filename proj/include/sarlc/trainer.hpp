#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sarlc/data.hpp"
#include "sarlc/models.hpp"

namespace sarlc {

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int patience_epochs = 10;
  int max_epochs = 200;
  int batch_size = 2;
  bool augment = true;
  std::uint64_t shuffle_seed = 1;
  std::uint64_t augment_seed = 2;
  // Ends training at the first best-loss epoch whose dev pixel accuracy
  // (percent) reaches this value.
  std::optional<double> stop_at_dev_accuracy;
  void validate() const;  // throws ConfigError
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_overall_accuracy = 0.0;  // percent
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  int stop_epoch = 0;
  bool early_stopped = false;
  std::string stop_reason;
};

void write_history_csv(std::ostream& out, const TrainHistory& h);
void write_history_csv(const std::filesystem::path& path, const TrainHistory& h);

struct TrainHooks {
  // Replaces the measured dev loss of an epoch; for exercising the stopping
  // rule with a scripted trace.
  std::function<double(int epoch, double measured)> dev_loss_override;
  std::function<void(int epoch, Network& net, const EpochRecord& record)> on_epoch_end;
};

// Sum of per-pixel cross-entropy over labelled pixels and their count.
struct LossSum {
  double sum = 0.0;
  std::int64_t count = 0;
  double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
};

// logits B x K x H x W, labels B x H x W with kNodataLabel ignored.
torch::Tensor masked_cross_entropy_sum(const torch::Tensor& logits, const torch::Tensor& labels);
LossSum masked_cross_entropy(const torch::Tensor& logits, const torch::Tensor& labels);

struct DevEvaluation {
  double loss = 0.0;
  double overall_accuracy = 0.0;  // percent
  std::int64_t pixels = 0;
};

// Mean loss over all labelled pixels of the source, no augmentation.
DevEvaluation evaluate_dev_loss(Network& net, const ImageletSource& dev, int batch_size);

// Adam on per-pixel cross-entropy with one augmentation op per imagelet and
// epoch. Keeps the weights of the lowest dev loss, writes them to
// checkpoint_path (if non-empty) whenever it improves, and stops `patience`
// epochs after the best one. On return the network holds the best weights.
TrainHistory train(Network& net, const ImageletSource& train_set, const ImageletSource& dev_set,
                   const TrainConfig& config, const std::filesystem::path& checkpoint_path = {},
                   const TrainHooks& hooks = {});

}  // namespace sarlc
