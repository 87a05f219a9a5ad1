#include <torch/serialize.h>

#include "sarlc/errors.hpp"
#include "sarlc/models.hpp"

namespace sarlc {

namespace {

std::shared_ptr<torch::nn::Module> encoder_of(const Network& net) {
  const auto& model = net.model();
  for (const auto& child : model.named_children()) {
    if (child.key() == "encoder") return child.value();
  }
  return nullptr;
}

}  // namespace

void export_encoder_weights(const Network& net, const std::filesystem::path& path) {
  auto encoder = encoder_of(net);
  if (!encoder || net.encoder_id().empty()) {
    throw WeightError(to_string(net.spec().name) + " has no pretrained-encoder slot");
  }
  torch::serialize::OutputArchive archive;
  archive.write("encoder_id", c10::IValue(net.encoder_id()));
  for (const auto& p : encoder->named_parameters()) archive.write(p.key(), p.value().detach().cpu());
  for (const auto& b : encoder->named_buffers()) archive.write(b.key(), b.value().cpu(), /*is_buffer=*/true);
  archive.save_to(path.string());
}

WeightReport load_pretrained_encoder(Network& net, const std::filesystem::path& path) {
  auto encoder = encoder_of(net);
  if (!encoder || net.encoder_id().empty()) {
    throw WeightError(to_string(net.spec().name) + " has no pretrained-encoder slot");
  }
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw WeightError("cannot read weight set " + path.string());
  }
  WeightReport report;
  c10::IValue id;
  if (!archive.try_read("encoder_id", id) || !id.isString()) {
    throw WeightError(path.string() + " is not an encoder weight set");
  }
  report.encoder_id = id.toStringRef();
  if (report.encoder_id != net.encoder_id()) {
    throw WeightError("weight set " + path.string() + " holds a " + report.encoder_id + " encoder, " +
                      to_string(net.spec().name) + " needs " + net.encoder_id());
  }

  std::vector<std::pair<torch::Tensor, torch::Tensor>> copies;
  auto visit = [&](const std::string& name, torch::Tensor target, bool is_buffer) {
    torch::Tensor source;
    if (!archive.try_read(name, source, is_buffer)) {
      report.unmatched.push_back(name);
      return;
    }
    if (source.sizes() != target.sizes()) {
      throw WeightError("shape mismatch for " + name + " in " + path.string());
    }
    copies.emplace_back(target, source);
    report.matched.push_back(name);
  };
  for (const auto& p : encoder->named_parameters()) visit(p.key(), p.value(), false);
  for (const auto& b : encoder->named_buffers()) visit(b.key(), b.value(), true);

  std::vector<std::string> expected = report.matched;
  expected.insert(expected.end(), report.unmatched.begin(), report.unmatched.end());
  for (const auto& key : archive.keys()) {
    if (key == "encoder_id") continue;
    if (std::find(expected.begin(), expected.end(), key) == expected.end()) report.unused.push_back(key);
  }

  torch::NoGradGuard guard;
  for (auto& [target, source] : copies) target.copy_(source.to(target.options()));
  return report;
}

}  // namespace sarlc
