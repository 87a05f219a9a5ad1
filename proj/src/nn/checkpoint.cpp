#include <torch/serialize.h>

#include "sarlc/errors.hpp"
#include "sarlc/models.hpp"

namespace sarlc {

namespace {

torch::serialize::InputArchive open_archive(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("checkpoint " + path.string() + " does not exist");
  torch::serialize::InputArchive root;
  try {
    root.load_from(path.string());
  } catch (const c10::Error&) {
    throw InputError("checkpoint " + path.string() + " is unreadable");
  }
  return root;
}

std::string read_string(torch::serialize::InputArchive& root, const std::string& key,
                        const std::filesystem::path& path) {
  c10::IValue v;
  if (!root.try_read(key, v) || !v.isString()) throw InputError("checkpoint " + path.string() + " lacks " + key);
  return v.toStringRef();
}

Checkpoint read_info(torch::serialize::InputArchive& root, const std::filesystem::path& path) {
  c10::IValue version;
  if (!root.try_read("format_version", version) || !version.isInt()) {
    throw InputError(path.string() + " is not a checkpoint");
  }
  if (version.toInt() != kCheckpointVersion) {
    throw InputError("checkpoint " + path.string() + " has format version " + std::to_string(version.toInt()) +
                     ", expected " + std::to_string(kCheckpointVersion));
  }
  Checkpoint c;
  c.spec = ArchitectureSpec::from_json(read_string(root, "spec_json", path));
  c.train_meta_json = read_string(root, "train_meta_json", path);
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Network& net, const std::string& train_meta_json) {
  torch::serialize::OutputArchive root;
  root.write("format_version", c10::IValue(kCheckpointVersion));
  ArchitectureSpec spec = net.spec();
  spec.pretrained_encoder.reset();  // the weights are in the checkpoint itself
  root.write("spec_json", c10::IValue(spec.to_json()));
  root.write("train_meta_json", c10::IValue(train_meta_json));
  torch::serialize::OutputArchive model;
  net.model().save(model);
  root.write("model", model);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  root.save_to(tmp.string());
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint_info(const std::filesystem::path& path) {
  auto root = open_archive(path);
  return read_info(root, path);
}

Network load_checkpoint(const std::filesystem::path& path, Checkpoint* info) {
  auto root = open_archive(path);
  Checkpoint c = read_info(root, path);
  Network net = build(c.spec);
  torch::serialize::InputArchive model;
  if (!root.try_read("model", model)) throw InputError("checkpoint " + path.string() + " has no model state");
  try {
    net.model().load(model);
  } catch (const c10::Error& e) {
    throw InputError("checkpoint " + path.string() + " does not match its architecture spec");
  }
  if (info) *info = c;
  return net;
}

}  // namespace sarlc
