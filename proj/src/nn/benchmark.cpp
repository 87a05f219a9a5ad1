#include "sarlc/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <thread>

#include <torch/version.h>

#include "sarlc/errors.hpp"

namespace sarlc {

std::string hardware_descriptor() {
  std::string cpu = "unknown cpu";
  std::ifstream info("/proc/cpuinfo");
  for (std::string line; std::getline(info, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) cpu = line.substr(line.find_first_not_of(' ', colon + 1));
      break;
    }
  }
  return cpu + ", " + std::to_string(std::thread::hardware_concurrency()) + " hw threads, torch " +
         TORCH_VERSION + " threads " + std::to_string(torch::get_num_threads()) + ", cpu";
}

InferenceTiming benchmark_inference(Network& net, const std::vector<Imagelet>& imagelets, int repetitions,
                                    int warmup) {
  if (imagelets.empty()) throw ConfigError("benchmark needs at least one imagelet");
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (warmup < 1) throw ConfigError("at least one warmup pass is required");
  torch::NoGradGuard guard;
  net.eval();
  // Pre-built single-image batches so only the forward pass is timed.
  std::vector<torch::Tensor> inputs;
  for (const auto& im : imagelets) inputs.push_back(make_batch({im}).images.to(net.device()));

  auto pass = [&] {
    for (const auto& x : inputs) {
      auto y = net.forward_nchw(x).argmax(1);
      (void)y.to(torch::kCPU);
    }
  };
  for (int i = 0; i < warmup; ++i) pass();

  std::vector<double> per_image;
  for (int i = 0; i < repetitions; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    pass();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    per_image.push_back(dt.count() / static_cast<double>(inputs.size()));
  }
  InferenceTiming t;
  t.name = to_string(net.spec().name);
  t.repetitions = repetitions;
  t.seconds_per_image = std::accumulate(per_image.begin(), per_image.end(), 0.0) / repetitions;
  double var = 0.0;
  for (double v : per_image) var += (v - t.seconds_per_image) * (v - t.seconds_per_image);
  t.stddev = repetitions > 1 ? std::sqrt(var / (repetitions - 1)) : 0.0;
  t.high_variance = repetitions == 1 || t.stddev > 0.2 * t.seconds_per_image;
  return t;
}

InferenceReport benchmark_inference(const std::vector<std::pair<std::string, Network*>>& nets,
                                    const std::vector<Imagelet>& imagelets, int repetitions, int warmup) {
  InferenceReport r;
  r.hardware = hardware_descriptor();
  for (const auto& [name, net] : nets) {
    auto t = benchmark_inference(*net, imagelets, repetitions, warmup);
    t.name = name;
    r.timings.push_back(std::move(t));
  }
  return r;
}

std::vector<std::size_t> InferenceReport::ranking() const {
  std::vector<std::size_t> idx(timings.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return timings[a].seconds_per_image < timings[b].seconds_per_image;
  });
  return idx;
}

void write_inference_report(std::ostream& out, const InferenceReport& r) {
  out << "hardware: " << r.hardware << '\n';
  out << "rank,model,s_per_image,stddev,repetitions,high_variance\n";
  int rank = 1;
  for (std::size_t i : r.ranking()) {
    const auto& t = r.timings[i];
    out << rank++ << ',' << t.name << ',' << std::setprecision(6) << t.seconds_per_image << ',' << t.stddev << ','
        << t.repetitions << ',' << (t.high_variance ? "yes" : "no") << '\n';
  }
}

}  // namespace sarlc
