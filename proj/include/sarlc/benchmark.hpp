#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sarlc/data.hpp"
#include "sarlc/models.hpp"

namespace sarlc {

struct InferenceTiming {
  std::string name;
  double seconds_per_image = 0.0;
  double stddev = 0.0;  // across repetitions
  int repetitions = 0;
  bool high_variance = false;  // single repetition or > 20% spread
};

struct InferenceReport {
  std::string hardware;
  std::vector<InferenceTiming> timings;
  // Indices into timings, fastest first.
  std::vector<std::size_t> ranking() const;
};

std::string hardware_descriptor();

// Mean wall-clock seconds per imagelet over `repetitions` passes, after
// `warmup` untimed passes.
InferenceTiming benchmark_inference(Network& net, const std::vector<Imagelet>& imagelets, int repetitions,
                                    int warmup = 1);

InferenceReport benchmark_inference(const std::vector<std::pair<std::string, Network*>>& nets,
                                    const std::vector<Imagelet>& imagelets, int repetitions, int warmup = 1);

void write_inference_report(std::ostream& out, const InferenceReport& r);

}  // namespace sarlc
