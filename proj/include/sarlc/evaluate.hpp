#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sarlc/grid.hpp"
#include "sarlc/raster_io.hpp"

namespace sarlc {

// k x k pixel counts. Rows are reference classes i, columns predicted
// classes j.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int k = kNumClasses);
  static ConfusionMatrix from_rows(const std::vector<std::vector<std::uint64_t>>& rows);

  int k() const { return k_; }
  std::uint64_t operator()(int i, int j) const { return f_[index(i, j)]; }
  void add(int reference, int predicted, std::uint64_t count = 1);

  std::uint64_t total() const;            // N
  std::uint64_t row_total(int i) const;   // r_i
  std::uint64_t col_total(int j) const;   // c_j
  std::uint64_t trace() const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend ConfusionMatrix operator+(ConfusionMatrix a, const ConfusionMatrix& b) { return a += b; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t index(int i, int j) const;

  int k_;
  std::vector<std::uint64_t> f_;
};

// Adds one count per pixel where both masks carry a class id; pixels that
// are nodata in either mask are skipped. Throws InputError on shape mismatch.
void accumulate(ConfusionMatrix& cm, const Grid<std::uint8_t>& reference, const Grid<std::uint8_t>& predicted);

// Percentages. Producer's accuracy is diagonal over the reference row total,
// user's accuracy diagonal over the predicted column total. A zero total
// throws UndefinedMetric.
double producer_accuracy(const ConfusionMatrix& cm, int c);
double user_accuracy(const ConfusionMatrix& cm, int c);
double overall_accuracy(const ConfusionMatrix& cm);

struct KappaTerms {
  double observed = 0.0;  // P_o
  double expected = 0.0;  // P_e
  double kappa = 0.0;
};

// Cohen's kappa, evaluated as an exact integer ratio
// (N * trace - sum r_i c_i) / (N^2 - sum r_i c_i). Throws UndefinedMetric when
// N == 0 or P_e == 1.
KappaTerms kappa_terms(const ConfusionMatrix& cm);
double kappa(const ConfusionMatrix& cm);

// poor / fair / moderate / good / very good for [0,.2) [.2,.4) [.4,.6) [.6,.8) [.8,1].
std::string agreement_label(double kappa);

struct ClassMetrics {
  int id = 0;
  std::string name;
  std::optional<double> producer_accuracy;
  std::optional<double> user_accuracy;
  std::uint64_t reference_pixels = 0;
  double area_km2 = 0.0;
};

struct MetricsReport {
  std::vector<ClassMetrics> classes;
  std::optional<double> overall_accuracy;
  std::optional<double> kappa;
  std::string agreement;  // empty when kappa is undefined
  std::uint64_t total_pixels = 0;
  double pixel_size_m = 20.0;
};

MetricsReport report(const ConfusionMatrix& cm, const ClassCodebook& codebook = default_codebook(),
                     double pixel_size_m = 20.0);

void write_report_text(std::ostream& out, const MetricsReport& r);
void write_report_csv(std::ostream& out, const MetricsReport& r);
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);
ConfusionMatrix read_confusion_csv(std::istream& in);

}  // namespace sarlc
