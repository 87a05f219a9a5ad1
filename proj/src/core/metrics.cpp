#include <cmath>
#include <iomanip>
#include <sstream>
#include <ostream>

#include "sarlc/errors.hpp"
#include "sarlc/evaluate.hpp"

namespace sarlc {

double producer_accuracy(const ConfusionMatrix& cm, int c) {
  const auto r = cm.row_total(c);
  if (r == 0) throw UndefinedMetric("producer's accuracy undefined: no reference pixels of class " + std::to_string(c));
  return 100.0 * static_cast<double>(cm(c, c)) / static_cast<double>(r);
}

double user_accuracy(const ConfusionMatrix& cm, int c) {
  const auto col = cm.col_total(c);
  if (col == 0) throw UndefinedMetric("user's accuracy undefined: no pixels predicted as class " + std::to_string(c));
  return 100.0 * static_cast<double>(cm(c, c)) / static_cast<double>(col);
}

double overall_accuracy(const ConfusionMatrix& cm) {
  const auto n = cm.total();
  if (n == 0) throw UndefinedMetric("overall accuracy undefined: empty confusion matrix");
  return 100.0 * static_cast<double>(cm.trace()) / static_cast<double>(n);
}

KappaTerms kappa_terms(const ConfusionMatrix& cm) {
  using Wide = unsigned __int128;
  const Wide n = cm.total();
  if (n == 0) throw UndefinedMetric("kappa undefined: empty confusion matrix");
  Wide chance = 0;  // sum_i r_i c_i
  for (int i = 0; i < cm.k(); ++i) chance += static_cast<Wide>(cm.row_total(i)) * cm.col_total(i);
  const Wide n2 = n * n;
  if (chance == n2) throw UndefinedMetric("kappa undefined: expected agreement is 1");
  const Wide agree = n * cm.trace();

  // Numerator may be negative; keep the sign separately.
  const bool negative = agree < chance;
  const Wide num = negative ? chance - agree : agree - chance;
  const Wide den = n2 - chance;

  KappaTerms t;
  t.observed = static_cast<double>(static_cast<long double>(cm.trace()) / static_cast<long double>(n));
  t.expected = static_cast<double>(static_cast<long double>(chance) / static_cast<long double>(n2));
  long double k = static_cast<long double>(num) / static_cast<long double>(den);
  t.kappa = static_cast<double>(negative ? -k : k);
  return t;
}

double kappa(const ConfusionMatrix& cm) { return kappa_terms(cm).kappa; }

std::string agreement_label(double k) {
  if (k < 0.2) return "poor";
  if (k < 0.4) return "fair";
  if (k < 0.6) return "moderate";
  if (k < 0.8) return "good";
  return "very good";
}

MetricsReport report(const ConfusionMatrix& cm, const ClassCodebook& codebook, double pixel_size_m) {
  MetricsReport r;
  r.total_pixels = cm.total();
  r.pixel_size_m = pixel_size_m;
  const double pixel_km2 = pixel_size_m * pixel_size_m / 1e6;
  for (int c = 0; c < cm.k(); ++c) {
    ClassMetrics m;
    m.id = c;
    m.name = c < static_cast<int>(codebook.entries.size()) ? codebook.at(c).name : "class" + std::to_string(c);
    m.reference_pixels = cm.row_total(c);
    m.area_km2 = static_cast<double>(m.reference_pixels) * pixel_km2;
    try {
      m.producer_accuracy = producer_accuracy(cm, c);
    } catch (const UndefinedMetric&) {
    }
    try {
      m.user_accuracy = user_accuracy(cm, c);
    } catch (const UndefinedMetric&) {
    }
    r.classes.push_back(std::move(m));
  }
  try {
    r.overall_accuracy = overall_accuracy(cm);
  } catch (const UndefinedMetric&) {
  }
  try {
    r.kappa = kappa(cm);
    r.agreement = agreement_label(*r.kappa);
  } catch (const UndefinedMetric&) {
  }
  return r;
}

namespace {

std::string fmt(const std::optional<double>& v, int precision) {
  if (!v) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << *v;
  return os.str();
}

}  // namespace

void write_report_text(std::ostream& out, const MetricsReport& r) {
  out << "class        test_area_km2   UA(%)   PA(%)\n";
  for (const auto& c : r.classes) {
    out << std::left << std::setw(12) << c.name << std::right << std::setw(14) << fmt(c.area_km2, 3) << std::setw(8)
        << fmt(c.user_accuracy, 1) << std::setw(8) << fmt(c.producer_accuracy, 1) << "\n";
  }
  out << "overall accuracy (%): " << fmt(r.overall_accuracy, 2) << "\n";
  out << "kappa: " << fmt(r.kappa, 3);
  if (!r.agreement.empty()) out << " (" << r.agreement << ")";
  out << "\n";
  out << "pixels: " << r.total_pixels << " at " << r.pixel_size_m << " m\n";
}

void write_report_csv(std::ostream& out, const MetricsReport& r) {
  out << "metric,class,value\n";
  for (const auto& c : r.classes) {
    out << "user_accuracy," << c.name << ',' << fmt(c.user_accuracy, 6) << "\n";
    out << "producer_accuracy," << c.name << ',' << fmt(c.producer_accuracy, 6) << "\n";
    out << "area_km2," << c.name << ',' << fmt(c.area_km2, 6) << "\n";
  }
  out << "overall_accuracy,," << fmt(r.overall_accuracy, 6) << "\n";
  out << "kappa,," << fmt(r.kappa, 6) << "\n";
  out << "agreement,," << (r.agreement.empty() ? "n/a" : r.agreement) << "\n";
  out << "total_pixels,," << r.total_pixels << "\n";
}

}  // namespace sarlc
