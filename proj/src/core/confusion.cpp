#include <sstream>

#include "sarlc/errors.hpp"
#include "sarlc/evaluate.hpp"

namespace sarlc {

ConfusionMatrix::ConfusionMatrix(int k) : k_(k), f_(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0) {
  if (k <= 0) throw InputError("confusion matrix needs k > 0");
}

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::uint64_t>>& rows) {
  ConfusionMatrix cm(static_cast<int>(rows.size()));
  for (int i = 0; i < cm.k_; ++i) {
    if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != cm.k_) {
      throw InputError("confusion matrix rows must all have k entries");
    }
    for (int j = 0; j < cm.k_; ++j) cm.f_[cm.index(i, j)] = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return cm;
}

std::size_t ConfusionMatrix::index(int i, int j) const {
  if (i < 0 || i >= k_ || j < 0 || j >= k_) throw InputError("confusion matrix index out of range");
  return static_cast<std::size_t>(i) * static_cast<std::size_t>(k_) + static_cast<std::size_t>(j);
}

void ConfusionMatrix::add(int reference, int predicted, std::uint64_t count) { f_[index(reference, predicted)] += count; }

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (auto v : f_) n += v;
  return n;
}

std::uint64_t ConfusionMatrix::row_total(int i) const {
  std::uint64_t n = 0;
  for (int j = 0; j < k_; ++j) n += (*this)(i, j);
  return n;
}

std::uint64_t ConfusionMatrix::col_total(int j) const {
  std::uint64_t n = 0;
  for (int i = 0; i < k_; ++i) n += (*this)(i, j);
  return n;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t n = 0;
  for (int i = 0; i < k_; ++i) n += (*this)(i, i);
  return n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw InputError("cannot merge confusion matrices of different size");
  for (std::size_t i = 0; i < f_.size(); ++i) f_[i] += other.f_[i];
  return *this;
}

void accumulate(ConfusionMatrix& cm, const Grid<std::uint8_t>& reference, const Grid<std::uint8_t>& predicted) {
  if (!reference.same_shape(predicted)) throw InputError("accumulate: reference and prediction shapes differ");
  const int k = cm.k();
  // Count into a local dense table first, then merge once.
  std::vector<std::uint64_t> local(static_cast<std::size_t>(k) * k, 0);
  for (std::size_t p = 0; p < reference.size(); ++p) {
    const int i = reference[p];
    const int j = predicted[p];
    if (i >= k || j >= k) continue;  // nodata (or unknown) in either mask
    ++local[static_cast<std::size_t>(i) * k + j];
  }
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (auto n = local[static_cast<std::size_t>(i) * k + j]) cm.add(i, j, n);
    }
  }
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  for (int i = 0; i < cm.k(); ++i) {
    for (int j = 0; j < cm.k(); ++j) {
      if (j) out << ',';
      out << cm(i, j);
    }
    out << '\n';
  }
}

ConfusionMatrix read_confusion_csv(std::istream& in) {
  std::vector<std::vector<std::uint64_t>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::uint64_t> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stoull(cell, &used));
      } catch (const std::exception&) {
        throw InputError("confusion csv: bad count '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("confusion csv is empty");
  return ConfusionMatrix::from_rows(rows);
}

}  // namespace sarlc
