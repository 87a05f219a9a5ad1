#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sarlc {

// Dense row-major 2D array. Rows are image lines, columns are samples.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), cells_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  bool same_shape(const Grid& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  T& operator()(int r, int c) { return cells_[index(r, c)]; }
  const T& operator()(int r, int c) const { return cells_[index(r, c)]; }
  T& operator[](std::size_t i) { return cells_[i]; }
  const T& operator[](std::size_t i) const { return cells_[i]; }

  std::span<T> data() { return cells_; }
  std::span<const T> data() const { return cells_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> cells_;
};

using Mask = Grid<std::uint8_t>;  // 1 = nodata

// Copy of the rows x cols window whose top-left corner is (row, col).
// Caller guarantees the window lies inside the source.
template <typename T>
Grid<T> crop(const Grid<T>& src, int row, int col, int rows, int cols) {
  Grid<T> out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out(r, c) = src(row + r, col + c);
  }
  return out;
}

}  // namespace sarlc
