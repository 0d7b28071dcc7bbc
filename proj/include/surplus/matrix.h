#ifndef SURPLUS_MATRIX_H_
#define SURPLUS_MATRIX_H_

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace surplus {

// Dense column-major matrix of doubles. Columns are contiguous, which is the
// access pattern of every learner and importance method here.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  // Builds a matrix from a list of equally sized columns.
  static Matrix from_columns(const std::vector<std::vector<double>>& columns);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[c * rows_ + r];
  }
  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[c * rows_ + r];
  }

  std::span<const double> col(std::size_t c) const {
    return {data_.data() + c * rows_, rows_};
  }
  std::span<double> col(std::size_t c) {
    return {data_.data() + c * rows_, rows_};
  }

  // Copy of the selected rows, all columns.
  Matrix select_rows(std::span<const std::size_t> rows) const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace surplus

#endif  // SURPLUS_MATRIX_H_
