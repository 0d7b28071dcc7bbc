#include "surplus/matrix.h"

#include "surplus/errors.h"

namespace surplus {

Matrix Matrix::from_columns(const std::vector<std::vector<double>>& columns) {
  if (columns.empty()) return Matrix();
  Matrix m(columns.front().size(), columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != m.rows_) {
      throw ValidationError("Matrix::from_columns: ragged columns");
    }
    std::copy(columns[c].begin(), columns[c].end(), m.col(c).begin());
  }
  return m;
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t c = 0; c < cols_; ++c) {
    auto src = col(c);
    auto dst = out.col(c);
    for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = src[rows[i]];
  }
  return out;
}

}  // namespace surplus
