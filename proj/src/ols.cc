#include "surplus/ols.h"

#include <Eigen/Dense>

namespace surplus {

void OlsPredictor::predict(const Matrix& x, std::span<const std::size_t> rows,
                           std::span<double> out) const {
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = intercept_;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    auto col = x.col(columns_[c]);
    const double b = coef_[c];
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] += b * col[rows[i]];
  }
}

OlsFit fit_ols(const Matrix& x, std::span<const double> y,
               std::span<const std::size_t> rows,
               std::span<const std::size_t> columns) {
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto q = static_cast<Eigen::Index>(columns.size());

  Eigen::VectorXd target(m);
  for (Eigen::Index i = 0; i < m; ++i) target[i] = y[rows[i]];
  const double y_mean = target.mean();
  target.array() -= y_mean;

  Eigen::MatrixXd design(m, q);
  Eigen::VectorXd x_mean(q);
  for (Eigen::Index c = 0; c < q; ++c) {
    auto col = x.col(columns[c]);
    for (Eigen::Index i = 0; i < m; ++i) design(i, c) = col[rows[i]];
    x_mean[c] = design.col(c).mean();
    design.col(c).array() -= x_mean[c];
  }

  Eigen::VectorXd beta;
  bool regularized = false;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() == q) {
    beta = qr.solve(target);
  } else {
    regularized = true;
    Eigen::MatrixXd gram = design.transpose() * design;
    gram.diagonal().array() += kRidgePenalty * static_cast<double>(m);
    beta = gram.ldlt().solve(design.transpose() * target);
  }

  std::vector<double> coef(beta.data(), beta.data() + q);
  const double intercept = y_mean - x_mean.dot(beta);
  return {std::make_shared<OlsPredictor>(
              std::vector<std::size_t>(columns.begin(), columns.end()),
              std::move(coef), intercept),
          regularized};
}

}  // namespace surplus
