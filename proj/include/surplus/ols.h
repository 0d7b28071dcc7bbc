#ifndef SURPLUS_OLS_H_
#define SURPLUS_OLS_H_

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "surplus/learner.h"

namespace surplus {

// Linear model with intercept over a fixed set of dataset columns.
class OlsPredictor : public Predictor {
 public:
  OlsPredictor(std::vector<std::size_t> columns, std::vector<double> coef,
               double intercept)
      : columns_(std::move(columns)),
        coef_(std::move(coef)),
        intercept_(intercept) {}

  void predict(const Matrix& x, std::span<const std::size_t> rows,
               std::span<double> out) const override;

  const std::vector<std::size_t>& columns() const { return columns_; }
  const std::vector<double>& coefficients() const { return coef_; }
  double intercept() const { return intercept_; }

 private:
  std::vector<std::size_t> columns_;
  std::vector<double> coef_;
  double intercept_;
};

struct OlsFit {
  std::shared_ptr<const OlsPredictor> predictor;
  bool regularized = false;
};

// Least squares on centered data via column-pivoted QR. A rank-deficient
// design switches to ridge with penalty kRidgePenalty per observation.
inline constexpr double kRidgePenalty = 1e-8;
OlsFit fit_ols(const Matrix& x, std::span<const double> y,
               std::span<const std::size_t> rows,
               std::span<const std::size_t> columns);

}  // namespace surplus

#endif  // SURPLUS_OLS_H_
