#ifndef SURPLUS_GBT_H_
#define SURPLUS_GBT_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "surplus/learner.h"

namespace surplus {

struct TreeNode {
  int feature = -1;  // dataset column; -1 marks a leaf
  double threshold = 0.0;  // go left when x <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, learning rate already applied
};

using Tree = std::vector<TreeNode>;

// Squared-error gradient boosted regression trees.
class GbtPredictor : public Predictor {
 public:
  GbtPredictor(double base_score, std::vector<Tree> trees,
               std::vector<double> gain, std::vector<double> loss_history)
      : base_score_(base_score),
        trees_(std::move(trees)),
        gain_(std::move(gain)),
        loss_history_(std::move(loss_history)) {}

  void predict(const Matrix& x, std::span<const std::size_t> rows,
               std::span<double> out) const override;

  double base_score() const { return base_score_; }
  const std::vector<Tree>& trees() const { return trees_; }
  // Per dataset column, summed over all splits.
  const std::vector<double>& gain() const { return gain_; }
  // Training MSE after each boosting round.
  const std::vector<double>& loss_history() const { return loss_history_; }

 private:
  double base_score_;
  std::vector<Tree> trees_;
  std::vector<double> gain_;
  std::vector<double> loss_history_;
};

// Fits on x's `rows` using only `columns`; the gain vector has one entry per
// column of x. Feature values are bucketed into at most
// params.max_bins quantile bins computed from the training rows.
std::shared_ptr<const GbtPredictor> fit_gbt(
    const GbtParams& params, std::uint64_t seed, const Matrix& x,
    std::span<const double> y, std::span<const std::size_t> rows,
    std::span<const std::size_t> columns);

}  // namespace surplus

#endif  // SURPLUS_GBT_H_
