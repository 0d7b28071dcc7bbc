#ifndef SURPLUS_LEARNER_H_
#define SURPLUS_LEARNER_H_

#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "surplus/dataset.h"
#include "surplus/matrix.h"

namespace surplus {

// Binary inclusion vector over the p features of a dataset.
class CoalitionMask {
 public:
  CoalitionMask() = default;
  explicit CoalitionMask(std::vector<std::uint8_t> bits);

  static CoalitionMask all(std::size_t p);
  static CoalitionMask none(std::size_t p);
  static CoalitionMask from_indices(std::size_t p,
                                    std::span<const std::size_t> indices);
  // Bit j of `bits` is feature j. Requires p <= 64.
  static CoalitionMask from_bits(std::uint64_t bits, std::size_t p);
  // Parses "1010"-style strings.
  static CoalitionMask parse(std::string_view text);

  std::size_t size() const { return bits_.size(); }
  std::size_t popcount() const;
  bool test(std::size_t j) const { return bits_.at(j) != 0; }
  bool empty() const { return popcount() == 0; }
  CoalitionMask with(std::size_t j, bool on) const;
  CoalitionMask without(std::size_t j) const { return with(j, false); }
  std::vector<std::size_t> indices() const;
  std::uint64_t to_bits() const;
  std::string to_string() const;

  auto operator<=>(const CoalitionMask&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

enum class LearnerKind { kOls, kGbt, kExternal };

std::string_view learner_name(LearnerKind kind);
LearnerKind parse_learner(std::string_view name);

struct GbtParams {
  int n_rounds = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  double subsample = 1.0;
  int min_samples_leaf = 1;
  int max_bins = 256;
};

// A learner living in another process, spoken to over line-delimited JSON.
struct ExternalEndpoint {
  std::string command;  // run via /bin/sh -c
  std::chrono::milliseconds timeout{300'000};
  std::map<std::string, double> hyperparams;
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::kGbt;
  GbtParams gbt;
  ExternalEndpoint external;
  std::uint64_t seed = 0;

  static LearnerSpec ols() { return {LearnerKind::kOls, {}, {}, 0}; }
  static LearnerSpec boosted(GbtParams params = {}, std::uint64_t seed = 0) {
    return {LearnerKind::kGbt, params, {}, seed};
  }
  static LearnerSpec external_process(std::string command,
                                      std::uint64_t seed = 0) {
    LearnerSpec s{LearnerKind::kExternal, {}, {}, seed};
    s.external.command = std::move(command);
    return s;
  }

  // Name -> value view of the hyperparameters, for reports and the wire
  // protocol.
  std::map<std::string, double> hyperparams() const;
  LearnerSpec with_seed(std::uint64_t s) const {
    LearnerSpec copy = *this;
    copy.seed = s;
    return copy;
  }
};

// Throws ValidationError when hyperparameters are out of range.
void validate(const LearnerSpec& spec);

enum class LossMetric { kMse };

double mean_squared_error(std::span<const double> predictions,
                          std::span<const double> targets);

// Fitted state of a learner. Implementations read only the columns they were
// trained on.
class Predictor {
 public:
  virtual ~Predictor() = default;
  // Writes predictions for x's `rows` into `out`.
  virtual void predict(const Matrix& x, std::span<const std::size_t> rows,
                       std::span<double> out) const = 0;
};

class FittedModel {
 public:
  FittedModel(LearnerSpec spec, CoalitionMask mask,
              std::shared_ptr<const Predictor> predictor, double train_loss,
              bool regularized = false)
      : spec_(std::move(spec)),
        mask_(std::move(mask)),
        predictor_(std::move(predictor)),
        train_loss_(train_loss),
        regularized_(regularized) {}

  const LearnerSpec& spec() const { return spec_; }
  const CoalitionMask& feature_mask() const { return mask_; }
  double train_loss() const { return train_loss_; }
  // True when OLS hit a singular design and fell back to a tiny ridge.
  bool regularized() const { return regularized_; }
  const Predictor& predictor() const { return *predictor_; }

  // x must have the fit-time column count. Throws ValidationError otherwise.
  std::vector<double> predict(const Matrix& x) const;
  std::vector<double> predict(const Matrix& x,
                              std::span<const std::size_t> rows) const;

 private:
  LearnerSpec spec_;
  CoalitionMask mask_;
  std::shared_ptr<const Predictor> predictor_;
  double train_loss_;
  bool regularized_;
};

// Trains on the masked-in columns only (columns are excluded, never
// zero-filled). Deterministic in (spec.seed, data, mask).
FittedModel fit(const LearnerSpec& spec, const Dataset& ds,
                const CoalitionMask& mask);
// Same, restricted to the given training rows.
FittedModel fit(const LearnerSpec& spec, const Dataset& ds,
                const CoalitionMask& mask, std::span<const std::size_t> rows);

inline std::vector<double> predict(const FittedModel& model, const Matrix& x) {
  return model.predict(x);
}

struct CvOutcome {
  double loss = 0.0;
  std::size_t fits = 0;
  bool regularized = false;
};

// Mean over folds of the held-out loss. An empty mask is scored with the
// training-fold mean as the prediction. Requires a KFold plan.
CvOutcome cross_validate(const LearnerSpec& spec, const Dataset& ds,
                         const CoalitionMask& mask, const SplitPlan& plan,
                         LossMetric metric = LossMetric::kMse);
double cv_loss(const LearnerSpec& spec, const Dataset& ds,
               const CoalitionMask& mask, const SplitPlan& plan,
               LossMetric metric = LossMetric::kMse);

// Held-out loss of the mean predictor over the plan's folds.
double baseline_cv_loss(const Dataset& ds, const SplitPlan& plan);

// Total squared-error reduction of every split, per feature. Throws
// UnsupportedError for anything but a GBT model.
std::vector<double> gain_importance(const FittedModel& model);

}  // namespace surplus

#endif  // SURPLUS_LEARNER_H_
