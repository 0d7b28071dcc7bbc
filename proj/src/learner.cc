#include "surplus/learner.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "surplus/errors.h"
#include "surplus/external_learner.h"
#include "surplus/gbt.h"
#include "surplus/ols.h"

namespace surplus {

// ---------------------------------------------------------------------------
// CoalitionMask

CoalitionMask::CoalitionMask(std::vector<std::uint8_t> bits)
    : bits_(std::move(bits)) {
  for (auto& b : bits_) b = b ? 1 : 0;
}

CoalitionMask CoalitionMask::all(std::size_t p) {
  return CoalitionMask(std::vector<std::uint8_t>(p, 1));
}

CoalitionMask CoalitionMask::none(std::size_t p) {
  return CoalitionMask(std::vector<std::uint8_t>(p, 0));
}

CoalitionMask CoalitionMask::from_indices(std::size_t p,
                                          std::span<const std::size_t> indices) {
  std::vector<std::uint8_t> bits(p, 0);
  for (std::size_t j : indices) {
    if (j >= p) throw ValidationError("mask index out of range");
    bits[j] = 1;
  }
  return CoalitionMask(std::move(bits));
}

CoalitionMask CoalitionMask::from_bits(std::uint64_t bits, std::size_t p) {
  if (p > 64) throw SizeError("from_bits supports at most 64 features");
  std::vector<std::uint8_t> out(p);
  for (std::size_t j = 0; j < p; ++j) out[j] = (bits >> j) & 1U;
  return CoalitionMask(std::move(out));
}

CoalitionMask CoalitionMask::parse(std::string_view text) {
  std::vector<std::uint8_t> bits;
  for (char ch : text) {
    if (ch != '0' && ch != '1') {
      throw ValidationError("mask string must contain only 0 and 1");
    }
    bits.push_back(ch == '1');
  }
  return CoalitionMask(std::move(bits));
}

std::size_t CoalitionMask::popcount() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

CoalitionMask CoalitionMask::with(std::size_t j, bool on) const {
  CoalitionMask copy = *this;
  copy.bits_.at(j) = on ? 1 : 0;
  return copy;
}

std::vector<std::size_t> CoalitionMask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < bits_.size(); ++j) {
    if (bits_[j]) out.push_back(j);
  }
  return out;
}

std::uint64_t CoalitionMask::to_bits() const {
  if (bits_.size() > 64) throw SizeError("to_bits supports at most 64 features");
  std::uint64_t out = 0;
  for (std::size_t j = 0; j < bits_.size(); ++j) {
    if (bits_[j]) out |= std::uint64_t{1} << j;
  }
  return out;
}

std::string CoalitionMask::to_string() const {
  std::string out;
  for (auto b : bits_) out.push_back(b ? '1' : '0');
  return out;
}

// ---------------------------------------------------------------------------
// LearnerSpec

std::string_view learner_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kOls: return "ols";
    case LearnerKind::kGbt: return "gbt";
    case LearnerKind::kExternal: return "external";
  }
  return "?";
}

LearnerKind parse_learner(std::string_view name) {
  std::string lower(name);
  for (char& ch : lower) ch = static_cast<char>(std::tolower(ch));
  if (lower == "ols") return LearnerKind::kOls;
  if (lower == "gbt") return LearnerKind::kGbt;
  if (lower == "external") return LearnerKind::kExternal;
  throw ValidationError("unknown learner '" + std::string(name) +
                        "' (expected ols, gbt or external)");
}

std::map<std::string, double> LearnerSpec::hyperparams() const {
  switch (kind) {
    case LearnerKind::kGbt:
      return {{"n_rounds", gbt.n_rounds},
              {"max_depth", gbt.max_depth},
              {"learning_rate", gbt.learning_rate},
              {"subsample", gbt.subsample},
              {"min_samples_leaf", gbt.min_samples_leaf},
              {"max_bins", gbt.max_bins}};
    case LearnerKind::kExternal:
      return external.hyperparams;
    case LearnerKind::kOls:
      break;
  }
  return {};
}

void validate(const LearnerSpec& spec) {
  if (spec.kind == LearnerKind::kGbt) {
    const GbtParams& g = spec.gbt;
    if (g.n_rounds < 1) throw ValidationError("GBT n_rounds must be >= 1");
    if (g.max_depth < 1 || g.max_depth > 12) {
      throw ValidationError("GBT max_depth must be in [1, 12]");
    }
    if (!(g.learning_rate > 0.0 && g.learning_rate <= 1.0)) {
      throw ValidationError("GBT learning_rate must be in (0, 1]");
    }
    if (!(g.subsample > 0.0 && g.subsample <= 1.0)) {
      throw ValidationError("GBT subsample must be in (0, 1]");
    }
    if (g.min_samples_leaf < 1) {
      throw ValidationError("GBT min_samples_leaf must be >= 1");
    }
    if (g.max_bins < 2 || g.max_bins > 256) {
      throw ValidationError("GBT max_bins must be in [2, 256]");
    }
  }
  if (spec.kind == LearnerKind::kExternal) {
    if (spec.external.command.empty()) {
      throw ValidationError("external learner needs a command");
    }
    if (spec.external.timeout.count() <= 0) {
      throw ValidationError("external learner timeout must be positive");
    }
  }
}

// ---------------------------------------------------------------------------

double mean_squared_error(std::span<const double> predictions,
                          std::span<const double> targets) {
  if (predictions.size() != targets.size() || targets.empty()) {
    throw ValidationError("mean_squared_error: size mismatch or empty input");
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double r = predictions[i] - targets[i];
    sse += r * r;
  }
  return sse / static_cast<double>(targets.size());
}

std::vector<double> FittedModel::predict(const Matrix& x) const {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  return predict(x, rows);
}

std::vector<double> FittedModel::predict(
    const Matrix& x, std::span<const std::size_t> rows) const {
  if (x.cols() != mask_.size()) {
    throw ValidationError("predict: expected " + std::to_string(mask_.size()) +
                          " columns, got " + std::to_string(x.cols()));
  }
  std::vector<double> out(rows.size());
  predictor_->predict(x, rows, out);
  return out;
}

namespace {

// Predicts a constant; stands in for a model with no features.
class MeanPredictor : public Predictor {
 public:
  explicit MeanPredictor(double mean) : mean_(mean) {}
  void predict(const Matrix&, std::span<const std::size_t> rows,
               std::span<double> out) const override {
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(rows.size()),
              mean_);
  }

 private:
  double mean_;
};

double mean_of(const std::vector<double>& y, std::span<const std::size_t> rows) {
  double s = 0.0;
  for (std::size_t r : rows) s += y[r];
  return s / static_cast<double>(rows.size());
}

double held_out_mse(const Predictor& predictor, const Dataset& ds,
                    std::span<const std::size_t> rows) {
  std::vector<double> pred(rows.size());
  predictor.predict(ds.x(), rows, pred);
  std::vector<double> truth(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) truth[i] = ds.y()[rows[i]];
  return mean_squared_error(pred, truth);
}

}  // namespace

FittedModel fit(const LearnerSpec& spec, const Dataset& ds,
                const CoalitionMask& mask, std::span<const std::size_t> rows) {
  validate(spec);
  if (mask.size() != ds.p()) {
    throw ValidationError("mask length " + std::to_string(mask.size()) +
                          " does not match feature count " +
                          std::to_string(ds.p()));
  }
  if (mask.popcount() == 0) throw ValidationError("fit needs a non-empty mask");
  if (rows.empty()) throw ValidationError("fit needs at least one row");
  const std::vector<std::size_t> columns = mask.indices();

  std::shared_ptr<const Predictor> predictor;
  bool regularized = false;
  switch (spec.kind) {
    case LearnerKind::kOls: {
      OlsFit f = fit_ols(ds.x(), ds.y(), rows, columns);
      predictor = f.predictor;
      regularized = f.regularized;
      break;
    }
    case LearnerKind::kGbt:
      predictor = fit_gbt(spec.gbt, spec.seed, ds.x(), ds.y(), rows, columns);
      break;
    case LearnerKind::kExternal:
      predictor = fit_external(spec.external, spec.seed, ds, rows, mask);
      break;
  }
  const double train_loss = held_out_mse(*predictor, ds, rows);
  return FittedModel(spec, mask, std::move(predictor), train_loss, regularized);
}

FittedModel fit(const LearnerSpec& spec, const Dataset& ds,
                const CoalitionMask& mask) {
  std::vector<std::size_t> rows(ds.n());
  std::iota(rows.begin(), rows.end(), 0);
  return fit(spec, ds, mask, rows);
}

CvOutcome cross_validate(const LearnerSpec& spec, const Dataset& ds,
                         const CoalitionMask& mask, const SplitPlan& plan,
                         LossMetric /*metric*/) {
  if (plan.kind != SplitPlan::Kind::kKFold) {
    throw ValidationError("cross-validation needs a KFold plan");
  }
  const auto folds = split(ds, plan);
  CvOutcome out;
  double total = 0.0;
  for (const Fold& fold : folds) {
    if (mask.popcount() == 0) {
      MeanPredictor mean(mean_of(ds.y(), fold.train));
      total += held_out_mse(mean, ds, fold.test);
      continue;
    }
    FittedModel model = fit(spec, ds, mask, fold.train);
    total += held_out_mse(model.predictor(), ds, fold.test);
    out.regularized = out.regularized || model.regularized();
    ++out.fits;
  }
  out.loss = total / static_cast<double>(folds.size());
  return out;
}

double cv_loss(const LearnerSpec& spec, const Dataset& ds,
               const CoalitionMask& mask, const SplitPlan& plan,
               LossMetric metric) {
  return cross_validate(spec, ds, mask, plan, metric).loss;
}

double baseline_cv_loss(const Dataset& ds, const SplitPlan& plan) {
  return cross_validate(LearnerSpec::ols(), ds, CoalitionMask::none(ds.p()),
                        plan)
      .loss;
}

std::vector<double> gain_importance(const FittedModel& model) {
  const auto* gbt = dynamic_cast<const GbtPredictor*>(&model.predictor());
  if (model.spec().kind != LearnerKind::kGbt || gbt == nullptr) {
    throw UnsupportedError("gain importance is only defined for GBT models");
  }
  return gbt->gain();
}

}  // namespace surplus
