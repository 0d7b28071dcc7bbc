#ifndef SURPLUS_IMPORTANCE_H_
#define SURPLUS_IMPORTANCE_H_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "surplus/dataset.h"
#include "surplus/learner.h"

namespace surplus {

enum class Method { kSmssm, kLoco, kMcr, kConstantReplacement, kGain };

std::string_view method_name(Method m);
// Accepts the names above case-insensitively plus short forms
// ("cr", "replacement", "xgb").
Method parse_method(std::string_view name);
inline constexpr Method kAllMethods[] = {Method::kSmssm, Method::kLoco,
                                         Method::kMcr,
                                         Method::kConstantReplacement,
                                         Method::kGain};

// One subset evaluation together with one of its single-feature drops.
struct MarginalRecord {
  CoalitionMask mask;
  double subset_loss = 0.0;
  std::size_t dropped_feature = 0;
  double drop_loss = 0.0;
  double delta = 0.0;  // drop_loss - subset_loss
  bool baseline_drop = false;  // drop emptied the mask; mean-predictor loss
};

struct FeatureDiagnostics {
  std::vector<double> std_error;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  std::vector<double> p_value_greater;  // H1: theta_j > 0 (importance)
  std::vector<double> p_value_less;     // H1: theta_j < 0
};

struct ImportanceReport {
  Method method = Method::kSmssm;
  std::vector<std::string> feature_names;
  std::vector<double> phi;
  std::optional<FeatureDiagnostics> diagnostics;  // LOCO only
  std::size_t n_models_fit = 0;
  double retained_fraction = 1.0;
  std::uint64_t seed = 0;
  std::chrono::duration<double> wall_time{0};
  std::vector<std::string> flags;
  std::vector<MarginalRecord> records;  // SMSSM only
  nlohmann::json details = nlohmann::json::object();
};

// ---------------------------------------------------------------------------

enum class Aggregation { kSizeStratified, kPlainMean };

struct SmssmConfig {
  std::size_t k = 200;
  double top_fraction = 0.25;
  LearnerSpec learner = LearnerSpec::boosted();
  SplitPlan cv = SplitPlan::kfold(5, 0);
  std::uint64_t seed = 0;
  Aggregation aggregation = Aggregation::kSizeStratified;
  // When set, every sampled subset has this many features instead of
  // cycling through sizes 2..p.
  std::optional<std::size_t> fixed_size;
  // false: one CV split shared by all subsets, each distinct mask fit once.
  // true: a fresh split and learner seed per subset, as LOCO does per repeat.
  bool resample_splits = false;
  int jobs = 1;
};

struct LocoConfig {
  std::size_t repeats = 20;
  LearnerSpec learner = LearnerSpec::boosted();
  SplitPlan cv = SplitPlan::kfold(5, 0);
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct McrConfig {
  std::size_t k_models = 10;
  double delta = 0.05;
  std::size_t n_perms = 20;
  LearnerSpec learner = LearnerSpec::boosted();
  SplitPlan cv = SplitPlan::kfold(5, 0);
  std::uint64_t seed = 0;
  int jobs = 1;
};

enum class ReplacementConstant { kMean, kZero };

// Subset sizes for the k sampled masks: 2 + (i mod (p - 1)).
std::vector<std::size_t> smssm_subset_sizes(std::size_t p, std::size_t k);

// Shapley marginal surplus over the best-scoring sampled subsets.
ImportanceReport smssm(const Dataset& ds, const SmssmConfig& cfg);

// Leave-one-covariate-out with repeated cross-validation, normal intervals
// and signed-rank p-values.
ImportanceReport loco(const Dataset& ds, const LocoConfig& cfg);

// Permutation importance averaged over a Rashomon set of boosted models.
ImportanceReport mcr_simplified(const Dataset& ds, const McrConfig& cfg);

// Loss increase on `held_out` when each column is replaced by a constant.
ImportanceReport constant_replacement_importance(
    const FittedModel& model, const Dataset& held_out,
    ReplacementConstant constant = ReplacementConstant::kMean);

// ---------------------------------------------------------------------------
// Uniform entry point used by evaluation and the CLI.

struct MethodConfig {
  Method method = Method::kSmssm;
  LearnerSpec learner = LearnerSpec::boosted();
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  // SMSSM
  std::size_t k = 200;
  double top_fraction = 0.25;
  Aggregation aggregation = Aggregation::kSizeStratified;
  bool resample_splits = false;
  // LOCO
  std::size_t repeats = 20;
  double alpha = 0.05;
  // MCR
  std::size_t k_models = 10;
  double delta = 0.05;
  std::size_t n_perms = 20;
  // Constant replacement
  ReplacementConstant constant = ReplacementConstant::kMean;
  int jobs = 1;
};

// Dispatches on cfg.method. ConstantReplacement is cross-fitted over the
// folds; Gain fits one boosted model on all rows.
ImportanceReport run_method(const Dataset& ds, const MethodConfig& cfg);

nlohmann::json method_config_to_json(const MethodConfig& cfg);
nlohmann::json learner_to_json(const LearnerSpec& spec);

// Stable report schema; wall_time is the only run-dependent field.
inline constexpr int kReportSchemaVersion = 1;
nlohmann::json report_to_json(const ImportanceReport& report);

}  // namespace surplus

#endif  // SURPLUS_IMPORTANCE_H_
