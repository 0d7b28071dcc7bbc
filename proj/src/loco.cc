#include <chrono>
#include <algorithm>
#include <cmath>

#include "surplus/errors.h"
#include "surplus/importance.h"
#include "surplus/parallel.h"
#include "surplus/random.h"
#include "surplus/stats.h"

namespace surplus {

ImportanceReport loco(const Dataset& ds, const LocoConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t p = ds.p();
  if (p < 2) throw ValidationError("LOCO needs at least 2 features");
  if (cfg.repeats < 2) {
    throw ValidationError("LOCO needs at least 2 repeats to estimate spread");
  }
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw ValidationError("LOCO alpha must be in (0, 1)");
  }
  if (cfg.cv.kind != SplitPlan::Kind::kKFold) {
    throw ValidationError("LOCO needs a KFold plan");
  }
  validate(cfg.learner);

  const std::size_t k = cfg.repeats;
  // Differences this close to zero are rounding noise of an exact fit.
  const double floor = 1e-12 * std::max(sample_variance(ds.y()), 1e-300);
  const CoalitionMask full = CoalitionMask::all(p);
  // differences[r][j] = drop_loss_j - full_loss in repeat r.
  std::vector<std::vector<double>> differences(k, std::vector<double>(p));
  std::vector<std::size_t> fold_fits(k, 0);
  std::vector<char> regularized(k, 0);

  // Seeds are derived exactly as SMSSM derives them for subset r, so a
  // full-mask-only SMSSM run reproduces these differences.
  parallel_for(k, cfg.jobs, [&](std::size_t r) {
    const SplitPlan plan = SplitPlan::kfold(
        cfg.cv.k, derive_seed({cfg.seed, cfg.cv.seed, tag(StreamTag::kCvSplit), r}));
    const LearnerSpec learner = cfg.learner.with_seed(
        derive_seed({cfg.seed, cfg.learner.seed, tag(StreamTag::kFit), r}));
    const CvOutcome base = cross_validate(learner, ds, full, plan);
    fold_fits[r] += base.fits;
    regularized[r] = base.regularized;
    for (std::size_t j = 0; j < p; ++j) {
      const CvOutcome drop = cross_validate(learner, ds, full.without(j), plan);
      fold_fits[r] += drop.fits;
      regularized[r] = regularized[r] || drop.regularized;
      const double diff = drop.loss - base.loss;
      differences[r][j] = std::abs(diff) <= floor ? 0.0 : diff;
    }
  });

  ImportanceReport report;
  report.method = Method::kLoco;
  report.feature_names = ds.feature_names();
  report.seed = cfg.seed;
  report.phi.assign(p, 0.0);
  report.n_models_fit = k * (1 + p);

  FeatureDiagnostics diag;
  const double z = normal_quantile(1.0 - cfg.alpha / 2.0);
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> d(k);
    for (std::size_t r = 0; r < k; ++r) d[r] = differences[r][j];
    const double theta = mean(d);
    const double se = sample_sd(d) / std::sqrt(static_cast<double>(k));
    const WilcoxonResult w = wilcoxon_signed_rank(d);
    report.phi[j] = theta;
    diag.std_error.push_back(se);
    diag.ci_low.push_back(theta - z * se);
    diag.ci_high.push_back(theta + z * se);
    diag.p_value_greater.push_back(w.p_greater);
    diag.p_value_less.push_back(w.p_less);
  }
  report.diagnostics = std::move(diag);

  std::size_t total_fits = 0;
  bool any_regularized = false;
  for (std::size_t r = 0; r < k; ++r) {
    total_fits += fold_fits[r];
    any_regularized = any_regularized || regularized[r];
  }
  if (any_regularized) report.flags.push_back("ridge_fallback");
  report.details = {{"fold_fits", total_fits},
                    {"alpha", cfg.alpha},
                    {"z", z},
                    {"differences", differences}};
  report.wall_time = std::chrono::steady_clock::now() - start;
  return report;
}

}  // namespace surplus
