#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "surplus/errors.h"
#include "surplus/importance.h"
#include "surplus/parallel.h"
#include "surplus/random.h"

namespace surplus {
namespace {

// Draws a boosted-tree configuration around the template.
LearnerSpec randomized_learner(const LearnerSpec& base, std::uint64_t seed,
                               std::size_t m) {
  LearnerSpec spec = base.with_seed(
      derive_seed({seed, base.seed, tag(StreamTag::kFit), m}));
  if (spec.kind != LearnerKind::kGbt) return spec;
  Rng rng(derive_seed({seed, tag(StreamTag::kHyperparams), m}));
  spec.gbt.n_rounds = 50 + static_cast<int>(rng.below(151));
  spec.gbt.max_depth = 2 + static_cast<int>(rng.below(4));
  spec.gbt.learning_rate = rng.uniform(0.05, 0.3);
  spec.gbt.subsample = rng.uniform(0.7, 1.0);
  return spec;
}

struct ModelScore {
  LearnerSpec spec;
  double cv_loss = 0.0;
  std::vector<double> permutation_importance;
};

}  // namespace

ImportanceReport mcr_simplified(const Dataset& ds, const McrConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  if (cfg.k_models < 2) throw ValidationError("MCR needs k_models >= 2");
  if (cfg.n_perms < 1) throw ValidationError("MCR needs n_perms >= 1");
  if (!(cfg.delta >= 0.0)) throw ValidationError("MCR delta must be >= 0");
  if (cfg.cv.kind != SplitPlan::Kind::kKFold) {
    throw ValidationError("MCR needs a KFold plan");
  }
  validate(cfg.learner);

  const std::size_t p = ds.p();
  const auto folds = split(
      ds, SplitPlan::kfold(cfg.cv.k, derive_seed({cfg.seed, cfg.cv.seed,
                                                  tag(StreamTag::kCvSplit)})));
  const CoalitionMask full = CoalitionMask::all(p);

  std::vector<ModelScore> models(cfg.k_models);
  parallel_for(cfg.k_models, cfg.jobs, [&](std::size_t m) {
    ModelScore& score = models[m];
    score.spec = randomized_learner(cfg.learner, cfg.seed, m);
    score.permutation_importance.assign(p, 0.0);
    double total_loss = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const Fold& fold = folds[f];
      const FittedModel model = fit(score.spec, ds, full, fold.train);
      Matrix test_x = ds.x().select_rows(fold.test);
      std::vector<double> test_y(fold.test.size());
      for (std::size_t i = 0; i < fold.test.size(); ++i) {
        test_y[i] = ds.y()[fold.test[i]];
      }
      const double base = mean_squared_error(model.predict(test_x), test_y);
      total_loss += base;
      for (std::size_t l = 0; l < p; ++l) {
        const std::vector<double> original(test_x.col(l).begin(),
                                           test_x.col(l).end());
        double increase = 0.0;
        for (std::size_t t = 0; t < cfg.n_perms; ++t) {
          Rng rng(derive_seed(
              {cfg.seed, tag(StreamTag::kPermutation), m, f, l, t}));
          rng.shuffle(test_x.col(l));
          increase += mean_squared_error(model.predict(test_x), test_y) - base;
          std::copy(original.begin(), original.end(), test_x.col(l).begin());
        }
        score.permutation_importance[l] +=
            increase / static_cast<double>(cfg.n_perms);
      }
    }
    for (double& v : score.permutation_importance) {
      v /= static_cast<double>(folds.size());
    }
    score.cv_loss = total_loss / static_cast<double>(folds.size());
  });

  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : models) best = std::min(best, m.cv_loss);
  const double threshold = best + cfg.delta;

  ImportanceReport report;
  report.method = Method::kMcr;
  report.feature_names = ds.feature_names();
  report.seed = cfg.seed;
  report.phi.assign(p, 0.0);
  report.n_models_fit = cfg.k_models;

  std::vector<std::size_t> rashomon;
  nlohmann::json model_losses = nlohmann::json::array();
  for (std::size_t m = 0; m < models.size(); ++m) {
    model_losses.push_back(models[m].cv_loss);
    if (models[m].cv_loss <= threshold) rashomon.push_back(m);
  }
  for (std::size_t m : rashomon) {
    for (std::size_t l = 0; l < p; ++l) {
      report.phi[l] += models[m].permutation_importance[l];
    }
  }
  for (double& v : report.phi) v /= static_cast<double>(rashomon.size());
  report.retained_fraction =
      static_cast<double>(rashomon.size()) / static_cast<double>(models.size());
  report.details = {{"best_loss", best},
                    {"delta", cfg.delta},
                    {"rashomon_models", rashomon},
                    {"model_losses", model_losses},
                    {"fold_fits", cfg.k_models * folds.size()}};
  report.wall_time = std::chrono::steady_clock::now() - start;
  return report;
}

}  // namespace surplus
