#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "surplus/errors.h"
#include "surplus/importance.h"
#include "surplus/parallel.h"
#include "surplus/random.h"

namespace surplus {

std::vector<std::size_t> smssm_subset_sizes(std::size_t p, std::size_t k) {
  std::vector<std::size_t> sizes(k);
  for (std::size_t i = 0; i < k; ++i) sizes[i] = 2 + i % (p - 1);
  return sizes;
}

namespace {

void validate(const Dataset& ds, const SmssmConfig& cfg) {
  const std::size_t p = ds.p();
  if (p < 2) throw ValidationError("SMSSM needs at least 2 features");
  if (cfg.fixed_size) {
    if (*cfg.fixed_size < 1 || *cfg.fixed_size > p) {
      throw ValidationError("SMSSM fixed subset size must be in [1, p]");
    }
    if (cfg.k < 1) throw ValidationError("SMSSM needs k >= 1");
  } else if (cfg.k < p - 1) {
    throw ValidationError("SMSSM needs k >= p - 1 so every size 2..p is "
                          "sampled (k=" + std::to_string(cfg.k) +
                          ", p=" + std::to_string(p) + ")");
  }
  if (!(cfg.top_fraction > 0.0 && cfg.top_fraction <= 1.0)) {
    throw ValidationError("SMSSM top fraction must be in (0, 1]");
  }
  if (cfg.cv.kind != SplitPlan::Kind::kKFold) {
    throw ValidationError("SMSSM needs a KFold plan");
  }
  surplus::validate(cfg.learner);
}

struct SubsetEvaluation {
  CoalitionMask mask;
  double loss = 0.0;
  std::vector<MarginalRecord> drops;
  std::size_t fold_fits = 0;
  bool regularized = false;
  std::string error;
};

}  // namespace

ImportanceReport smssm(const Dataset& ds, const SmssmConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  validate(ds, cfg);
  const std::size_t p = ds.p();
  const std::size_t k = cfg.k;

  std::vector<std::size_t> sizes = cfg.fixed_size
                                       ? std::vector<std::size_t>(k, *cfg.fixed_size)
                                       : smssm_subset_sizes(p, k);

  // Every random choice for subset i is keyed by (seed, i).
  std::vector<SubsetEvaluation> evals(k);
  for (std::size_t i = 0; i < k; ++i) {
    Rng rng(derive_seed({cfg.seed, tag(StreamTag::kMask), i}));
    evals[i].mask = CoalitionMask::from_indices(
        p, rng.sample_without_replacement(p, sizes[i]));
  }
  auto plan_for = [&](std::size_t i) {
    return SplitPlan::kfold(
        cfg.cv.k, derive_seed({cfg.seed, cfg.cv.seed, tag(StreamTag::kCvSplit), i}));
  };
  auto learner_for = [&](std::size_t i) {
    return cfg.learner.with_seed(
        derive_seed({cfg.seed, cfg.learner.seed, tag(StreamTag::kFit), i}));
  };
  auto record = [](SubsetEvaluation& ev, std::size_t l, const CvOutcome& drop,
                   bool emptied) {
    ev.fold_fits += drop.fits;
    ev.regularized = ev.regularized || drop.regularized;
    ev.drops.push_back({ev.mask, ev.loss, l, drop.loss, drop.loss - ev.loss,
                        emptied});
  };

  std::size_t distinct_masks = 0;
  std::size_t shared_fold_fits = 0;
  if (cfg.resample_splits) {
    parallel_for(k, cfg.jobs, [&](std::size_t i) {
      SubsetEvaluation& ev = evals[i];
      const SplitPlan plan = plan_for(i);
      const LearnerSpec learner = learner_for(i);
      try {
        const CvOutcome subset = cross_validate(learner, ds, ev.mask, plan);
        ev.loss = subset.loss;
        ev.fold_fits += subset.fits;
        ev.regularized = subset.regularized;
        for (std::size_t l : ev.mask.indices()) {
          const CoalitionMask dropped = ev.mask.without(l);
          record(ev, l, cross_validate(learner, ds, dropped, plan),
                 dropped.empty());
        }
      } catch (const Error& e) {
        ev.error = e.what();
      }
    });
    distinct_masks = k;
  } else {
    // One split and one learner seed for every subset, so each distinct
    // mask is cross-validated once.
    std::map<CoalitionMask, std::size_t> index;
    std::vector<CoalitionMask> unique;
    auto note = [&](const CoalitionMask& m) {
      if (index.emplace(m, unique.size()).second) unique.push_back(m);
    };
    for (const SubsetEvaluation& ev : evals) {
      note(ev.mask);
      for (std::size_t l : ev.mask.indices()) note(ev.mask.without(l));
    }
    const SplitPlan plan = plan_for(0);
    const LearnerSpec learner = learner_for(0);
    std::vector<CvOutcome> outcomes(unique.size());
    std::vector<std::string> errors(unique.size());
    parallel_for(unique.size(), cfg.jobs, [&](std::size_t u) {
      try {
        outcomes[u] = cross_validate(learner, ds, unique[u], plan);
      } catch (const Error& e) {
        errors[u] = e.what();
      }
    });
    for (SubsetEvaluation& ev : evals) {
      const std::size_t u = index.at(ev.mask);
      if (!errors[u].empty()) {
        ev.error = errors[u];
        continue;
      }
      ev.loss = outcomes[u].loss;
      ev.fold_fits += outcomes[u].fits;
      ev.regularized = outcomes[u].regularized;
      for (std::size_t l : ev.mask.indices()) {
        const CoalitionMask dropped = ev.mask.without(l);
        const std::size_t d = index.at(dropped);
        if (!errors[d].empty()) {
          ev.error = errors[d];
          ev.drops.clear();
          break;
        }
        record(ev, l, outcomes[d], dropped.empty());
      }
    }
    distinct_masks = unique.size();
    for (const CvOutcome& o : outcomes) shared_fold_fits += o.fits;
  }

  std::vector<std::size_t> ok;
  std::string causes;
  for (std::size_t i = 0; i < k; ++i) {
    if (evals[i].error.empty()) {
      ok.push_back(i);
    } else if (causes.size() < 4000) {
      causes += "\n  subset " + std::to_string(i) + " (" +
                evals[i].mask.to_string() + "): " + evals[i].error;
    }
  }
  if (ok.empty()) throw Error("SMSSM: every subset evaluation failed:" + causes);

  // Cutoff L_b: the top_fraction quantile of the subset losses.
  std::vector<double> losses;
  for (std::size_t i : ok) losses.push_back(evals[i].loss);
  std::sort(losses.begin(), losses.end());
  const std::size_t rank = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(cfg.top_fraction *
                                            static_cast<double>(losses.size()) -
                                            1e-9)));
  const double cutoff = losses[std::min(rank, losses.size()) - 1];

  ImportanceReport report;
  report.method = Method::kSmssm;
  report.feature_names = ds.feature_names();
  report.seed = cfg.seed;
  report.phi.assign(p, 0.0);

  // (size -> sum, count) per feature, accumulated in subset order.
  std::vector<std::map<std::size_t, std::pair<double, std::size_t>>> strata(p);
  std::size_t retained = 0, fold_fits = 0, baseline_drops = 0;
  bool regularized = false;
  for (std::size_t i : ok) {
    const SubsetEvaluation& ev = evals[i];
    fold_fits += ev.fold_fits;
    regularized = regularized || ev.regularized;
    report.n_models_fit += 1 + ev.mask.popcount();
    if (ev.loss > cutoff) continue;
    ++retained;
    const std::size_t size = ev.mask.popcount();
    for (const MarginalRecord& rec : ev.drops) {
      auto& cell = strata[rec.dropped_feature][size];
      cell.first += rec.delta;
      ++cell.second;
      baseline_drops += rec.baseline_drop;
    }
  }
  for (std::size_t i : ok) {
    for (const MarginalRecord& rec : evals[i].drops) report.records.push_back(rec);
  }

  for (std::size_t l = 0; l < p; ++l) {
    if (strata[l].empty()) {
      report.flags.push_back("never_retained:" + ds.feature_names()[l]);
      continue;
    }
    if (cfg.aggregation == Aggregation::kSizeStratified) {
      double total = 0.0;
      for (const auto& [size, cell] : strata[l]) {
        total += cell.first / static_cast<double>(cell.second);
      }
      report.phi[l] = total / static_cast<double>(strata[l].size());
    } else {
      double total = 0.0;
      std::size_t count = 0;
      for (const auto& [size, cell] : strata[l]) {
        total += cell.first;
        count += cell.second;
      }
      report.phi[l] = total / static_cast<double>(count);
    }
  }
  if (!cfg.resample_splits) fold_fits = shared_fold_fits;
  if (regularized) report.flags.push_back("ridge_fallback");
  if (baseline_drops > 0) report.flags.push_back("baseline_drop");
  if (ok.size() < k) {
    report.flags.push_back("failed_subsets:" + std::to_string(k - ok.size()));
  }

  report.retained_fraction =
      static_cast<double>(retained) / static_cast<double>(k);
  report.details = {{"cutoff_loss", cutoff},
                    {"retained_subsets", retained},
                    {"evaluated_subsets", ok.size()},
                    {"fold_fits", fold_fits},
                    {"distinct_masks", distinct_masks},
                    {"resample_splits", cfg.resample_splits},
                    {"aggregation", cfg.aggregation == Aggregation::kSizeStratified
                                        ? "size_stratified"
                                        : "plain_mean"}};
  report.wall_time = std::chrono::steady_clock::now() - start;
  return report;
}

}  // namespace surplus
