#include <algorithm>
#include <cctype>
#include <chrono>

#include "surplus/errors.h"
#include "surplus/importance.h"
#include "surplus/parallel.h"
#include "surplus/random.h"

namespace surplus {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kSmssm: return "SMSSM";
    case Method::kLoco: return "LOCO";
    case Method::kMcr: return "MCR";
    case Method::kConstantReplacement: return "ConstantReplacement";
    case Method::kGain: return "Gain";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  for (char& ch : lower) ch = static_cast<char>(std::tolower(ch));
  if (lower == "smssm") return Method::kSmssm;
  if (lower == "loco") return Method::kLoco;
  if (lower == "mcr") return Method::kMcr;
  if (lower == "constantreplacement" || lower == "constant_replacement" ||
      lower == "replacement" || lower == "cr") {
    return Method::kConstantReplacement;
  }
  if (lower == "gain" || lower == "xgb") return Method::kGain;
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

namespace {

// Mean computed relative to the first value, so a constant column yields
// that constant exactly.
double shifted_mean(std::span<const double> v) {
  const double first = v.front();
  double acc = 0.0;
  for (double x : v) acc += x - first;
  return first + acc / static_cast<double>(v.size());
}

}  // namespace

ImportanceReport constant_replacement_importance(const FittedModel& model,
                                                 const Dataset& held_out,
                                                 ReplacementConstant constant) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t p = held_out.p();
  const double base = mean_squared_error(model.predict(held_out.x()), held_out.y());

  ImportanceReport report;
  report.method = Method::kConstantReplacement;
  report.feature_names = held_out.feature_names();
  report.phi.assign(p, 0.0);
  report.seed = model.spec().seed;

  Matrix x = held_out.x();
  for (std::size_t l = 0; l < p; ++l) {
    const std::vector<double> original(x.col(l).begin(), x.col(l).end());
    const double c =
        constant == ReplacementConstant::kMean ? shifted_mean(original) : 0.0;
    std::fill(x.col(l).begin(), x.col(l).end(), c);
    report.phi[l] = mean_squared_error(model.predict(x), held_out.y()) - base;
    std::copy(original.begin(), original.end(), x.col(l).begin());
  }
  report.details = {{"base_loss", base},
                    {"constant", constant == ReplacementConstant::kMean ? "mean"
                                                                        : "zero"}};
  report.wall_time = std::chrono::steady_clock::now() - start;
  return report;
}

namespace {

ImportanceReport cross_fitted_replacement(const Dataset& ds,
                                          const MethodConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto folds = split(
      ds, SplitPlan::kfold(cfg.folds, derive_seed({cfg.seed,
                                                   tag(StreamTag::kCvSplit)})));
  const std::size_t p = ds.p();
  std::vector<std::vector<double>> per_fold(folds.size());
  parallel_for(folds.size(), cfg.jobs, [&](std::size_t f) {
    const LearnerSpec learner = cfg.learner.with_seed(
        derive_seed({cfg.seed, cfg.learner.seed, tag(StreamTag::kFit), f}));
    const FittedModel model =
        fit(learner, ds, CoalitionMask::all(p), folds[f].train);
    per_fold[f] = constant_replacement_importance(
                      model, ds.subset(folds[f].test), cfg.constant)
                      .phi;
  });
  ImportanceReport report;
  report.method = Method::kConstantReplacement;
  report.feature_names = ds.feature_names();
  report.seed = cfg.seed;
  report.phi.assign(p, 0.0);
  for (const auto& phi : per_fold) {
    for (std::size_t l = 0; l < p; ++l) report.phi[l] += phi[l];
  }
  for (double& v : report.phi) v /= static_cast<double>(folds.size());
  report.n_models_fit = folds.size();
  report.details = {{"constant", cfg.constant == ReplacementConstant::kMean
                                     ? "mean"
                                     : "zero"}};
  report.wall_time = std::chrono::steady_clock::now() - start;
  return report;
}

ImportanceReport gain_report(const Dataset& ds, const MethodConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const LearnerSpec learner = cfg.learner.with_seed(
      derive_seed({cfg.seed, cfg.learner.seed, tag(StreamTag::kFit)}));
  const FittedModel model = fit(learner, ds, CoalitionMask::all(ds.p()));
  ImportanceReport report;
  report.method = Method::kGain;
  report.feature_names = ds.feature_names();
  report.seed = cfg.seed;
  report.phi = gain_importance(model);
  report.n_models_fit = 1;
  report.details = {{"train_loss", model.train_loss()}};
  report.wall_time = std::chrono::steady_clock::now() - start;
  return report;
}

}  // namespace

ImportanceReport run_method(const Dataset& ds, const MethodConfig& cfg) {
  switch (cfg.method) {
    case Method::kSmssm: {
      SmssmConfig c;
      c.k = cfg.k;
      c.top_fraction = cfg.top_fraction;
      c.learner = cfg.learner;
      c.cv = SplitPlan::kfold(cfg.folds, 0);
      c.seed = cfg.seed;
      c.aggregation = cfg.aggregation;
      c.resample_splits = cfg.resample_splits;
      c.jobs = cfg.jobs;
      return smssm(ds, c);
    }
    case Method::kLoco: {
      LocoConfig c;
      c.repeats = cfg.repeats;
      c.learner = cfg.learner;
      c.cv = SplitPlan::kfold(cfg.folds, 0);
      c.alpha = cfg.alpha;
      c.seed = cfg.seed;
      c.jobs = cfg.jobs;
      return loco(ds, c);
    }
    case Method::kMcr: {
      McrConfig c;
      c.k_models = cfg.k_models;
      c.delta = cfg.delta;
      c.n_perms = cfg.n_perms;
      c.learner = cfg.learner;
      c.cv = SplitPlan::kfold(cfg.folds, 0);
      c.seed = cfg.seed;
      c.jobs = cfg.jobs;
      return mcr_simplified(ds, c);
    }
    case Method::kConstantReplacement:
      return cross_fitted_replacement(ds, cfg);
    case Method::kGain:
      return gain_report(ds, cfg);
  }
  throw ValidationError("unknown method");
}

// ---------------------------------------------------------------------------

nlohmann::json learner_to_json(const LearnerSpec& spec) {
  nlohmann::json out = {{"kind", learner_name(spec.kind)},
                        {"seed", spec.seed},
                        {"hyperparams", spec.hyperparams()}};
  if (spec.kind == LearnerKind::kExternal) {
    out["command"] = spec.external.command;
    out["timeout_ms"] = spec.external.timeout.count();
  }
  return out;
}

nlohmann::json method_config_to_json(const MethodConfig& cfg) {
  nlohmann::json out = {{"method", method_name(cfg.method)},
                        {"learner", learner_to_json(cfg.learner)},
                        {"folds", cfg.folds},
                        {"seed", cfg.seed}};
  switch (cfg.method) {
    case Method::kSmssm:
      out["k"] = cfg.k;
      out["top_fraction"] = cfg.top_fraction;
      out["aggregation"] = cfg.aggregation == Aggregation::kSizeStratified
                               ? "size_stratified"
                               : "plain_mean";
      out["resample_splits"] = cfg.resample_splits;
      break;
    case Method::kLoco:
      out["repeats"] = cfg.repeats;
      out["alpha"] = cfg.alpha;
      break;
    case Method::kMcr:
      out["k_models"] = cfg.k_models;
      out["delta"] = cfg.delta;
      out["n_perms"] = cfg.n_perms;
      break;
    case Method::kConstantReplacement:
      out["constant"] =
          cfg.constant == ReplacementConstant::kMean ? "mean" : "zero";
      break;
    case Method::kGain:
      break;
  }
  return out;
}

nlohmann::json report_to_json(const ImportanceReport& report) {
  nlohmann::json out = {{"schema_version", kReportSchemaVersion},
                        {"method", method_name(report.method)},
                        {"feature_names", report.feature_names},
                        {"phi", report.phi},
                        {"n_models_fit", report.n_models_fit},
                        {"retained_fraction", report.retained_fraction},
                        {"seed", report.seed},
                        {"flags", report.flags},
                        {"details", report.details},
                        {"wall_time_s", report.wall_time.count()}};
  if (report.diagnostics) {
    const auto& d = *report.diagnostics;
    out["diagnostics"] = {{"std_error", d.std_error},
                          {"ci_low", d.ci_low},
                          {"ci_high", d.ci_high},
                          {"p_value_greater", d.p_value_greater},
                          {"p_value_less", d.p_value_less}};
  } else {
    out["diagnostics"] = nullptr;
  }
  return out;
}

}  // namespace surplus
