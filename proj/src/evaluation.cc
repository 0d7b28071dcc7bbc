#include "surplus/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "surplus/errors.h"
#include "surplus/parallel.h"
#include "surplus/random.h"

namespace surplus {

namespace {

std::vector<double> clipped(std::span<const double> v, bool clip) {
  std::vector<double> out(v.begin(), v.end());
  if (clip) {
    for (double& x : out) x = std::max(x, 0.0);
  }
  return out;
}

}  // namespace

MetricScore angle_score(std::span<const double> phi,
                        std::span<const double> truth, bool clip) {
  if (phi.size() != truth.size()) {
    throw ValidationError("angle_score: vectors differ in length");
  }
  const auto a = clipped(phi, clip);
  const auto b = clipped(truth, clip);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return {std::numbers::pi / 2, true};
  const double cosine = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return {std::acos(cosine), false};
}

MetricScore selective_ratio(std::span<const double> phi,
                            std::span<const std::size_t> true_set, bool clip) {
  const auto w = clipped(phi, clip);
  double total = 0.0, on_truth = 0.0;
  for (double x : w) total += x;
  for (std::size_t j : true_set) {
    if (j >= w.size()) throw ValidationError("true set index out of range");
    on_truth += w[j];
  }
  if (total <= 0.0) return {0.0, true};
  return {on_truth / total, false};
}

// ---------------------------------------------------------------------------

GroundTruthOracle derive_ground_truth_oracle(const DgpSpec& spec,
                                             const GroundTruthOptions& opts) {
  constexpr std::size_t kMaxOracleFeatures = 12;
  const std::size_t p = dgp_feature_count(spec.id);
  if (p > kMaxOracleFeatures) {
    throw SizeError("ground truth enumeration supports at most 12 features");
  }
  DgpSpec large = spec;
  large.n = opts.n;
  const Dataset ds = generate(large);
  const LearnerSpec learner = dgp_is_linear(spec.id)
                                  ? LearnerSpec::ols()
                                  : LearnerSpec::boosted({}, spec.seed);
  const SplitPlan plan = SplitPlan::kfold(opts.folds, spec.seed);

  const std::size_t n_masks = std::size_t{1} << p;
  std::vector<double> loss(n_masks, 0.0);
  parallel_for(n_masks, opts.jobs, [&](std::size_t bits) {
    loss[bits] =
        cv_loss(learner, ds, CoalitionMask::from_bits(bits, p), plan);
  });

  GroundTruthOracle oracle;
  oracle.baseline_loss = loss[0];
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t bits = 1; bits < n_masks; ++bits) {
    oracle.losses[CoalitionMask::from_bits(bits, p)] = loss[bits];
    best = std::min(best, loss[bits]);
  }
  // The absolute term keeps exact-fit coalitions together when best is ~0.
  oracle.cutoff = std::isinf(opts.relative_cutoff)
                      ? std::numeric_limits<double>::infinity()
                      : best * (1.0 + opts.relative_cutoff) +
                            1e-9 * oracle.baseline_loss;
  oracle.game = filtered_surplus(oracle.losses, oracle.baseline_loss,
                                 oracle.cutoff);
  oracle.weights.kind = GroundTruth::Kind::kWeightVector;
  oracle.weights.weights = exact_shapley(oracle.game).phi;
  oracle.true_set.kind = GroundTruth::Kind::kTrueSet;
  oracle.true_set.true_set = *ds.true_set();
  return oracle;
}

GroundTruth derive_ground_truth(const DgpSpec& spec,
                                const GroundTruthOptions& opts) {
  return derive_ground_truth_oracle(spec, opts).weights;
}

// ---------------------------------------------------------------------------

ConsistencyResult split_consistency(const Dataset& ds, const MethodRunner& run,
                                    std::size_t trials, std::uint64_t seed,
                                    bool clip) {
  if (ds.n() < 40) throw ValidationError("split consistency needs n >= 40");
  if (trials < 1) throw ValidationError("split consistency needs trials >= 1");
  ConsistencyResult out;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto halves = split(
        ds, SplitPlan::random_halves(derive_seed({seed, tag(StreamTag::kTrial), t})));
    try {
      const ImportanceReport a = run(ds.subset(halves[0].train));
      const ImportanceReport b = run(ds.subset(halves[0].test));
      out.trial_angles.push_back(angle_score(a.phi, b.phi, clip).score);
    } catch (const Error& e) {
      out.skipped.push_back("trial " + std::to_string(t) + ": " + e.what());
    }
  }
  if (out.trial_angles.empty()) {
    throw Error("split consistency: every trial failed; first cause: " +
                out.skipped.front());
  }
  out.mean_angle = std::accumulate(out.trial_angles.begin(),
                                   out.trial_angles.end(), 0.0) /
                   static_cast<double>(out.trial_angles.size());
  return out;
}

ConsistencyResult split_consistency(const Dataset& ds, const MethodConfig& cfg,
                                    std::size_t trials, std::uint64_t seed,
                                    bool clip) {
  return split_consistency(
      ds, [&](const Dataset& half) { return run_method(half, cfg); }, trials,
      seed, clip);
}

// ---------------------------------------------------------------------------

std::string_view metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::kAngle: return "angle";
    case MetricKind::kSelectiveRatio: return "selective_ratio";
    case MetricKind::kConsistencyAngle: return "consistency_angle";
  }
  return "?";
}

namespace {

MetricKind parse_metric(std::string_view name) {
  for (MetricKind k : {MetricKind::kAngle, MetricKind::kSelectiveRatio,
                       MetricKind::kConsistencyAngle}) {
    if (metric_name(k) == name) return k;
  }
  throw ValidationError("unknown metric kind '" + std::string(name) + "'");
}

}  // namespace

bool lower_is_better(MetricKind kind) {
  return kind != MetricKind::kSelectiveRatio;
}

void validate(const ComparisonTable& table) {
  const std::size_t cols = table.datasets.size();
  if (table.methods.empty() || cols == 0) {
    throw ValidationError("comparison table is empty");
  }
  if (table.metric.size() != cols || table.seed_count.size() != cols) {
    throw ValidationError("comparison table: every column needs a metric kind "
                          "and seed count");
  }
  if (table.cells.size() != table.methods.size()) {
    throw ValidationError("comparison table: missing method rows");
  }
  for (const auto& row : table.cells) {
    if (row.size() != cols) {
      throw ValidationError("comparison table: incomplete row");
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw ValidationError("comparison table: non-finite cell");
      }
    }
  }
}

std::vector<RankSummary> rank_summary(const ComparisonTable& table) {
  validate(table);
  const std::size_t m = table.methods.size();
  const std::size_t cols = table.datasets.size();
  std::vector<std::vector<double>> ranks(m, std::vector<double>(cols));
  for (std::size_t c = 0; c < cols; ++c) {
    const bool lower = lower_is_better(table.metric[c]);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    auto better = [&](std::size_t a, std::size_t b) {
      const double va = table.cells[a][c], vb = table.cells[b][c];
      return lower ? va < vb : va > vb;
    };
    std::stable_sort(order.begin(), order.end(), better);
    for (std::size_t i = 0; i < m;) {
      std::size_t j = i;
      while (j + 1 < m &&
             table.cells[order[j + 1]][c] == table.cells[order[i]][c]) {
        ++j;
      }
      const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2;
      for (std::size_t k = i; k <= j; ++k) ranks[order[k]][c] = r;
      i = j + 1;
    }
  }
  std::vector<RankSummary> out;
  for (std::size_t i = 0; i < m; ++i) {
    RankSummary s;
    s.method = table.methods[i];
    s.mean_rank = std::accumulate(ranks[i].begin(), ranks[i].end(), 0.0) /
                  static_cast<double>(cols);
    s.best = *std::min_element(ranks[i].begin(), ranks[i].end());
    s.worst = *std::max_element(ranks[i].begin(), ranks[i].end());
    out.push_back(s);
  }
  return out;
}

nlohmann::json table_to_json(const ComparisonTable& table) {
  nlohmann::json metric = nlohmann::json::array();
  for (MetricKind k : table.metric) metric.push_back(metric_name(k));
  return {{"methods", table.methods},
          {"datasets", table.datasets},
          {"metric", metric},
          {"seeds", table.seed_count},
          {"cells", table.cells}};
}

ComparisonTable table_from_json(const nlohmann::json& j) {
  ComparisonTable t;
  try {
    t.methods = j.at("methods").get<std::vector<std::string>>();
    t.datasets = j.at("datasets").get<std::vector<std::string>>();
    for (const auto& m : j.at("metric")) {
      t.metric.push_back(parse_metric(m.get<std::string>()));
    }
    t.seed_count = j.at("seeds").get<std::vector<std::size_t>>();
    t.cells = j.at("cells").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed comparison table: ") + e.what());
  }
  validate(t);
  return t;
}

std::string format_table(const ComparisonTable& table) {
  validate(table);
  std::size_t name_width = 6;
  for (const auto& m : table.methods) name_width = std::max(name_width, m.size());
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_width), "method");
  out << buf;
  for (std::size_t c = 0; c < table.datasets.size(); ++c) {
    const std::string head =
        table.datasets[c] + (lower_is_better(table.metric[c]) ? "(lo)" : "(hi)");
    std::snprintf(buf, sizeof buf, "  %10s", head.c_str());
    out << buf;
  }
  out << '\n';
  for (std::size_t i = 0; i < table.methods.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_width),
                  table.methods[i].c_str());
    out << buf;
    for (double v : table.cells[i]) {
      std::snprintf(buf, sizeof buf, "  %10.3f", v);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

MetricKind metric_for(DgpId id) {
  switch (id) {
    case DgpId::kDS1:
    case DgpId::kDS5:
    case DgpId::kDS6:
      return MetricKind::kAngle;
    default:
      return MetricKind::kSelectiveRatio;
  }
}

std::uint64_t replicate_seed(std::uint64_t base, DgpId id, std::size_t s) {
  return derive_seed({base, static_cast<std::uint64_t>(id),
                      tag(StreamTag::kTrial), s});
}

ComparisonRun run_comparison(const CompareConfig& cfg) {
  if (cfg.datasets.empty() || cfg.methods.empty() || cfg.seeds < 1) {
    throw ValidationError("comparison needs datasets, methods and seeds >= 1");
  }
  ComparisonRun run;
  ComparisonTable& table = run.table;
  for (Method m : cfg.methods) table.methods.emplace_back(method_name(m));
  for (DgpId id : cfg.datasets) {
    table.datasets.emplace_back(dgp_name(id));
    table.metric.push_back(metric_for(id));
    table.seed_count.push_back(cfg.seeds);
  }
  const std::size_t nm = cfg.methods.size(), nd = cfg.datasets.size();
  run.scores.assign(nm, std::vector<std::vector<double>>(
                            nd, std::vector<double>(cfg.seeds, 0.0)));
  run.phi.assign(nm, std::vector<std::vector<std::vector<double>>>(
                         nd, std::vector<std::vector<double>>(cfg.seeds)));
  table.cells.assign(nm, std::vector<double>(nd, 0.0));

  for (std::size_t d = 0; d < nd; ++d) {
    const DgpId id = cfg.datasets[d];
    DgpSpec truth_spec{id, cfg.truth.n,
                       derive_seed({cfg.seed, static_cast<std::uint64_t>(id)}),
                       cfg.noise_scale, cfg.collinearity_noise};
    GroundTruthOptions truth_opts = cfg.truth;
    truth_opts.jobs = cfg.jobs;
    run.oracles.push_back(derive_ground_truth_oracle(truth_spec, truth_opts));
    const GroundTruthOracle& oracle = run.oracles.back();

    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      const std::uint64_t data_seed = replicate_seed(cfg.seed, id, s);
      const Dataset ds = generate(
          {id, cfg.n, data_seed, cfg.noise_scale, cfg.collinearity_noise});
      for (std::size_t m = 0; m < nm; ++m) {
        MethodConfig mc = cfg.method;
        mc.method = cfg.methods[m];
        mc.seed = data_seed;
        mc.jobs = cfg.jobs;
        const ImportanceReport report = run_method(ds, mc);
        run.scores[m][d][s] =
            metric_for(id) == MetricKind::kAngle
                ? angle_score(report.phi, oracle.weights.weights, cfg.clip).score
                : selective_ratio(report.phi, oracle.true_set.true_set, cfg.clip)
                      .score;
        run.phi[m][d][s] = report.phi;
      }
    }
    for (std::size_t m = 0; m < nm; ++m) {
      const auto& v = run.scores[m][d];
      table.cells[m][d] =
          std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }
  }
  return run;
}

}  // namespace surplus
