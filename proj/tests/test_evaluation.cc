#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "doctest.h"
#include "surplus/errors.h"
#include "surplus/evaluation.h"
#include "surplus/random.h"

using namespace surplus;

namespace {

constexpr double kPi = std::numbers::pi;

ImportanceReport report_with(std::vector<double> phi) {
  ImportanceReport r;
  r.phi = std::move(phi);
  return r;
}

ComparisonTable small_table() {
  ComparisonTable t;
  t.methods = {"a", "b", "c"};
  t.datasets = {"DS1", "DS2"};
  t.metric = {MetricKind::kAngle, MetricKind::kSelectiveRatio};
  t.seed_count = {3, 3};
  t.cells = {{0.1, 0.9}, {0.2, 0.9}, {0.3, 0.5}};
  return t;
}

}  // namespace

TEST_CASE("angle examples") {
  const std::vector<double> e1{1, 0}, e2{0, 1}, both{1, 1};
  CHECK(angle_score(e1, e1).score == 0.0);
  CHECK(angle_score(e1, e2).score == doctest::Approx(kPi / 2));
  CHECK(angle_score(both, e1).score == doctest::Approx(kPi / 4));
  // Negative entries are clipped unless asked otherwise.
  const std::vector<double> neg{1, -1};
  CHECK(angle_score(neg, e1).score == doctest::Approx(0.0));
  CHECK(angle_score(neg, e1, false).score == doctest::Approx(kPi / 4));
  CHECK(angle_score(std::vector<double>{-1, 1}, e1, false).score ==
        doctest::Approx(3 * kPi / 4));

  const MetricScore zero = angle_score(std::vector<double>{-1, 0}, e1);
  CHECK(zero.degenerate);
  CHECK(zero.score == doctest::Approx(kPi / 2));
  CHECK_FALSE(angle_score(both, e1).degenerate);
  CHECK_THROWS_AS(angle_score(e1, std::vector<double>{1, 2, 3}), ValidationError);
}

TEST_CASE("angle properties") {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t p = 2 + rng.below(8);
    std::vector<double> a(p), b(p);
    for (std::size_t j = 0; j < p; ++j) {
      a[j] = std::abs(rng.normal()) + 1e-3;
      b[j] = std::abs(rng.normal()) + 1e-3;
    }
    const double ab = angle_score(a, b).score;
    CHECK(ab >= 0.0);
    CHECK(ab <= kPi / 2 + 1e-12);
    CHECK(ab == doctest::Approx(angle_score(b, a).score).epsilon(1e-12));
    // Scale invariance.
    std::vector<double> scaled = a;
    const double c = 0.01 + 100 * rng.uniform();
    for (double& v : scaled) v *= c;
    CHECK(angle_score(scaled, b).score == doctest::Approx(ab).epsilon(1e-9));
    CHECK(angle_score(a, a).score <= 1e-7);
  }
}

TEST_CASE("selective ratio examples") {
  const std::vector<std::size_t> truth{0};
  CHECK(selective_ratio(std::vector<double>{3, 1}, truth).score == doctest::Approx(0.75));
  CHECK(selective_ratio(std::vector<double>{3, -1}, truth).score == 1.0);
  CHECK(selective_ratio(std::vector<double>{3, -1}, truth, false).score ==
        doctest::Approx(1.5));
  CHECK(selective_ratio(std::vector<double>{0, 5}, truth).score == 0.0);
  const MetricScore none = selective_ratio(std::vector<double>{-1, -2}, truth);
  CHECK(none.degenerate);
  CHECK(none.score == 0.0);
  CHECK_THROWS_AS(selective_ratio(std::vector<double>{1, 2}, std::vector<std::size_t>{2}),
                  ValidationError);

  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> phi(5);
    for (double& v : phi) v = rng.normal();
    const double r = selective_ratio(phi, std::vector<std::size_t>{1, 3}).score;
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("metric per dataset") {
  CHECK(metric_for(DgpId::kDS1) == MetricKind::kAngle);
  CHECK(metric_for(DgpId::kDS5) == MetricKind::kAngle);
  CHECK(metric_for(DgpId::kDS6) == MetricKind::kAngle);
  CHECK(metric_for(DgpId::kDS2) == MetricKind::kSelectiveRatio);
  CHECK(metric_for(DgpId::kDS3) == MetricKind::kSelectiveRatio);
  CHECK(metric_for(DgpId::kDS4) == MetricKind::kSelectiveRatio);
  CHECK(lower_is_better(MetricKind::kAngle));
  CHECK(lower_is_better(MetricKind::kConsistencyAngle));
  CHECK_FALSE(lower_is_better(MetricKind::kSelectiveRatio));
}

TEST_CASE("rank summary") {
  const auto ranks = rank_summary(small_table());
  REQUIRE(ranks.size() == 3);
  // DS1: a < b < c by angle. DS2: a and b tie for best ratio.
  CHECK(ranks[0].method == "a");
  CHECK(ranks[0].mean_rank == doctest::Approx((1 + 1.5) / 2));
  CHECK(ranks[0].best == 1.0);
  CHECK(ranks[0].worst == 1.5);
  CHECK(ranks[1].mean_rank == doctest::Approx((2 + 1.5) / 2));
  CHECK(ranks[2].mean_rank == doctest::Approx(3.0));
  CHECK(ranks[2].best == 3.0);

  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    ComparisonTable table;
    const std::size_t m = 2 + rng.below(5), d = 1 + rng.below(6);
    for (std::size_t i = 0; i < m; ++i) table.methods.push_back("m" + std::to_string(i));
    for (std::size_t j = 0; j < d; ++j) {
      table.datasets.push_back("d" + std::to_string(j));
      table.metric.push_back(rng.below(2) ? MetricKind::kAngle : MetricKind::kSelectiveRatio);
      table.seed_count.push_back(1);
    }
    table.cells.assign(m, std::vector<double>(d));
    for (auto& row : table.cells) {
      for (double& v : row) v = static_cast<double>(rng.below(4));  // plenty of ties
    }
    const auto s = rank_summary(table);
    double total = 0.0;
    for (const auto& r : s) {
      total += r.mean_rank;
      CHECK(r.best <= r.mean_rank);
      CHECK(r.mean_rank <= r.worst);
      CHECK(r.best >= 1.0);
      CHECK(r.worst <= static_cast<double>(m));
    }
    CHECK(total / static_cast<double>(m) == doctest::Approx((m + 1) / 2.0));
  }
}

TEST_CASE("table validation and JSON round trip") {
  const ComparisonTable t = small_table();
  CHECK_NOTHROW(validate(t));
  const ComparisonTable back = table_from_json(table_to_json(t));
  CHECK(back.methods == t.methods);
  CHECK(back.datasets == t.datasets);
  CHECK(back.metric == t.metric);
  CHECK(back.seed_count == t.seed_count);
  CHECK(back.cells == t.cells);
  CHECK(format_table(t).find("DS2") != std::string::npos);

  ComparisonTable ragged = t;
  ragged.cells[1].pop_back();
  CHECK_THROWS_AS(validate(ragged), ValidationError);
  ComparisonTable missing = t;
  missing.cells.pop_back();
  CHECK_THROWS_AS(validate(missing), ValidationError);
  ComparisonTable nan = t;
  nan.cells[0][0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(validate(nan), ValidationError);
  ComparisonTable no_metric = t;
  no_metric.metric.pop_back();
  CHECK_THROWS_AS(validate(no_metric), ValidationError);
  CHECK_THROWS_AS(table_from_json(nlohmann::json{{"methods", 3}}), ValidationError);
}

TEST_CASE("oracle is an efficient Shapley vector of its own game") {
  for (DgpId id : {DgpId::kDS1, DgpId::kDS2, DgpId::kDS4, DgpId::kDS5}) {
    GroundTruthOptions opts;
    opts.n = 2000;
    const GroundTruthOracle o = derive_ground_truth_oracle({id, 2000, 4}, opts);
    const double sum =
        std::accumulate(o.weights.weights.begin(), o.weights.weights.end(), 0.0);
    const std::size_t p = dgp_feature_count(id);
    CHECK(o.losses.size() == (std::size_t{1} << p) - 1);
    CHECK(sum == doctest::Approx(o.game.value(static_cast<std::uint32_t>((std::size_t{1} << p) - 1))).epsilon(1e-9));
    CHECK(o.true_set.kind == GroundTruth::Kind::kTrueSet);
    CHECK(o.weights.kind == GroundTruth::Kind::kWeightVector);
  }
}

TEST_CASE("oracle on DS1 splits credit between the duplicates") {
  GroundTruthOptions opts;
  opts.n = 5000;
  for (double collinearity : {0.05, 0.01}) {
    const GroundTruth g =
        derive_ground_truth({DgpId::kDS1, 5000, 1, 1.0, collinearity}, opts);
    CHECK(g.weights[0] / g.weights[1] >= 0.9);
    CHECK(g.weights[0] / g.weights[1] <= 1.1);
    CHECK(std::abs(g.weights[2]) < 0.05 * g.weights[0]);
  }
}

TEST_CASE("oracle on zero-noise DS5") {
  // X3 alone is almost as good as the pair, so the plain refit game gives it
  // a share; only a top-coalition filter removes it.
  GroundTruthOptions opts;
  opts.n = 5000;
  const GroundTruthOracle u =
      derive_ground_truth_oracle({DgpId::kDS5, 5000, 2, 0.0, 0.05}, opts);
  CHECK(std::isinf(u.cutoff));
  const auto& w = u.weights.weights;
  CHECK(w[2] > 0.1 * w[0]);
  CHECK(w[0] == doctest::Approx(w[1]).epsilon(0.05));

  // Hand enumeration of the same three-player game.
  auto v = [&](const char* m) { return u.baseline_loss - u.losses.at(CoalitionMask::parse(m)); };
  const double phi3 = (v("001") + (v("101") - v("100")) / 2 + (v("011") - v("010")) / 2 +
                       (v("111") - v("110"))) / 3;
  CHECK(w[2] == doctest::Approx(phi3).epsilon(1e-9));

  opts.relative_cutoff = 0.05;
  const GroundTruth g = derive_ground_truth({DgpId::kDS5, 5000, 2, 0.0, 0.05}, opts);
  CHECK(g.weights[0] > 0.5);
  CHECK(g.weights[1] > 0.5);
  CHECK(std::abs(g.weights[2]) <= 1e-6 * g.weights[0]);
}

TEST_CASE("split consistency examples") {
  // Identical rows: both halves are the same data, so the angle is 0.
  std::vector<double> a(60, 1.0), b(60, 2.0), y(60, 0.5);
  const Dataset same({"a", "b"}, Matrix::from_columns({a, b}), y);
  const MethodRunner means = [](const Dataset& half) {
    std::vector<double> phi;
    for (std::size_t j = 0; j < half.p(); ++j) {
      auto c = half.x().col(j);
      phi.push_back(std::accumulate(c.begin(), c.end(), 0.0) / c.size());
    }
    return report_with(phi);
  };
  const ConsistencyResult r = split_consistency(same, means, 4, 1);
  CHECK(r.trial_angles.size() == 4);
  CHECK(r.mean_angle <= 1e-7);

  // Orthogonal answers on the two halves.
  int call = 0;
  const MethodRunner flip = [&](const Dataset&) {
    return report_with(call++ % 2 == 0 ? std::vector<double>{1, 0}
                                       : std::vector<double>{0, 1});
  };
  CHECK(split_consistency(same, flip, 3, 0).mean_angle == doctest::Approx(kPi / 2));

  // Failed trials are skipped and reported.
  int n = 0;
  const MethodRunner flaky = [&](const Dataset& half) {
    if (n++ == 0) throw Error("boom");
    return means(half);
  };
  const ConsistencyResult f = split_consistency(same, flaky, 3, 0);
  CHECK(f.trial_angles.size() == 2);
  REQUIRE(f.skipped.size() == 1);
  CHECK(f.skipped[0].find("boom") != std::string::npos);

  const MethodRunner broken = [](const Dataset&) -> ImportanceReport { throw Error("x"); };
  CHECK_THROWS_AS(split_consistency(same, broken, 2, 0), Error);
  CHECK_THROWS_AS(split_consistency(same, means, 0, 0), ValidationError);
  const Dataset tiny({"a"}, Matrix::from_columns({std::vector<double>(20, 1.0)}),
                     std::vector<double>(20, 0.0));
  CHECK_THROWS_AS(split_consistency(tiny, means, 2, 0), ValidationError);
}

TEST_CASE("split consistency halves are disjoint and cover the data") {
  std::vector<double> idx(101);
  std::iota(idx.begin(), idx.end(), 0.0);
  const Dataset ds({"i"}, Matrix::from_columns({idx}), idx);
  std::vector<std::vector<double>> seen;
  const MethodRunner grab = [&](const Dataset& half) {
    seen.emplace_back(half.y());
    return report_with({1.0});
  };
  split_consistency(ds, grab, 2, 5);
  REQUIRE(seen.size() == 4);
  for (std::size_t t = 0; t < 2; ++t) {
    std::vector<double> all = seen[2 * t];
    all.insert(all.end(), seen[2 * t + 1].begin(), seen[2 * t + 1].end());
    std::sort(all.begin(), all.end());
    CHECK(all == idx);
    CHECK(std::abs(static_cast<double>(seen[2 * t].size()) -
                   static_cast<double>(seen[2 * t + 1].size())) <= 1.0);
  }
  CHECK(seen[0] != seen[2]);
}

TEST_CASE("comparison grid is complete and reproducible") {
  CompareConfig cfg;
  cfg.datasets = {DgpId::kDS3, DgpId::kDS5};
  cfg.methods = {Method::kSmssm, Method::kGain};
  cfg.n = 200;
  cfg.seeds = 2;
  cfg.truth.n = 1000;
  cfg.method.learner = LearnerSpec::boosted({20, 2, 0.2});
  cfg.method.k = 8;
  const ComparisonRun a = run_comparison(cfg);
  CHECK_NOTHROW(validate(a.table));
  CHECK(a.table.methods == std::vector<std::string>{"SMSSM", "Gain"});
  CHECK(a.oracles.size() == 2);
  for (std::size_t m = 0; m < 2; ++m) {
    for (std::size_t d = 0; d < 2; ++d) {
      const auto& s = a.scores[m][d];
      CHECK(a.table.cells[m][d] == doctest::Approx((s[0] + s[1]) / 2));
    }
  }
  cfg.jobs = 3;
  CHECK(run_comparison(cfg).table.cells == a.table.cells);
  CHECK(replicate_seed(0, DgpId::kDS1, 0) != replicate_seed(0, DgpId::kDS2, 0));
  CHECK(replicate_seed(0, DgpId::kDS1, 0) != replicate_seed(0, DgpId::kDS1, 1));
  cfg.seeds = 0;
  CHECK_THROWS_AS(run_comparison(cfg), ValidationError);
}
