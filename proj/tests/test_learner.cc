#include <cmath>
#include <functional>
#include <numeric>

#include "doctest.h"
#include "surplus/dataset.h"
#include "surplus/errors.h"
#include "surplus/gbt.h"
#include "surplus/learner.h"
#include "surplus/ols.h"
#include "surplus/random.h"

using namespace surplus;

namespace {

Dataset make(std::size_t n, std::size_t p, std::uint64_t seed,
             const std::function<double(const std::vector<double>&, Rng&)>& f) {
  Rng rng(seed);
  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(p);
    for (std::size_t j = 0; j < p; ++j) row[j] = cols[j][i] = rng.normal();
    y[i] = f(row, rng);
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  return Dataset(names, Matrix::from_columns(cols), y);
}

const OlsPredictor& as_ols(const FittedModel& m) {
  return dynamic_cast<const OlsPredictor&>(m.predictor());
}

double variance(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / v.size();
}

}  // namespace

TEST_CASE("coalition mask basics") {
  const auto m = CoalitionMask::parse("1011");
  CHECK(m.size() == 4);
  CHECK(m.popcount() == 3);
  CHECK(m.indices() == std::vector<std::size_t>{0, 2, 3});
  CHECK(m.without(2).to_string() == "1001");
  CHECK(m.with(1, true) == CoalitionMask::all(4));
  CHECK(CoalitionMask::from_bits(m.to_bits(), 4) == m);
  CHECK(CoalitionMask::none(3).empty());
  CHECK_THROWS_AS(CoalitionMask::parse("10a"), ValidationError);
}

TEST_CASE("OLS recovers an exact slope") {
  const Dataset ds = make(50, 1, 1, [](auto& r, Rng&) { return 2.0 * r[0]; });
  const FittedModel m = fit(LearnerSpec::ols(), ds, CoalitionMask::all(1));
  REQUIRE(as_ols(m).coefficients().size() == 1);
  CHECK(std::abs(as_ols(m).coefficients()[0] - 2.0) <= 1e-9);
  CHECK(m.train_loss() <= 1e-18);
  Matrix x(1, 1, 3.0);
  CHECK(m.predict(x)[0] == doctest::Approx(6.0).epsilon(1e-12));
  CHECK_FALSE(m.regularized());
}

TEST_CASE("OLS recovers coefficients of noiseless linear data") {
  for (std::size_t p : {2u, 10u, 50u}) {
    for (std::size_t n : {200u, 10000u}) {
      Rng coef_rng(p * 31 + n);
      std::vector<double> beta(p);
      for (double& b : beta) b = coef_rng.uniform(-3, 3);
      const Dataset ds = make(n, p, p + n, [&](auto& r, Rng&) {
        double s = 0.7;
        for (std::size_t j = 0; j < p; ++j) s += beta[j] * r[j];
        return s;
      });
      const FittedModel m = fit(LearnerSpec::ols(), ds, CoalitionMask::all(p));
      for (std::size_t j = 0; j < p; ++j) {
        CHECK(std::abs(as_ols(m).coefficients()[j] - beta[j]) <= 1e-9);
      }
      CHECK(std::abs(as_ols(m).intercept() - 0.7) <= 1e-9);
    }
  }
}

TEST_CASE("OLS falls back to ridge on an exactly collinear design") {
  const Dataset base = generate({DgpId::kDS5, 200, 3, 0.0, 0.0});
  const FittedModel m = fit(LearnerSpec::ols(), base, CoalitionMask::all(3));
  CHECK(m.regularized());
  CHECK(m.train_loss() < 1e-10);
}

TEST_CASE("OLS on DS5 true pair reaches the noise floor") {
  const Dataset train = generate({DgpId::kDS5, 10000, 1});
  const Dataset test = generate({DgpId::kDS5, 10000, 2});
  const FittedModel m = fit(LearnerSpec::ols(), train, CoalitionMask::parse("110"));
  const double mse = mean_squared_error(m.predict(test.x()), test.y());
  CHECK(mse == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("subset-function law: masked-out columns never matter") {
  const Dataset ds = generate({DgpId::kDS6, 300, 4});
  Rng rng(77);
  for (LearnerSpec spec : {LearnerSpec::ols(), LearnerSpec::boosted({30, 3, 0.3})}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto idx = rng.sample_without_replacement(10, 1 + rng.below(9));
      const CoalitionMask mask = CoalitionMask::from_indices(10, idx);
      const FittedModel m = fit(spec, ds, mask);
      Matrix x = ds.x();
      Matrix perturbed = x;
      for (std::size_t j = 0; j < 10; ++j) {
        if (mask.test(j)) continue;
        for (std::size_t i = 0; i < x.rows(); ++i) perturbed(i, j) = rng.normal() * 100;
      }
      CHECK(m.predict(x) == m.predict(perturbed));
    }
  }
}

TEST_CASE("predict checks the column count") {
  const Dataset ds = generate({DgpId::kDS1, 50, 1});
  const FittedModel m = fit(LearnerSpec::ols(), ds, CoalitionMask::all(3));
  CHECK_THROWS_AS(m.predict(Matrix(4, 2)), ValidationError);
}

TEST_CASE("fit rejects an empty mask or a wrong-length mask") {
  const Dataset ds = generate({DgpId::kDS1, 50, 1});
  CHECK_THROWS_AS(fit(LearnerSpec::ols(), ds, CoalitionMask::none(3)), ValidationError);
  CHECK_THROWS_AS(fit(LearnerSpec::ols(), ds, CoalitionMask::all(2)), ValidationError);
}

TEST_CASE("learner spec validation") {
  CHECK_THROWS_AS(validate(LearnerSpec::boosted({0, 3, 0.1})), ValidationError);
  CHECK_THROWS_AS(validate(LearnerSpec::boosted({10, 13, 0.1})), ValidationError);
  CHECK_THROWS_AS(validate(LearnerSpec::boosted({10, 3, 0.0})), ValidationError);
  CHECK_THROWS_AS(validate(LearnerSpec::boosted({10, 3, 0.1, 1.5})), ValidationError);
  CHECK_THROWS_AS(validate(LearnerSpec::external_process("")), ValidationError);
  CHECK_NOTHROW(validate(LearnerSpec::boosted({1, 12, 1.0, 0.1})));
}

TEST_CASE("GBT is deterministic, including with row subsampling") {
  const Dataset ds = generate({DgpId::kDS4, 500, 2});
  for (double sub : {1.0, 0.7}) {
    const auto spec = LearnerSpec::boosted({50, 3, 0.1, sub}, 9);
    const FittedModel a = fit(spec, ds, CoalitionMask::all(3));
    const FittedModel b = fit(spec, ds, CoalitionMask::all(3));
    CHECK(a.predict(ds.x()) == b.predict(ds.x()));
  }
  const FittedModel c = fit(LearnerSpec::boosted({50, 3, 0.1, 0.7}, 1), ds, CoalitionMask::all(3));
  const FittedModel d = fit(LearnerSpec::boosted({50, 3, 0.1, 0.7}, 2), ds, CoalitionMask::all(3));
  CHECK(c.predict(ds.x()) != d.predict(ds.x()));
}

TEST_CASE("GBT fit to a constant target predicts the constant") {
  const Dataset ds = make(200, 3, 5, [](auto&, Rng&) { return 4.25; });
  const FittedModel m = fit(LearnerSpec::boosted(), ds, CoalitionMask::all(3));
  for (double v : m.predict(ds.x())) CHECK(std::abs(v - 4.25) <= 1e-12);
  const auto& gbt = dynamic_cast<const GbtPredictor&>(m.predictor());
  for (const Tree& t : gbt.trees()) CHECK(t.size() == 1);
}

TEST_CASE("GBT training loss is non-increasing per round") {
  for (DgpId id : {DgpId::kDS1, DgpId::kDS4, DgpId::kDS6}) {
    const Dataset ds = generate({id, 800, 3});
    const FittedModel m = fit(LearnerSpec::boosted({150, 4, 0.2}), ds,
                              CoalitionMask::all(ds.p()));
    const auto& h = dynamic_cast<const GbtPredictor&>(m.predictor()).loss_history();
    REQUIRE(h.size() == 150);
    for (std::size_t r = 1; r < h.size(); ++r) CHECK(h[r] <= h[r - 1] + 1e-12);
    CHECK(h.back() == doctest::Approx(m.train_loss()).epsilon(1e-9));
  }
}

TEST_CASE("GBT splits route exactly at thresholds") {
  // Two-valued feature: one split separates the groups perfectly.
  std::vector<double> x(100), y(100);
  for (int i = 0; i < 100; ++i) {
    x[i] = i % 2;
    y[i] = i % 2 ? 5.0 : -1.0;
  }
  const Dataset ds({"x"}, Matrix::from_columns({x}), y);
  const FittedModel m = fit(LearnerSpec::boosted({200, 1, 0.5}), ds, CoalitionMask::all(1));
  const auto p = m.predict(ds.x());
  CHECK(p[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(p[1] == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("cv_loss examples") {
  const Dataset exact = make(100, 2, 3, [](auto& r, Rng&) { return r[0]; });
  for (std::size_t k : {2u, 5u, 10u}) {
    CHECK(cv_loss(LearnerSpec::ols(), exact, CoalitionMask::all(2), SplitPlan::kfold(k, 1)) <= 1e-12);
  }
  // Without the only true covariate the best is the mean predictor.
  const double without = cv_loss(LearnerSpec::ols(), exact, CoalitionMask::parse("01"),
                                 SplitPlan::kfold(5, 1));
  const double baseline = baseline_cv_loss(exact, SplitPlan::kfold(5, 1));
  CHECK(without == doctest::Approx(baseline).epsilon(0.1));
  CHECK(baseline == doctest::Approx(variance(exact.y())).epsilon(0.1));

  const auto outcome = cross_validate(LearnerSpec::ols(), exact, CoalitionMask::all(2),
                                      SplitPlan::kfold(4, 0));
  CHECK(outcome.fits == 4);
  CHECK(cross_validate(LearnerSpec::ols(), exact, CoalitionMask::none(2),
                       SplitPlan::kfold(4, 0)).fits == 0);
  CHECK_THROWS_AS(cv_loss(LearnerSpec::ols(), exact, CoalitionMask::all(2),
                          SplitPlan::random_halves(0)),
                  ValidationError);
}

TEST_CASE("dropping a true covariate never helps on DS2") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset ds = generate({DgpId::kDS2, 5000, seed});
    const auto plan = SplitPlan::kfold(5, seed);
    const double full = cv_loss(LearnerSpec::ols(), ds, CoalitionMask::all(5), plan);
    CHECK(full <= cv_loss(LearnerSpec::ols(), ds, CoalitionMask::parse("01111"), plan));
    CHECK(full <= cv_loss(LearnerSpec::ols(), ds, CoalitionMask::parse("10111"), plan));
  }
}

TEST_CASE("gain importance") {
  const Dataset ds = generate({DgpId::kDS5, 5000, 1});
  const FittedModel full = fit(LearnerSpec::boosted(), ds, CoalitionMask::all(3));
  const auto g = gain_importance(full);
  REQUIRE(g.size() == 3);
  for (double v : g) CHECK(v >= 0);
  CHECK(g[2] > 0);

  const FittedModel masked = fit(LearnerSpec::boosted(), ds, CoalitionMask::parse("101"));
  CHECK(gain_importance(masked)[1] == 0.0);

  const Dataset one = make(300, 1, 2, [](auto& r, Rng& rng) { return r[0] + 0.1 * rng.normal(); });
  const auto g1 = gain_importance(fit(LearnerSpec::boosted(), one, CoalitionMask::all(1)));
  CHECK(g1[0] > 0);

  // A feature that is constant can never be split on.
  std::vector<double> c(100, 1.0), z(100), y(100);
  Rng rng(4);
  for (int i = 0; i < 100; ++i) y[i] = z[i] = rng.normal();
  const Dataset flat({"c", "z"}, Matrix::from_columns({c, z}), y);
  CHECK(gain_importance(fit(LearnerSpec::boosted(), flat, CoalitionMask::all(2)))[0] == 0.0);

  CHECK_THROWS_AS(gain_importance(fit(LearnerSpec::ols(), ds, CoalitionMask::all(3))),
                  UnsupportedError);
}

TEST_CASE("all-ones mask equals the unmasked path") {
  const Dataset ds = generate({DgpId::kDS4, 400, 6});
  std::vector<std::size_t> rows(ds.n());
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<std::size_t> cols = {0, 1, 2};
  const auto direct = fit_gbt(GbtParams{}, 0, ds.x(), ds.y(), rows, cols);
  std::vector<double> expected(ds.n());
  direct->predict(ds.x(), rows, expected);
  const FittedModel m = fit(LearnerSpec::boosted(), ds, CoalitionMask::all(3));
  CHECK(m.predict(ds.x()) == expected);
}
