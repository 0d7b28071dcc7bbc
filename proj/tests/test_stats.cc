#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "surplus/random.h"
#include "surplus/stats.h"

using namespace surplus;

namespace {

// Sign-flip distribution of W+ by brute force (mid-ranks for ties).
std::pair<double, double> brute_force(const std::vector<double>& raw) {
  std::vector<double> d;
  for (double v : raw) {
    if (v != 0) d.push_back(v);
  }
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double below = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      below += std::abs(d[j]) < std::abs(d[i]);
      equal += std::abs(d[j]) == std::abs(d[i]);
    }
    rank[i] = below + (equal + 1) / 2;
  }
  double observed = 0;
  for (std::size_t i = 0; i < n; ++i) observed += d[i] > 0 ? rank[i] : 0;
  double ge = 0, le = 0;
  const std::uint32_t total = 1u << n;
  for (std::uint32_t s = 0; s < total; ++s) {
    double w = 0;
    for (std::size_t i = 0; i < n; ++i) w += (s >> i & 1u) ? rank[i] : 0;
    ge += w >= observed - 1e-9;
    le += w <= observed + 1e-9;
  }
  return {ge / total, le / total};
}

}  // namespace

TEST_CASE("mean and sample sd") {
  std::vector<double> v = {1, 2, 3, 4};
  CHECK(mean(v) == 2.5);
  CHECK(sample_sd(v) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(sample_variance(v) == doctest::Approx(5.0 / 3.0));
  CHECK(sample_sd(std::vector<double>{7}) == 0.0);
}

TEST_CASE("normal quantiles") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(normal_quantile(0.2)) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("exact signed-rank p-values match sign-flip enumeration") {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(14);
    std::vector<double> d(n);
    for (double& v : d) v = rng.normal() + 0.3;
    const auto w = wilcoxon_signed_rank(d);
    const auto [ge, le] = brute_force(d);
    CHECK(w.exact);
    CHECK(w.n_used == n);
    CHECK(w.p_greater == doctest::Approx(ge).epsilon(1e-12));
    CHECK(w.p_less == doctest::Approx(le).epsilon(1e-12));
  }
}

TEST_CASE("normal approximation tracks enumeration with ties") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> d(18);
    for (double& v : d) v = std::round(rng.normal() * 3 + 0.5);
    const auto w = wilcoxon_signed_rank(d);
    const auto [ge, le] = brute_force(d);
    CHECK_FALSE(w.exact);
    CHECK(std::abs(w.p_greater - ge) < 0.02);
    CHECK(std::abs(w.p_less - le) < 0.02);
  }
}

TEST_CASE("all-positive differences are significant") {
  std::vector<double> d(20);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = 0.1 + 0.01 * i;
  const auto w = wilcoxon_signed_rank(d);
  CHECK(w.p_greater == doctest::Approx(std::ldexp(1.0, -20)));
  CHECK(w.p_less == 1.0);
}

TEST_CASE("zeros are dropped; all zeros is uninformative") {
  const auto w = wilcoxon_signed_rank(std::vector<double>(10, 0.0));
  CHECK(w.n_used == 0);
  CHECK(w.p_greater == 1.0);
  CHECK(w.p_less == 1.0);
  const auto v = wilcoxon_signed_rank(std::vector<double>{0, 1, 2, 0, 3});
  CHECK(v.n_used == 3);
  CHECK(v.p_greater == doctest::Approx(1.0 / 8));
}
