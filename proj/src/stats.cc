#include "surplus/stats.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace surplus {

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double sample_variance(std::span<const double> values) {
  const double sd = sample_sd(values);
  return sd * sd;
}

double normal_cdf(double z) {
  return boost::math::cdf(boost::math::normal_distribution<>(), z);
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<>(), p);
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences) {
  std::vector<double> d;
  for (double v : differences) {
    if (v != 0.0) d.push_back(v);
  }
  WilcoxonResult out;
  out.n_used = d.size();
  if (d.empty()) return out;

  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(d[a]) < std::abs(d[b]);
  });

  // Mid-ranks for tied magnitudes.
  std::vector<double> rank(n);
  bool ties = false;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    const double t = static_cast<double>(j - i + 1);
    if (j > i) {
      ties = true;
      tie_term += t * t * t - t;
    }
    i = j + 1;
  }
  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0) w_plus += rank[i];
  }
  out.statistic = w_plus;

  if (!ties && n <= 50) {
    // counts[w] = number of sign assignments with W+ = w.
    const std::size_t max_w = n * (n + 1) / 2;
    std::vector<double> counts(max_w + 1, 0.0);
    counts[0] = 1.0;
    for (std::size_t r = 1; r <= n; ++r) {
      for (std::size_t w = max_w; w >= r; --w) counts[w] += counts[w - r];
    }
    const double total = std::ldexp(1.0, static_cast<int>(n));
    const auto w = static_cast<std::size_t>(std::llround(w_plus));
    double upper = 0.0, lower = 0.0;
    for (std::size_t k = 0; k <= max_w; ++k) {
      if (k >= w) upper += counts[k];
      if (k <= w) lower += counts[k];
    }
    out.p_greater = upper / total;
    out.p_less = lower / total;
    out.exact = true;
    return out;
  }

  const double nn = static_cast<double>(n);
  const double expected = nn * (nn + 1) / 4;
  const double variance = nn * (nn + 1) * (2 * nn + 1) / 24 - tie_term / 48;
  if (variance <= 0) return out;
  const double sd = std::sqrt(variance);
  out.p_greater = 1.0 - normal_cdf((w_plus - expected - 0.5) / sd);
  out.p_less = normal_cdf((w_plus - expected + 0.5) / sd);
  return out;
}

}  // namespace surplus
