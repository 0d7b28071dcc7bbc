#ifndef SURPLUS_STATS_H_
#define SURPLUS_STATS_H_

#include <cstddef>
#include <span>

namespace surplus {

double mean(std::span<const double> values);
// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double sample_sd(std::span<const double> values);
double sample_variance(std::span<const double> values);

double normal_cdf(double z);
double normal_quantile(double p);

struct WilcoxonResult {
  double statistic = 0.0;      // W+, the rank sum of positive differences
  std::size_t n_used = 0;      // nonzero differences
  double p_greater = 1.0;      // H1: location > 0
  double p_less = 1.0;         // H1: location < 0
  bool exact = false;
};

// One-sample Wilcoxon signed-rank test. Zero differences are dropped. Uses
// the exact null distribution when there are no tied magnitudes and at most
// 50 nonzero differences, else the normal approximation with tie and
// continuity corrections.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences);

}  // namespace surplus

#endif  // SURPLUS_STATS_H_
