#include "surplus/shapley.h"

#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "surplus/errors.h"
#include "surplus/parallel.h"

namespace surplus {

Game::Game(std::size_t n_players, std::vector<double> values)
    : n_players_(n_players), values_(std::move(values)) {
  if (n_players_ < 1) throw ValidationError("a game needs at least 1 player");
  if (n_players_ > 30) throw SizeError("game too large to tabulate");
  if (values_.size() != (std::size_t{1} << n_players_)) {
    throw ValidationError("game value table must have 2^n entries");
  }
  if (!std::isfinite(values_[0])) {
    throw ValidationError("value of the empty coalition must be finite");
  }
}

Game Game::from_function(std::size_t n_players,
                         const std::function<double(std::uint32_t)>& value) {
  if (n_players > 30) throw SizeError("game too large to tabulate");
  std::vector<double> values(std::size_t{1} << n_players);
  for (std::size_t c = 0; c < values.size(); ++c) {
    values[c] = value(static_cast<std::uint32_t>(c));
  }
  return Game(n_players, std::move(values));
}

Game Game::operator+(const Game& other) const {
  if (other.n_players_ != n_players_) {
    throw ValidationError("cannot add games with different player counts");
  }
  std::vector<double> sum(values_.size());
  for (std::size_t c = 0; c < sum.size(); ++c) {
    sum[c] = values_[c] + other.values_[c];
  }
  return Game(n_players_, std::move(sum));
}

ShapleyVector exact_shapley(const Game& game, int jobs) {
  const std::size_t n = game.n_players();
  if (n > kMaxExactPlayers) {
    throw SizeError("exact Shapley enumeration supports at most " +
                    std::to_string(kMaxExactPlayers) + " players, got " +
                    std::to_string(n));
  }
  // weight[s] = s! (n-s-1)! / n! = 1 / (n * C(n-1, s))
  std::vector<double> weight(n);
  for (std::size_t s = 0; s < n; ++s) {
    weight[s] = 1.0 / (static_cast<double>(n) *
                       static_cast<double>(binomial(n - 1, s)));
  }
  const auto& v = game.values();
  const std::uint32_t full = game.grand_coalition();

  ShapleyVector out{std::vector<double>(n, 0.0)};
  parallel_for(n, jobs, [&](std::size_t i) {
    const std::uint32_t bit = std::uint32_t{1} << i;
    // Neumaier summation keeps the result independent of n's magnitude.
    double sum = 0.0, carry = 0.0;
    for (std::uint32_t a = 0; a <= full; ++a) {
      if (a & bit) continue;
      const double term = weight[std::popcount(a)] * (v[a | bit] - v[a]);
      const double t = sum + term;
      if (std::abs(sum) >= std::abs(term)) {
        carry += (sum - t) + term;
      } else {
        carry += (term - t) + sum;
      }
      sum = t;
    }
    out.phi[i] = sum + carry;
  });
  return out;
}

namespace {

std::size_t common_width(const std::map<CoalitionMask, double>& losses) {
  if (losses.empty()) throw ValidationError("loss map is empty");
  const std::size_t p = losses.begin()->first.size();
  for (const auto& [mask, loss] : losses) {
    if (mask.size() != p) throw ValidationError("masks differ in length");
  }
  if (p > kMaxExactPlayers) {
    throw SizeError("too many features to enumerate coalitions");
  }
  return p;
}

}  // namespace

Game filtered_value(const std::map<CoalitionMask, double>& losses,
                    double cutoff) {
  const std::size_t p = common_width(losses);
  std::vector<double> values(std::size_t{1} << p, 0.0);
  for (const auto& [mask, loss] : losses) {
    if (loss <= cutoff) values[mask.to_bits()] = -loss;
  }
  return Game(p, std::move(values));
}

Game filtered_surplus(const std::map<CoalitionMask, double>& losses,
                      double baseline_loss, double cutoff) {
  const std::size_t p = common_width(losses);
  std::vector<double> values(std::size_t{1} << p, 0.0);
  for (const auto& [mask, loss] : losses) {
    const auto bits = mask.to_bits();
    if (bits != 0 && loss <= cutoff) values[bits] = baseline_loss - loss;
  }
  return Game(p, std::move(values));
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // result * (n - k + i) / i, reduced first so the product stays small.
    std::uint64_t num = n - k + i;
    std::uint64_t den = i;
    const std::uint64_t g1 = std::gcd(result, den);
    result /= g1;
    den /= g1;
    const std::uint64_t g2 = std::gcd(num, den);
    num /= g2;
    den /= g2;
    // den is now 1: i divides result * (n - k + i) exactly.
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(result) * num / den;
    if (wide > std::numeric_limits<std::uint64_t>::max()) {
      throw SizeError("binomial coefficient overflows 64 bits");
    }
    result = static_cast<std::uint64_t>(wide);
  }
  return result;
}

Fraction coverage_fraction(std::size_t p, std::size_t t, std::size_t j) {
  if (p < 1 || t < 1 || t > p || j < 1 || j > p) {
    throw ValidationError("coverage_probability needs 1 <= T <= p and "
                          "1 <= j <= p");
  }
  if (j < t) return {0, 1};
  std::uint64_t num = binomial(p - t, j - t);
  std::uint64_t den = binomial(p, j);
  const std::uint64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

double coverage_probability(std::size_t p, std::size_t t, std::size_t j) {
  const Fraction f = coverage_fraction(p, t, j);
  return static_cast<double>(f.numerator) / static_cast<double>(f.denominator);
}

}  // namespace surplus
