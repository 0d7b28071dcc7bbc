#ifndef SURPLUS_SHAPLEY_H_
#define SURPLUS_SHAPLEY_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "surplus/learner.h"

namespace surplus {

// Largest player count accepted by exact enumeration.
inline constexpr std::size_t kMaxExactPlayers = 20;

// Coalitional game on n players. Coalitions are bitmasks: bit i set means
// player i participates. The value table covers all 2^n coalitions.
class Game {
 public:
  Game(std::size_t n_players, std::vector<double> values);
  static Game from_function(std::size_t n_players,
                            const std::function<double(std::uint32_t)>& value);

  std::size_t n_players() const { return n_players_; }
  std::uint32_t grand_coalition() const {
    return static_cast<std::uint32_t>((std::uint64_t{1} << n_players_) - 1);
  }
  double value(std::uint32_t coalition) const { return values_.at(coalition); }
  const std::vector<double>& values() const { return values_; }

  Game operator+(const Game& other) const;

 private:
  std::size_t n_players_;
  std::vector<double> values_;
};

struct ShapleyVector {
  std::vector<double> phi;
};

// phi_i = sum over coalitions a without i of
//   |a|! (n - |a| - 1)! / n! * (v(a + i) - v(a)).
// Throws SizeError when n exceeds kMaxExactPlayers.
ShapleyVector exact_shapley(const Game& game, int jobs = 1);

// Game over mask losses: v(c) = -L(c) when L(c) <= cutoff, else 0. Masks
// missing from the map are worth 0. All masks must share one length.
Game filtered_value(const std::map<CoalitionMask, double>& losses,
                    double cutoff);

// Surplus form of the same filter: v(c) = (baseline - L(c)) when
// L(c) <= cutoff, else 0, with v(empty) = 0. Larger is better and values of
// good coalitions are positive.
Game filtered_surplus(const std::map<CoalitionMask, double>& losses,
                      double baseline_loss, double cutoff);

// Exact C(n, k). Throws SizeError if the result does not fit in 64 bits.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

struct Fraction {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 1;
};

// Probability that a uniformly random size-j subset of p features contains
// all T designated features: C(p - T, j - T) / C(p, j) for j >= T, else 0.
Fraction coverage_fraction(std::size_t p, std::size_t t, std::size_t j);
double coverage_probability(std::size_t p, std::size_t t, std::size_t j);

}  // namespace surplus

#endif  // SURPLUS_SHAPLEY_H_
