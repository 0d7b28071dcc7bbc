#ifndef SURPLUS_RANDOM_H_
#define SURPLUS_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace surplus {

// Derives an independent stream seed from a tuple of keys. Every random
// quantity in the toolkit is keyed this way, so values never depend on the
// order in which tasks or columns are processed.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys);

// Tags used as the second key when deriving per-task streams.
enum class StreamTag : std::uint64_t {
  kColumn = 0x636f6c,
  kMask = 0x6d61736b,
  kCvSplit = 0x6376,
  kFit = 0x666974,
  kPermutation = 0x7065726d,
  kHyperparams = 0x6879,
  kTrial = 0x747269,
};

inline std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

// Portable random stream. The engine is std::mt19937_64, whose output is
// fully specified by the standard; the distributions below are implemented
// here because the std:: distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  // Standard normal draw (Marsaglia polar method).
  double normal();

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  // Uniform sample of `count` distinct indices from [0, population), in
  // increasing order.
  std::vector<std::size_t> sample_without_replacement(std::size_t population,
                                                      std::size_t count);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace surplus

#endif  // SURPLUS_RANDOM_H_
