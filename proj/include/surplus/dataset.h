#ifndef SURPLUS_DATASET_H_
#define SURPLUS_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "surplus/matrix.h"

namespace surplus {

// Numeric table with named features, a target and, for simulated data, the
// set of features the data-generating process actually uses.
class Dataset {
 public:
  // Validates: n >= 2, p >= 1, all values finite, unique names matching p,
  // true_set within range. Throws ValidationError otherwise.
  Dataset(std::vector<std::string> feature_names, Matrix x,
          std::vector<double> y,
          std::optional<std::vector<std::size_t>> true_set = std::nullopt);

  std::size_t n() const { return x_.rows(); }
  std::size_t p() const { return x_.cols(); }
  const std::vector<std::string>& feature_names() const { return names_; }
  const Matrix& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }
  const std::optional<std::vector<std::size_t>>& true_set() const {
    return true_set_;
  }

  // Row subset, preserving names and true set.
  Dataset subset(std::span<const std::size_t> rows) const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<std::string> names_;
  Matrix x_;
  std::vector<double> y_;
  std::optional<std::vector<std::size_t>> true_set_;
};

// ---------------------------------------------------------------------------
// Simulated data-generating processes.

enum class DgpId { kDS1 = 1, kDS2, kDS3, kDS4, kDS5, kDS6 };

std::string_view dgp_name(DgpId id);
// Accepts "DS1".."DS6" (case-insensitive). Throws ValidationError.
DgpId parse_dgp(std::string_view name);
inline constexpr DgpId kAllDgps[] = {DgpId::kDS1, DgpId::kDS2, DgpId::kDS3,
                                     DgpId::kDS4, DgpId::kDS5, DgpId::kDS6};

struct DgpSpec {
  DgpId id = DgpId::kDS1;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double noise_scale = 1.0;         // sd of the target noise
  double collinearity_noise = 0.05; // sd of the near-duplicate perturbation
};

// Throws ValidationError unless n >= 10 and both scales are >= 0.
void validate(const DgpSpec& spec);

// Number of features produced by a generator.
std::size_t dgp_feature_count(DgpId id);
// True when the target is linear in the features (OLS is well specified).
bool dgp_is_linear(DgpId id);

// Pure function of `spec`; every column is drawn from its own stream keyed by
// (seed, dataset id, column).
Dataset generate(const DgpSpec& spec);

// ---------------------------------------------------------------------------
// CSV ingestion and export.

// Loads a header-first CSV file. Every non-target column becomes a feature,
// in file order. Throws ValidationError naming the row and column of the
// first missing or non-numeric cell.
Dataset load_csv(const std::filesystem::path& path, std::string_view target);
Dataset parse_csv(std::string_view text, std::string_view target);

// Writes features followed by the target column. Values use the shortest
// representation that round-trips exactly.
void write_csv(const Dataset& ds, const std::filesystem::path& path,
               std::string_view target_name = "y");
std::string format_csv(const Dataset& ds, std::string_view target_name = "y");

// ---------------------------------------------------------------------------
// Splitting.

struct SplitPlan {
  enum class Kind { kKFold, kRandomHalves };
  Kind kind = Kind::kKFold;
  std::size_t k = 5;  // folds, KFold only
  std::uint64_t seed = 0;

  static SplitPlan kfold(std::size_t k, std::uint64_t seed) {
    return {Kind::kKFold, k, seed};
  }
  static SplitPlan random_halves(std::uint64_t seed) {
    return {Kind::kRandomHalves, 2, seed};
  }
};

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// KFold: k folds whose test sets partition 0..n-1 (sizes differ by at most
// one). RandomHalves: a single Fold whose train and test halves are disjoint
// and cover all rows. Indices within each set are sorted.
std::vector<Fold> split(std::size_t n, const SplitPlan& plan);
inline std::vector<Fold> split(const Dataset& ds, const SplitPlan& plan) {
  return split(ds.n(), plan);
}

}  // namespace surplus

#endif  // SURPLUS_DATASET_H_
