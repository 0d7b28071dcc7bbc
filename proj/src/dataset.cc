#include "surplus/dataset.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "surplus/errors.h"
#include "surplus/random.h"

namespace surplus {

Dataset::Dataset(std::vector<std::string> feature_names, Matrix x,
                 std::vector<double> y,
                 std::optional<std::vector<std::size_t>> true_set)
    : names_(std::move(feature_names)),
      x_(std::move(x)),
      y_(std::move(y)),
      true_set_(std::move(true_set)) {
  if (x_.rows() < 2) throw ValidationError("dataset needs at least 2 rows");
  if (x_.cols() < 1) throw ValidationError("dataset needs at least 1 feature");
  if (y_.size() != x_.rows()) {
    throw ValidationError("target length " + std::to_string(y_.size()) +
                          " does not match row count " +
                          std::to_string(x_.rows()));
  }
  if (names_.size() != x_.cols()) {
    throw ValidationError("expected " + std::to_string(x_.cols()) +
                          " feature names, got " +
                          std::to_string(names_.size()));
  }
  std::set<std::string> seen;
  for (const auto& name : names_) {
    if (!seen.insert(name).second) {
      throw ValidationError("duplicate feature name '" + name + "'");
    }
  }
  for (std::size_t c = 0; c < x_.cols(); ++c) {
    for (double v : x_.col(c)) {
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite value in feature '" + names_[c] +
                              "'");
      }
    }
  }
  for (double v : y_) {
    if (!std::isfinite(v)) throw ValidationError("non-finite target value");
  }
  if (true_set_) {
    std::sort(true_set_->begin(), true_set_->end());
    true_set_->erase(std::unique(true_set_->begin(), true_set_->end()),
                     true_set_->end());
    for (std::size_t j : *true_set_) {
      if (j >= x_.cols()) {
        throw ValidationError("true set index " + std::to_string(j) +
                              " out of range");
      }
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<double> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) y[i] = y_[rows[i]];
  return Dataset(names_, x_.select_rows(rows), std::move(y), true_set_);
}

// ---------------------------------------------------------------------------

std::string_view dgp_name(DgpId id) {
  switch (id) {
    case DgpId::kDS1: return "DS1";
    case DgpId::kDS2: return "DS2";
    case DgpId::kDS3: return "DS3";
    case DgpId::kDS4: return "DS4";
    case DgpId::kDS5: return "DS5";
    case DgpId::kDS6: return "DS6";
  }
  return "?";
}

DgpId parse_dgp(std::string_view name) {
  std::string upper(name);
  for (char& ch : upper) ch = static_cast<char>(std::toupper(ch));
  for (DgpId id : kAllDgps) {
    if (upper == dgp_name(id)) return id;
  }
  throw ValidationError("unknown dataset '" + std::string(name) +
                        "' (expected DS1..DS6)");
}

void validate(const DgpSpec& spec) {
  if (spec.n < 10) throw ValidationError("DgpSpec.n must be >= 10");
  if (!(spec.noise_scale >= 0.0) || !std::isfinite(spec.noise_scale)) {
    throw ValidationError("DgpSpec.noise_scale must be finite and >= 0");
  }
  if (!(spec.collinearity_noise >= 0.0) ||
      !std::isfinite(spec.collinearity_noise)) {
    throw ValidationError("DgpSpec.collinearity_noise must be finite and >= 0");
  }
}

std::size_t dgp_feature_count(DgpId id) {
  switch (id) {
    case DgpId::kDS2: return 5;
    case DgpId::kDS6: return 10;
    default: return 3;
  }
}

bool dgp_is_linear(DgpId id) { return id != DgpId::kDS4; }

namespace {

// Stream keys for draws that are not plain feature columns.
constexpr std::uint64_t kNoiseKey = 1000;
constexpr std::uint64_t kSecondaryNoiseKey = 1001;
constexpr std::uint64_t kCommonFactorKey = 1002;
constexpr std::uint64_t kPerturbationKey = 2000;  // + column index

class Sampler {
 public:
  Sampler(const DgpSpec& spec) : spec_(spec) {}

  std::vector<double> standard_normal(std::uint64_t key) const {
    Rng rng(derive_seed({spec_.seed, static_cast<std::uint64_t>(spec_.id),
                         tag(StreamTag::kColumn), key}));
    std::vector<double> out(spec_.n);
    for (double& v : out) v = rng.normal();
    return out;
  }

  std::vector<double> scaled(std::uint64_t key, double scale) const {
    auto out = standard_normal(key);
    for (double& v : out) v *= scale;
    return out;
  }

 private:
  const DgpSpec& spec_;
};

std::vector<double> add(const std::vector<double>& a,
                        const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

std::vector<std::string> default_names(std::size_t p) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("X" + std::to_string(j + 1));
  return names;
}

}  // namespace

Dataset generate(const DgpSpec& spec) {
  validate(spec);
  const Sampler s(spec);
  const double noise = spec.noise_scale;
  const double gamma = spec.collinearity_noise;
  std::vector<std::vector<double>> cols;
  std::vector<double> y;
  std::vector<std::size_t> truth;

  switch (spec.id) {
    case DgpId::kDS1: {
      auto x1 = s.standard_normal(0);
      auto x2 = add(x1, s.scaled(kPerturbationKey + 1, gamma));
      auto x3 = s.standard_normal(2);
      y = add(x1, s.scaled(kNoiseKey, noise));
      cols = {x1, x2, x3};
      truth = {0};
      break;
    }
    case DgpId::kDS2: {
      const double shared = std::sqrt(0.3);
      const double own = std::sqrt(0.7);
      auto common = s.standard_normal(kCommonFactorKey);
      for (std::size_t j = 0; j < 4; ++j) {
        auto z = s.standard_normal(j);
        for (std::size_t i = 0; i < spec.n; ++i) {
          z[i] = shared * common[i] + own * z[i];
        }
        cols.push_back(std::move(z));
      }
      cols.push_back(s.standard_normal(4));
      y = add(add(cols[0], cols[1]), s.scaled(kNoiseKey, noise));
      truth = {0, 1};
      break;
    }
    case DgpId::kDS3: {
      auto x1 = s.standard_normal(0);
      auto x2 = add(x1, s.scaled(kPerturbationKey + 1, 0.5));
      auto x3 = s.standard_normal(2);
      y = add(x2, s.scaled(kNoiseKey, noise));
      cols = {x1, x2, x3};
      truth = {1};
      break;
    }
    case DgpId::kDS4: {
      auto x1 = s.standard_normal(0);
      auto x2 = s.standard_normal(1);
      auto x3 = s.standard_normal(2);
      auto eps = s.scaled(kNoiseKey, noise);
      y.resize(spec.n);
      for (std::size_t i = 0; i < spec.n; ++i) {
        y[i] = x1[i] * x1[i] + x1[i] * x2[i] + eps[i];
      }
      cols = {x1, x2, x3};
      truth = {0, 1};
      break;
    }
    case DgpId::kDS5: {
      auto x1 = s.standard_normal(0);
      auto x2 = s.standard_normal(1);
      auto sum = add(x1, x2);
      // The composite carries its own noise draw, independent of the
      // target's, so it holds no information beyond X1 + X2.
      auto x3 = add(add(sum, s.scaled(kSecondaryNoiseKey, noise)),
                    s.scaled(kPerturbationKey + 2, gamma));
      y = add(sum, s.scaled(kNoiseKey, noise));
      cols = {x1, x2, x3};
      truth = {0, 1};
      break;
    }
    case DgpId::kDS6: {
      auto x1 = s.standard_normal(0);
      cols.push_back(x1);
      cols.push_back(add(x1, s.scaled(kPerturbationKey + 1, gamma)));
      cols.push_back(add(x1, s.scaled(kPerturbationKey + 2, gamma)));
      for (std::size_t j = 3; j < 10; ++j) cols.push_back(s.standard_normal(j));
      y = add(add(cols[0], cols[3]), s.scaled(kNoiseKey, noise));
      truth = {0, 3};
      break;
    }
  }
  const std::size_t p = cols.size();
  return Dataset(default_names(p), Matrix::from_columns(cols), std::move(y),
                 std::move(truth));
}

// ---------------------------------------------------------------------------

std::vector<Fold> split(std::size_t n, const SplitPlan& plan) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed({plan.seed, tag(StreamTag::kCvSplit)}));
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<Fold> folds;
  if (plan.kind == SplitPlan::Kind::kRandomHalves) {
    if (n < 2) throw ValidationError("RandomHalves needs at least 2 rows");
    Fold f;
    const std::size_t half = n / 2;
    f.train.assign(order.begin(), order.begin() + half);
    f.test.assign(order.begin() + half, order.end());
    std::sort(f.train.begin(), f.train.end());
    std::sort(f.test.begin(), f.test.end());
    folds.push_back(std::move(f));
    return folds;
  }

  const std::size_t k = plan.k;
  if (k < 2) throw ValidationError("KFold needs k >= 2");
  if (k > n) {
    throw ValidationError("KFold k=" + std::to_string(k) +
                          " exceeds row count " + std::to_string(n));
  }
  std::vector<std::size_t> fold_of(n);
  // Fold sizes: the first n % k folds get one extra row.
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) fold_of[order[pos++]] = f;
  }
  folds.resize(k);
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t f = 0; f < k; ++f) {
      (f == fold_of[row] ? folds[f].test : folds[f].train).push_back(row);
    }
  }
  return folds;
}

}  // namespace surplus
