#ifndef SURPLUS_EVALUATION_H_
#define SURPLUS_EVALUATION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "surplus/dataset.h"
#include "surplus/importance.h"
#include "surplus/shapley.h"

namespace surplus {

struct GroundTruth {
  enum class Kind { kWeightVector, kTrueSet };
  Kind kind = Kind::kTrueSet;
  std::vector<double> weights;         // kWeightVector
  std::vector<std::size_t> true_set;   // kTrueSet
};

struct MetricScore {
  double score = 0.0;
  bool degenerate = false;  // a vector was zero after clipping
};

// Angle in radians between the two vectors after clipping negatives to 0
// (unless clip is false). A zero vector scores pi/2 and is flagged.
MetricScore angle_score(std::span<const double> phi,
                        std::span<const double> truth, bool clip = true);

// Share of (clipped) weight placed on the true set. All-zero phi scores 0
// and is flagged.
MetricScore selective_ratio(std::span<const double> phi,
                            std::span<const std::size_t> true_set,
                            bool clip = true);

// ---------------------------------------------------------------------------
// Ground truth for simulated data.

struct GroundTruthOptions {
  std::size_t n = 20000;
  std::size_t folds = 5;
  // Finite values keep only coalitions within this relative margin of the
  // best one (the rest are worth 0). Default: the plain refit game.
  double relative_cutoff = std::numeric_limits<double>::infinity();
  int jobs = 1;
};

struct GroundTruthOracle {
  GroundTruth weights;   // Shapley vector of the enumerated game
  GroundTruth true_set;  // the generator's true set
  std::map<CoalitionMask, double> losses;  // every non-empty mask
  double baseline_loss = 0.0;              // empty mask (mean predictor)
  double cutoff = 0.0;
  Game game{1, {0.0, 0.0}};
};

// Enumerates all 2^p refit losses (OLS for linear generators, GBT for DS4)
// on a large sample and returns the exact Shapley vector of the surplus game
// v(c) = L(empty) - L(c). Throws SizeError when p exceeds 12.
GroundTruthOracle derive_ground_truth_oracle(const DgpSpec& spec,
                                             const GroundTruthOptions& opts = {});
GroundTruth derive_ground_truth(const DgpSpec& spec,
                                const GroundTruthOptions& opts = {});

// ---------------------------------------------------------------------------
// Split consistency on real (or any) data.

using MethodRunner = std::function<ImportanceReport(const Dataset&)>;

struct ConsistencyResult {
  double mean_angle = 0.0;
  std::vector<double> trial_angles;
  std::vector<std::string> skipped;  // one message per failed trial
};

// Per trial, splits ds into random halves, runs the method on both and
// scores the angle between the two importance vectors.
ConsistencyResult split_consistency(const Dataset& ds, const MethodRunner& run,
                                    std::size_t trials, std::uint64_t seed,
                                    bool clip = true);
ConsistencyResult split_consistency(const Dataset& ds, const MethodConfig& cfg,
                                    std::size_t trials, std::uint64_t seed,
                                    bool clip = true);

// ---------------------------------------------------------------------------
// Method comparison tables.

enum class MetricKind { kAngle, kSelectiveRatio, kConsistencyAngle };

std::string_view metric_name(MetricKind kind);
bool lower_is_better(MetricKind kind);

struct ComparisonTable {
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  std::vector<MetricKind> metric;        // per dataset column
  std::vector<std::size_t> seed_count;   // per dataset column
  std::vector<std::vector<double>> cells;  // [method][dataset]
};

// Throws ValidationError when the grid is incomplete or ragged.
void validate(const ComparisonTable& table);

struct RankSummary {
  std::string method;
  double mean_rank = 0.0;
  double best = 0.0;
  double worst = 0.0;
};

// Ranks methods within each column (1 = best, ties share the mean rank) and
// summarizes per method.
std::vector<RankSummary> rank_summary(const ComparisonTable& table);

nlohmann::json table_to_json(const ComparisonTable& table);
ComparisonTable table_from_json(const nlohmann::json& j);
std::string format_table(const ComparisonTable& table);

// The metric used for each simulated dataset: angle against the oracle
// weights for DS1, DS5, DS6; selective ratio for DS2, DS3, DS4.
MetricKind metric_for(DgpId id);

struct CompareConfig {
  std::vector<DgpId> datasets{std::begin(kAllDgps), std::end(kAllDgps)};
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  std::size_t n = 2000;
  std::size_t seeds = 10;
  std::uint64_t seed = 0;
  double noise_scale = 1.0;
  double collinearity_noise = 0.05;
  MethodConfig method;  // shared settings; method and seed are overridden
  GroundTruthOptions truth;
  bool clip = true;
  int jobs = 1;
};

struct ComparisonRun {
  ComparisonTable table;
  // scores[method][dataset][seed]
  std::vector<std::vector<std::vector<double>>> scores;
  // phi[method][dataset][seed], for scoring under other metrics
  std::vector<std::vector<std::vector<std::vector<double>>>> phi;
  std::vector<GroundTruthOracle> oracles;  // per dataset
};

// Data seed for replicate s of dataset id.
std::uint64_t replicate_seed(std::uint64_t base, DgpId id, std::size_t s);

ComparisonRun run_comparison(const CompareConfig& cfg);

}  // namespace surplus

#endif  // SURPLUS_EVALUATION_H_
