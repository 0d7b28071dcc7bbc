#include "surplus/gbt.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "surplus/random.h"

namespace surplus {
namespace {

// Quantile bucketing of one feature over the training rows.
struct BinnedFeature {
  std::size_t column = 0;
  std::vector<double> thresholds;  // bin b holds values in (t[b-1], t[b]]
  std::vector<std::uint8_t> bins;  // per training row
};

BinnedFeature bin_feature(const Matrix& x, std::size_t column,
                          std::span<const std::size_t> rows, int max_bins) {
  BinnedFeature out;
  out.column = column;
  auto col = x.col(column);
  const std::size_t m = rows.size();
  std::vector<double> sorted(m);
  for (std::size_t i = 0; i < m; ++i) sorted[i] = col[rows[i]];
  std::sort(sorted.begin(), sorted.end());

  const std::size_t bins = static_cast<std::size_t>(max_bins);
  std::size_t distinct = m == 0 ? 0 : 1;
  for (std::size_t i = 1; i < m; ++i) distinct += sorted[i] != sorted[i - 1];

  if (distinct <= bins) {
    for (std::size_t i = 1; i < m; ++i) {
      if (sorted[i] != sorted[i - 1]) {
        out.thresholds.push_back(sorted[i - 1] + (sorted[i] - sorted[i - 1]) / 2);
      }
    }
  } else {
    // Equal-mass cut points, moved forward past runs of equal values.
    for (std::size_t b = 1; b < bins; ++b) {
      std::size_t pos = b * m / bins;
      while (pos < m && pos > 0 && sorted[pos] == sorted[pos - 1]) ++pos;
      if (pos == 0 || pos >= m) continue;
      const double t = sorted[pos - 1] + (sorted[pos] - sorted[pos - 1]) / 2;
      if (out.thresholds.empty() || t > out.thresholds.back()) {
        out.thresholds.push_back(t);
      }
    }
  }
  out.bins.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double v = col[rows[i]];
    out.bins[i] = static_cast<std::uint8_t>(
        std::lower_bound(out.thresholds.begin(), out.thresholds.end(), v) -
        out.thresholds.begin());
  }
  return out;
}

struct SplitCandidate {
  double gain = 0.0;
  std::size_t feature = 0;  // index into the binned feature list
  std::size_t bin = 0;      // left child takes bins <= bin
};

struct Bin {
  double sum = 0.0;
  std::size_t count = 0;
};

}  // namespace

void GbtPredictor::predict(const Matrix& x, std::span<const std::size_t> rows,
                           std::span<double> out) const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    double acc = base_score_;
    for (const Tree& tree : trees_) {
      int node = 0;
      while (tree[node].feature >= 0) {
        const TreeNode& nd = tree[node];
        node = x(r, static_cast<std::size_t>(nd.feature)) <= nd.threshold
                   ? nd.left
                   : nd.right;
      }
      acc += tree[node].value;
    }
    out[i] = acc;
  }
}

std::shared_ptr<const GbtPredictor> fit_gbt(
    const GbtParams& params, std::uint64_t seed, const Matrix& x,
    std::span<const double> y, std::span<const std::size_t> rows,
    std::span<const std::size_t> columns) {
  const std::size_t m = rows.size();
  const std::size_t n_features = columns.size();

  std::vector<BinnedFeature> features;
  features.reserve(n_features);
  for (std::size_t c : columns) {
    features.push_back(bin_feature(x, c, rows, params.max_bins));
  }

  std::vector<double> target(m);
  for (std::size_t i = 0; i < m; ++i) target[i] = y[rows[i]];
  const double base =
      std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(m);
  std::vector<double> pred(m, base);
  std::vector<double> residual(m);
  std::vector<double> gain(x.cols(), 0.0);
  std::vector<double> history;
  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(params.n_rounds));

  Rng rng(derive_seed({seed, tag(StreamTag::kFit)}));
  const std::size_t sample_size =
      params.subsample >= 1.0
          ? m
          : std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(params.subsample * m)));
  const std::size_t min_leaf =
      static_cast<std::size_t>(std::max(params.min_samples_leaf, 1));

  // Row-major bin codes so one pass over a row touches every feature.
  std::vector<std::size_t> offset(n_features + 1, 0);
  for (std::size_t f = 0; f < n_features; ++f) {
    offset[f + 1] = offset[f] + features[f].thresholds.size() + 1;
  }
  const std::size_t width = offset[n_features];
  std::vector<std::uint32_t> code(m * n_features);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t f = 0; f < n_features; ++f) {
      code[i * n_features + f] =
          static_cast<std::uint32_t>(offset[f] + features[f].bins[i]);
    }
  }

  std::vector<double> inv(m + 1, 0.0);
  for (std::size_t c = 1; c <= m; ++c) inv[c] = 1.0 / static_cast<double>(c);

  std::vector<std::size_t> sample(m);
  std::iota(sample.begin(), sample.end(), 0);
  std::vector<int> node_of(m);
  std::vector<int> slot(m);
  std::vector<Bin> hist, parent_hist;

  for (int round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < m; ++i) residual[i] = target[i] - pred[i];
    if (sample_size < m) {
      sample = rng.sample_without_replacement(m, sample_size);
    }

    Tree tree(1);
    for (std::size_t i : sample) node_of[i] = 0;
    std::vector<int> frontier = {0};
    // For each frontier slot: parent slot in the previous level and sibling
    // slot; -1 at the root.
    std::vector<int> parent_slot = {-1};

    for (int depth = 0; depth < params.max_depth && !frontier.empty();
         ++depth) {
      const std::size_t n_slots = frontier.size();
      std::vector<int> slot_of(tree.size(), -1);
      for (std::size_t s = 0; s < n_slots; ++s) {
        slot_of[frontier[s]] = static_cast<int>(s);
      }
      std::vector<double> node_sum(n_slots, 0.0);
      std::vector<double> node_sq(n_slots, 0.0);
      std::vector<std::size_t> node_count(n_slots, 0);
      // Rows sitting in finished leaves have no slot.
      for (std::size_t i : sample) {
        const int s = slot_of[node_of[i]];
        slot[i] = s;
        if (s < 0) continue;
        node_sum[s] += residual[i];
        node_sq[s] += residual[i] * residual[i];
        ++node_count[s];
      }

      // Siblings come in pairs (2t, 2t+1). Only the smaller one is
      // accumulated; the other is its parent minus it.
      std::vector<char> direct(n_slots, 1);
      for (std::size_t s = 0; s + 1 < n_slots && parent_slot[s] >= 0; s += 2) {
        if (node_count[s] <= node_count[s + 1]) {
          direct[s + 1] = 0;
        } else {
          direct[s] = 0;
        }
      }
      hist.assign(n_slots * width, Bin{});
      for (std::size_t i : sample) {
        const int s = slot[i];
        if (s < 0 || !direct[s]) continue;
        Bin* h = hist.data() + static_cast<std::size_t>(s) * width;
        const std::uint32_t* c = code.data() + i * n_features;
        const double r = residual[i];
        for (std::size_t f = 0; f < n_features; ++f) {
          h[c[f]].sum += r;
          ++h[c[f]].count;
        }
      }
      for (std::size_t s = 0; s < n_slots; ++s) {
        if (direct[s]) continue;
        const std::size_t sib = s ^ 1;
        const Bin* ph = parent_hist.data() +
                        static_cast<std::size_t>(parent_slot[s]) * width;
        const Bin* sh = hist.data() + sib * width;
        Bin* h = hist.data() + s * width;
        for (std::size_t b = 0; b < width; ++b) {
          h[b].sum = ph[b].sum - sh[b].sum;
          h[b].count = ph[b].count - sh[b].count;
        }
      }

      std::vector<SplitCandidate> best(n_slots);
      for (std::size_t s = 0; s < n_slots; ++s) {
        const double total = node_sum[s];
        const std::size_t count = node_count[s];
        if (count < 2 * min_leaf) continue;
        const double parent = total * total / static_cast<double>(count);
        for (std::size_t f = 0; f < n_features; ++f) {
          const Bin* h = hist.data() + s * width + offset[f];
          const std::size_t n_bins = offset[f + 1] - offset[f];
          double left_sum = 0.0;
          std::size_t left_count = 0;
          for (std::size_t b = 0; b + 1 < n_bins; ++b) {
            left_sum += h[b].sum;
            left_count += h[b].count;
            if (left_count < min_leaf) continue;
            const std::size_t right_count = count - left_count;
            if (right_count < min_leaf) break;
            const double right_sum = total - left_sum;
            const double children = left_sum * left_sum * inv[left_count] +
                                    right_sum * right_sum * inv[right_count];
            const double g = children - parent;
            // Ignore gains at rounding level of the node's residual energy.
            if (g > best[s].gain && g > 1e-12 * node_sq[s]) {
              best[s] = {g, f, b};
            }
          }
        }
      }

      std::vector<int> next;
      std::vector<int> next_parent;
      for (std::size_t s = 0; s < n_slots; ++s) {
        if (best[s].gain <= 0.0) continue;
        const int id = frontier[s];
        const BinnedFeature& bf = features[best[s].feature];
        const int left = static_cast<int>(tree.size());
        tree.push_back({});
        tree.push_back({});
        tree[id].feature = static_cast<int>(bf.column);
        tree[id].threshold = bf.thresholds[best[s].bin];
        tree[id].left = left;
        tree[id].right = left + 1;
        gain[bf.column] += best[s].gain;
        next.push_back(left);
        next.push_back(left + 1);
        next_parent.push_back(static_cast<int>(s));
        next_parent.push_back(static_cast<int>(s));
      }
      if (next.empty()) break;
      for (std::size_t i : sample) {
        const int s = slot[i];
        if (s < 0) continue;
        const int id = node_of[i];
        if (tree[id].feature < 0) continue;
        const auto& cand = best[static_cast<std::size_t>(s)];
        node_of[i] = features[cand.feature].bins[i] <= cand.bin
                         ? tree[id].left
                         : tree[id].right;
      }
      frontier = std::move(next);
      parent_slot = std::move(next_parent);
      std::swap(hist, parent_hist);
    }

    // Leaf values: shrunken mean residual of the sampled rows in the leaf.
    std::vector<double> leaf_sum(tree.size(), 0.0);
    std::vector<std::size_t> leaf_count(tree.size(), 0);
    for (std::size_t i : sample) {
      leaf_sum[node_of[i]] += residual[i];
      ++leaf_count[node_of[i]];
    }
    for (std::size_t id = 0; id < tree.size(); ++id) {
      if (tree[id].feature < 0 && leaf_count[id] > 0) {
        tree[id].value = params.learning_rate * leaf_sum[id] /
                         static_cast<double>(leaf_count[id]);
      }
    }

    // Update every training row, sampled or not, by routing on the bins.
    double sse = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      int node = 0;
      while (tree[node].feature >= 0) {
        const TreeNode& nd = tree[node];
        node = x(rows[i], static_cast<std::size_t>(nd.feature)) <= nd.threshold
                   ? nd.left
                   : nd.right;
      }
      pred[i] += tree[node].value;
      const double r = target[i] - pred[i];
      sse += r * r;
    }
    history.push_back(sse / static_cast<double>(m));
    trees.push_back(std::move(tree));
  }

  return std::make_shared<GbtPredictor>(base, std::move(trees), std::move(gain),
                                        std::move(history));
}

}  // namespace surplus
