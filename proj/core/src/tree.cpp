#include "tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "corrml/errors.hpp"

namespace corrml::detail {
namespace {

constexpr double kMinGain = 1e-12;

struct BestSplit {
  double gain = kMinGain;
  int feature = -1;
  double threshold = 0.0;
  std::size_t left_count = 0;
};

}  // namespace

void Tree::fit(const Matrix& x, const std::vector<double>& y,
               const TreeConfig& cfg, std::vector<std::size_t> rows, Rng* rng,
               std::size_t max_features) {
  if (x.rows() != y.size()) throw DataError("tree: feature/target mismatch");
  if (x.rows() == 0) throw DataError("tree: empty training data");
  nodes_.clear();
  gains_.assign(x.cols(), 0.0);
  if (rows.empty()) {
    rows.resize(x.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }
  build(x, y, cfg, rng, max_features, rows, 0);
}

int Tree::build(const Matrix& x, const std::vector<double>& y,
                const TreeConfig& cfg, Rng* rng, std::size_t max_features,
                std::vector<std::size_t>& rows, int depth) {
  const std::size_t n = rows.size();
  const std::size_t p = x.cols();
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();

  double leaf_value;
  bool pure;
  std::vector<std::size_t> counts;
  if (cfg.classification) {
    counts.assign(static_cast<std::size_t>(cfg.n_classes), 0);
    for (std::size_t r : rows) ++counts[static_cast<std::size_t>(y[r])];
    std::size_t best = 0;
    for (std::size_t k = 1; k < counts.size(); ++k)
      if (counts[k] > counts[best]) best = k;
    leaf_value = static_cast<double>(best);
    pure = counts[best] == n;
  } else {
    double sum = 0.0;
    for (std::size_t r : rows) sum += y[r];
    leaf_value = sum / static_cast<double>(n);
    pure = std::all_of(rows.begin(), rows.end(),
                       [&](std::size_t r) { return y[r] == y[rows[0]]; });
  }
  nodes_[id].value = leaf_value;

  bool depth_ok = cfg.max_depth <= 0 || depth < cfg.max_depth;
  if (pure || n < 2 || !depth_ok) return id;

  std::vector<std::size_t> candidates(p);
  std::iota(candidates.begin(), candidates.end(), std::size_t{0});
  if (rng != nullptr && max_features > 0 && max_features < p) {
    for (std::size_t k = 0; k < max_features; ++k) {
      std::size_t j = k + static_cast<std::size_t>(rng->next_below(
                              static_cast<std::uint64_t>(p - k)));
      std::swap(candidates[k], candidates[j]);
    }
    candidates.resize(max_features);
    std::sort(candidates.begin(), candidates.end());
  }

  BestSplit best;
  // Tie-breaking must not depend on column order, or reordering features
  // would reshuffle gain attribution: equal gains fall back to the lower
  // threshold, then to lexicographic column contents.
  auto column_less = [&](std::size_t fa, std::size_t fb) {
    for (std::size_t r : rows) {
      double va = x(r, fa), vb = x(r, fb);
      if (va != vb) return va < vb;
    }
    return false;
  };
  auto take = [&](double gain, double thr, std::size_t f) {
    if (gain > best.gain) return true;
    if (gain < best.gain || best.feature < 0) return false;
    if (thr != best.threshold) return thr < best.threshold;
    return column_less(f, static_cast<std::size_t>(best.feature));
  };
  std::vector<std::size_t> order(rows);
  for (std::size_t f : candidates) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return x(a, f) < x(b, f);
    });

    if (cfg.classification) {
      std::vector<std::size_t> left_counts(counts.size(), 0);
      double parent_score = 0.0;
      for (std::size_t c : counts)
        parent_score += static_cast<double>(c) * static_cast<double>(c);
      parent_score /= static_cast<double>(n);

      for (std::size_t i = 0; i + 1 < n; ++i) {
        ++left_counts[static_cast<std::size_t>(y[order[i]])];
        double lo = x(order[i], f), hi = x(order[i + 1], f);
        if (lo == hi) continue;
        double nl = static_cast<double>(i + 1);
        double nr = static_cast<double>(n - i - 1);
        double sl = 0.0, sr = 0.0;
        for (std::size_t k = 0; k < counts.size(); ++k) {
          double cl = static_cast<double>(left_counts[k]);
          double cr = static_cast<double>(counts[k] - left_counts[k]);
          sl += cl * cl;
          sr += cr * cr;
        }
        double gain = sl / nl + sr / nr - parent_score;
        double thr = 0.5 * (lo + hi);
        if (thr >= hi) thr = lo;  // midpoint can round up to hi
        if (take(gain, thr, f)) best = {gain, static_cast<int>(f), thr, i + 1};
      }
    } else {
      double total = 0.0, total_sq = 0.0;
      for (std::size_t r : rows) {
        total += y[r];
        total_sq += y[r] * y[r];
      }
      double parent_sse = total_sq - total * total / static_cast<double>(n);

      double lsum = 0.0, lsq = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        double v = y[order[i]];
        lsum += v;
        lsq += v * v;
        double lo = x(order[i], f), hi = x(order[i + 1], f);
        if (lo == hi) continue;
        double nl = static_cast<double>(i + 1);
        double nr = static_cast<double>(n - i - 1);
        double rsum = total - lsum, rsq = total_sq - lsq;
        double sse_l = lsq - lsum * lsum / nl;
        double sse_r = rsq - rsum * rsum / nr;
        double gain = parent_sse - sse_l - sse_r;
        double thr = 0.5 * (lo + hi);
        if (thr >= hi) thr = lo;
        if (take(gain, thr, f)) best = {gain, static_cast<int>(f), thr, i + 1};
      }
    }
  }

  if (best.feature < 0) return id;

  std::vector<std::size_t> left_rows, right_rows;
  left_rows.reserve(best.left_count);
  right_rows.reserve(n - best.left_count);
  for (std::size_t r : rows) {
    if (x(r, static_cast<std::size_t>(best.feature)) <= best.threshold)
      left_rows.push_back(r);
    else
      right_rows.push_back(r);
  }
  if (left_rows.empty() || right_rows.empty()) return id;

  gains_[static_cast<std::size_t>(best.feature)] += best.gain;
  nodes_[id].feature = best.feature;
  nodes_[id].threshold = best.threshold;
  int left = build(x, y, cfg, rng, max_features, left_rows, depth + 1);
  int right = build(x, y, cfg, rng, max_features, right_rows, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double Tree::predict_row(std::span<const double> row) const {
  if (nodes_.empty()) throw NumericError("tree: not fitted");
  int i = 0;
  while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
    const TreeNode& nd = nodes_[static_cast<std::size_t>(i)];
    i = row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left
                                                                  : nd.right;
  }
  return nodes_[static_cast<std::size_t>(i)].value;
}

void Tree::restore(std::vector<TreeNode> nodes, std::vector<double> gains) {
  nodes_ = std::move(nodes);
  gains_ = std::move(gains);
}

}  // namespace corrml::detail
