#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "corrml/matrix.hpp"
#include "corrml/rng.hpp"

namespace corrml::detail {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf mean, or class index for classification
};

struct TreeConfig {
  int max_depth = 0;  // <= 0 means unlimited
  bool classification = false;
  int n_classes = 0;
};

// CART with variance-reduction (regression) or Gini (classification) splits.
// Thresholds sit at midpoints between consecutive distinct values; equal
// gains are broken toward the lowest threshold, then by column contents, so
// the fit does not depend on how the features happen to be ordered.
class Tree {
 public:
  // rows empty means fit on all rows. When rng is given and max_features is
  // positive and below p, each node considers a fresh random feature subset.
  void fit(const Matrix& x, const std::vector<double>& y,
           const TreeConfig& cfg, std::vector<std::size_t> rows = {},
           Rng* rng = nullptr, std::size_t max_features = 0);

  double predict_row(std::span<const double> row) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::vector<double>& gains() const { return gains_; }
  std::size_t n_features() const { return gains_.size(); }

  void restore(std::vector<TreeNode> nodes, std::vector<double> gains);

 private:
  int build(const Matrix& x, const std::vector<double>& y,
            const TreeConfig& cfg, Rng* rng, std::size_t max_features,
            std::vector<std::size_t>& rows, int depth);

  std::vector<TreeNode> nodes_;
  std::vector<double> gains_;
};

}  // namespace corrml::detail
