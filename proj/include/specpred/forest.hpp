#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "specpred/common.hpp"

namespace specpred {

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 12;
  std::size_t min_samples_leaf = 5;
  std::size_t mtry = 0;  // 0 selects ceil(sqrt(feature_dim))

  std::size_t resolved_mtry(std::size_t feature_dim) const;
};

/// Node of a classification tree over binary features. Internal nodes send
/// x[feature] == 0 to `left` and x[feature] == 1 to `right`; every node keeps
/// the class counts of the samples that reached it during training.
struct TreeNode {
  std::int32_t feature = -1;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t n0 = 0;
  std::uint32_t n1 = 0;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  /// Class-1 fraction n1 / (n0 + n1) of the leaf reached by x.
  double predict(std::span<const std::uint8_t> x) const;
  std::size_t depth() const;
};

struct SplitChoice {
  std::size_t feature = 0;
  double impurity_decrease = 0.0;
};

/// Candidate feature with the largest Gini impurity decrease over `samples`
/// (indices into X, duplicates allowed). Ties go to the lowest feature index.
/// Returns nothing when no candidate strictly reduces impurity or every
/// reducing candidate leaves a child with fewer than `min_child` samples.
std::optional<SplitChoice> best_split(const BinaryMatrixView& X, std::span<const std::uint8_t> y,
                                      std::span<const std::uint32_t> samples,
                                      std::span<const std::size_t> candidates, std::size_t min_child = 1);

/// Grows one tree on `sample`; draws `mtry` candidate features per node from rng.
DecisionTree fit_tree(const BinaryMatrixView& X, std::span<const std::uint8_t> y,
                      std::span<const std::uint32_t> sample, const ForestParams& params, Rng& rng);

struct ForestModel {
  std::vector<DecisionTree> trees;
  ForestParams params;
  std::uint64_t seed = 0;
  std::size_t feature_dim = 0;

  /// Mean over trees of the leaf class-1 fraction.
  double predict_proba(std::span<const std::uint8_t> x) const;
  std::vector<double> predict_proba(const BinaryMatrixView& X) const;
};

/// Tree t uses the stream keyed by (seed, stream, t): a size-N bootstrap, then fit_tree.
ForestModel fit_forest(const BinaryMatrixView& X, std::span<const std::uint8_t> y, const ForestParams& params,
                       std::uint64_t seed, std::uint64_t stream = 0);

/// One independent forest per output bin, all reading the same feature matrix.
struct MultiOutputForest {
  std::vector<ForestModel> per_bin;
  std::size_t feature_dim = 0;

  /// N x F scores, row-major.
  std::vector<double> predict_proba(const BinaryMatrixView& X) const;
};

/// Parallel over (bin, tree) units. Bin f's forest equals fit_forest(X, y_f, params, seed, f).
MultiOutputForest fit_forest_multi(const BinaryMatrixView& X, const BinaryMatrixView& Y, const ForestParams& params,
                                   std::uint64_t seed);

namespace reference {
MultiOutputForest fit_forest_multi(const BinaryMatrixView& X, const BinaryMatrixView& Y, const ForestParams& params,
                                   std::uint64_t seed);
}  // namespace reference

}  // namespace specpred
