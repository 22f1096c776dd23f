#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "specpred/common.hpp"

namespace specpred {

struct GbtParams {
  std::size_t n_rounds = 200;
  std::size_t max_depth = 6;
  double learning_rate = 0.1;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_hessian = 1.0;
};

struct GradHess {
  double g = 0.0;
  double h = 0.0;
};

/// First and second derivative of the logistic loss at `margin`.
GradHess logistic_grad_hess(double margin, int label);

/// Newton step -eta * G / (H + lambda).
double leaf_value(double G, double H, double lambda, double eta);

/// 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma.
double split_gain(double GL, double HL, double GR, double HR, double lambda, double gamma);

/// Mean logistic loss, computed in the overflow-free margin form.
double logistic_loss(std::span<const double> margins, std::span<const std::uint8_t> labels);

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Indices of the 1-entries of each row of a binary matrix (CSR layout).
struct SparseRows {
  std::size_t cols = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> index;

  static SparseRows from(const BinaryMatrixView& X);
  std::span<const std::uint32_t> row(std::size_t r) const {
    return std::span<const std::uint32_t>(index).subspan(offsets[r], offsets[r + 1] - offsets[r]);
  }
};

struct RegNode {
  std::int32_t feature = -1;  // x == 0 -> left, x == 1 -> right
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // leaf output (already scaled by the learning rate)

  bool is_leaf() const { return feature < 0; }
};

struct RegTree {
  std::vector<RegNode> nodes;
  double predict(std::span<const std::uint8_t> x) const;
};

struct GbtSplit {
  std::size_t feature = 0;
  double gain = 0.0;
};

/// Best split of `samples` given per-sample (g, h), scanning one cut per binary
/// feature from a gradient histogram. Ties go to the lowest feature index.
std::optional<GbtSplit> histogram_split(const SparseRows& X, std::span<const double> g, std::span<const double> h,
                                        std::span<const std::uint32_t> samples, const GbtParams& params);

struct GbtModel {
  GbtParams params;
  std::size_t feature_dim = 0;
  double base_score = 0.0;             // logit of the training positive rate, clamped to [-10, 10]
  std::optional<double> constant;      // set for single-class training labels
  std::vector<RegTree> rounds;
  std::vector<double> train_loss;      // mean loss before round 0 and after every round

  /// base_score plus the first `n_rounds` tree outputs (all rounds by default).
  double margin(std::span<const std::uint8_t> x, std::size_t n_rounds = static_cast<std::size_t>(-1)) const;
  double predict(std::span<const std::uint8_t> x) const;
  std::vector<double> predict(const BinaryMatrixView& X) const;
};

/// Sequential rounds on the logistic objective. `seed` is recorded only: the
/// fit uses no row or column subsampling.
GbtModel fit_gbt(const BinaryMatrixView& X, const SparseRows& sparse, std::span<const std::uint8_t> y,
                 const GbtParams& params, std::uint64_t seed = 0);
GbtModel fit_gbt(const BinaryMatrixView& X, std::span<const std::uint8_t> y, const GbtParams& params,
                 std::uint64_t seed = 0);

struct MultiOutputGbt {
  std::vector<GbtModel> per_bin;
  std::size_t feature_dim = 0;
  std::uint64_t seed = 0;

  std::vector<double> predict(const BinaryMatrixView& X) const;  // N x F
};

/// One model per bin, bins fitted in parallel.
MultiOutputGbt fit_gbt_multi(const BinaryMatrixView& X, const BinaryMatrixView& Y, const GbtParams& params,
                             std::uint64_t seed = 0);

namespace reference {
MultiOutputGbt fit_gbt_multi(const BinaryMatrixView& X, const BinaryMatrixView& Y, const GbtParams& params,
                             std::uint64_t seed = 0);
}  // namespace reference

}  // namespace specpred
