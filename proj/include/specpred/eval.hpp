#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specpred/common.hpp"
#include "specpred/occupancy.hpp"

namespace specpred {

/// Scores and ground truth for N prediction minutes over F bins, row-major N x F.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t bins = 0;
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  std::vector<std::int64_t> origin_minutes;
  std::string method;
  std::size_t history = 0;

  void validate() const;
  double score(std::size_t n, std::size_t f) const { return scores[n * bins + f]; }
  std::uint8_t label(std::size_t n, std::size_t f) const { return labels[n * bins + f]; }

  /// Same rows, only the listed bins (in the listed order).
  ScoreMatrix select_bins(std::span<const std::size_t> keep) const;
  /// Rows whose origin minute is >= min_origin.
  ScoreMatrix from_origin(std::int64_t min_origin) const;
};

/// Fraction of all N*F cells where (score > tau) equals the label.
double average_accuracy(const ScoreMatrix& sm, double tau = 0.5);

std::vector<double> per_bin_accuracy(const ScoreMatrix& sm, double tau = 0.5);

struct BalancedAccuracy {
  double mean = 0.0;
  std::vector<double> per_bin;
  std::vector<std::size_t> single_class_bins;  // undefined rate set to 1
};

/// Per bin (TPR + TNR) / 2, averaged over bins.
BalancedAccuracy balanced_accuracy(const ScoreMatrix& sm, double tau = 0.5);

struct Calibration {
  double tau = 0.0;
  double achieved_pfa = 0.0;
};

/// Smallest threshold among {0, observed scores, 1} whose pooled false-alarm
/// rate P(score >= tau | idle) is at most target. If even tau = 1 exceeds the
/// target, returns the next double above 1 (no cell is declared occupied).
Calibration calibrate_threshold(const ScoreMatrix& sm, double target_pfa);

/// One threshold per bin, for analysis only. Bins without idle cells get tau = 0.
std::vector<Calibration> calibrate_threshold_per_bin(const ScoreMatrix& sm, double target_pfa);

struct OperatingPoint {
  double target_pfa = 0.0;
  double tau = 0.0;
  double achieved_pfa = 0.0;
  double pd = 0.0;
};

/// Detection probability P(score >= tau | occupied) at the calibrated tau.
OperatingPoint pd_at_pfa(const ScoreMatrix& sm, double target_pfa);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double pearson_r = 0.0;
};

/// Ordinary least squares of accuracy on transition rate plus Pearson r.
LinearFit accuracy_vs_dynamics(std::span<const double> per_bin_accuracy, std::span<const double> transition_rates);

struct EvalOptions {
  std::vector<double> pfa_targets{0.01, 0.05};
  double tau = 0.5;
  /// Classes from the full grid; when absent every bin counts as dynamic.
  std::vector<DynamicsClass> classes;
  /// Transition counts for the regression; when absent they are counted on the labels.
  std::vector<std::size_t> transition_counts;
};

struct EvalReport {
  std::string method;
  std::size_t history = 0;
  std::size_t rows = 0;
  std::size_t bins = 0;
  double average_accuracy = 0.0;
  BalancedAccuracy balanced;
  std::vector<OperatingPoint> pd_all;
  std::vector<OperatingPoint> pd_dynamic;  // empty when no bin is dynamic or the subset is single-class
  std::optional<double> average_accuracy_dynamic;
  std::optional<double> balanced_accuracy_dynamic;
  std::vector<double> per_bin_accuracy;
  std::vector<std::size_t> transition_rate;
  std::optional<LinearFit> fit;
  std::vector<DynamicsClass> classes;
};

EvalReport evaluate(const ScoreMatrix& sm, const EvalOptions& opt = {});

}  // namespace specpred
