#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "specpred/common.hpp"
#include "specpred/occupancy.hpp"

namespace specpred {

/// Sliding-window examples over an occupancy grid.
///
/// Feature row n holds minutes origin-K .. origin-1, time-major: entry k*F + f is
/// CO(f, origin - K + k). The sequence view (n, k, f) reads the same bytes.
struct WindowedDataset {
  std::size_t history = 0;  // K
  std::size_t bins = 0;     // F
  std::size_t examples = 0; // N
  std::vector<std::uint8_t> features;  // N x K*F
  std::vector<std::uint8_t> targets;   // N x F
  std::vector<std::int64_t> origin_minutes;

  std::size_t feature_dim() const { return history * bins; }

  BinaryMatrixView feature_view() const { return {features, examples, feature_dim()}; }
  BinaryMatrixView target_view() const { return {targets, examples, bins}; }

  std::span<const std::uint8_t> row(std::size_t n) const {
    return std::span<const std::uint8_t>(features).subspan(n * feature_dim(), feature_dim());
  }
  std::uint8_t seq(std::size_t n, std::size_t k, std::size_t f) const {
    return features[n * feature_dim() + k * bins + f];
  }
  std::span<const std::uint8_t> target(std::size_t n) const {
    return std::span<const std::uint8_t>(targets).subspan(n * bins, bins);
  }

  /// Labels of one bin across all examples.
  std::vector<std::uint8_t> bin_labels(std::size_t f) const;

  /// Keeps examples whose origin minute is >= min_origin.
  WindowedDataset from_origin(std::int64_t min_origin) const;
};

/// One example per t in [K, T). Requires K >= 1 and T > K.
WindowedDataset build_windows(const OccupancyGrid& grid, std::size_t history);

/// First floor(fraction * T) minutes train, the rest test. Both sides must keep
/// more than `history` minutes so each can be windowed on its own.
std::pair<OccupancyGrid, OccupancyGrid> chronological_split(const OccupancyGrid& grid, double train_fraction,
                                                            std::size_t history = 1);

}  // namespace specpred
