#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "specpred/dataset.hpp"
#include "specpred/occupancy.hpp"

namespace specpred {

/// Per-bin smoothed first-order transition probabilities.
struct TransitionModel {
  struct Bin {
    std::array<std::uint64_t, 4> counts{};  // n00, n01, n10, n11
    double p00 = 0.5, p01 = 0.5, p10 = 0.5, p11 = 0.5;
  };
  double alpha = 1.0;
  std::vector<Bin> bins;
  std::vector<std::uint8_t> last_train_state;
};

/// p(a->b) = (n(a->b) + alpha) / (n(a->0) + n(a->1) + 2 alpha).
TransitionModel fit_markov(const OccupancyGrid& train, double alpha = 1.0);

/// Score p01 where the previous state is 0, p11 where it is 1.
std::vector<double> predict_markov(const TransitionModel& model, std::span<const std::uint8_t> prev_state);

/// Scores for every window, using the window's last minute as previous state.
std::vector<double> markov_scores(const TransitionModel& model, const WindowedDataset& ds);

/// Scores for every minute of a test stream (minute-major, T x F). The first
/// minute is conditioned on the model's last training state.
std::vector<double> markov_stream_scores(const TransitionModel& model, const OccupancyGrid& test);

/// Hard decision: 1 iff score > tau.
inline int decide(double score, double tau) { return score > tau ? 1 : 0; }

}  // namespace specpred
