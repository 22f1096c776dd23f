#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "specpred/common.hpp"
#include "specpred/dataset.hpp"

namespace specpred {

/// Single-layer LSTM with a dense readout, all parameters in one flat buffer.
///
/// Layout (row-major blocks, gate order i, f, o, g inside every 4H-wide row):
///   Wx  inputs x 4H    input weights, row j multiplies x_j
///   Wh  hidden x 4H    recurrent weights
///   b   4H
///   Wy  inputs x hidden readout, one row per output bin
///   by  inputs
struct LstmWeights {
  std::size_t inputs = 0;  // F
  std::size_t hidden = 0;  // H
  std::vector<double> params;

  LstmWeights() = default;
  LstmWeights(std::size_t inputs, std::size_t hidden);

  static std::size_t param_count(std::size_t inputs, std::size_t hidden);

  std::size_t wx_offset() const { return 0; }
  std::size_t wh_offset() const { return inputs * 4 * hidden; }
  std::size_t b_offset() const { return wh_offset() + hidden * 4 * hidden; }
  std::size_t wy_offset() const { return b_offset() + 4 * hidden; }
  std::size_t by_offset() const { return wy_offset() + inputs * hidden; }

  double& wx(std::size_t j, std::size_t q) { return params[wx_offset() + j * 4 * hidden + q]; }
  double& wh(std::size_t m, std::size_t q) { return params[wh_offset() + m * 4 * hidden + q]; }
  double& b(std::size_t q) { return params[b_offset() + q]; }
  double& wy(std::size_t o, std::size_t m) { return params[wy_offset() + o * hidden + m]; }
  double& by(std::size_t o) { return params[by_offset() + o]; }
  double wx(std::size_t j, std::size_t q) const { return params[wx_offset() + j * 4 * hidden + q]; }
  double wh(std::size_t m, std::size_t q) const { return params[wh_offset() + m * 4 * hidden + q]; }
  double b(std::size_t q) const { return params[b_offset() + q]; }
  double wy(std::size_t o, std::size_t m) const { return params[wy_offset() + o * hidden + m]; }
  double by(std::size_t o) const { return params[by_offset() + o]; }

  bool all_finite() const;
};

enum class Optimizer { sgd, adam };

struct LstmConfig {
  std::size_t hidden_size = 64;
  std::size_t epochs = 10;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adam;
  double grad_clip_norm = 5.0;  // <= 0 disables clipping
  std::uint64_t seed = 20240601;
};

/// Uniform(+-1/sqrt(H)) weights, zero biases except forget-gate biases of 1.
LstmWeights init_weights(std::size_t inputs, std::size_t hidden, std::uint64_t seed);

struct CellState {
  std::vector<double> h;
  std::vector<double> c;
};

/// One LSTM step: returns (h', c').
CellState cell_forward(std::span<const double> x, std::span<const double> h, std::span<const double> c,
                       const LstmWeights& w);

/// Runs the cell over a K x F binary sequence (time-major bytes) from the zero
/// state and returns the F readout logits.
std::vector<double> forward(std::span<const std::uint8_t> sequence, std::size_t steps, const LstmWeights& w);

/// Mean over bins of the sigmoid cross-entropy, stable for large |z|.
double bce_loss(std::span<const double> logits, std::span<const std::uint8_t> targets);

/// Mean loss over `rows` and its gradient with respect to every parameter.
struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};
LossGrad loss_and_gradient(const LstmWeights& w, const WindowedDataset& ds, std::span<const std::size_t> rows);

/// Scales `grad` to norm `max_norm` if it is larger; returns the original norm.
double clip_gradients(std::span<double> grad, double max_norm);

struct LstmModel {
  LstmWeights weights;
  LstmConfig config;
  std::size_t history = 0;
  std::vector<double> epoch_loss;

  /// N x F occupancy probabilities.
  std::vector<double> predict(const WindowedDataset& ds) const;
};

/// Mini-batch BPTT over full windows with per-epoch seeded shuffling.
LstmModel train_lstm(const WindowedDataset& ds, const LstmConfig& config);

/// Central finite differences on `n_params` parameters drawn with `seed`.
/// Returns max |ga - gfd| / max(1e-8, |ga| + |gfd|).
double grad_check(const LstmWeights& w, const WindowedDataset& ds, std::size_t row, double epsilon = 1e-4,
                  std::size_t n_params = 50, std::uint64_t seed = 7);

namespace reference {
/// Per-example scalar BPTT, summed sequentially over rows.
LossGrad loss_and_gradient(const LstmWeights& w, const WindowedDataset& ds, std::span<const std::size_t> rows);
}  // namespace reference

}  // namespace specpred
