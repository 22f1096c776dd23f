#include "specpred/markov.hpp"

namespace specpred {

TransitionModel fit_markov(const OccupancyGrid& train, double alpha) {
  if (train.minutes() < 2) throw InputError("markov fit needs at least two minutes");
  if (!(alpha > 0.0)) throw InputError("smoothing alpha must be positive");
  TransitionModel m;
  m.alpha = alpha;
  m.bins.resize(train.bins());
  m.last_train_state.resize(train.bins());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t fi = 0; fi < static_cast<std::ptrdiff_t>(train.bins()); ++fi) {
    const auto f = static_cast<std::size_t>(fi);
    const auto row = train.bin(f);
    auto& b = m.bins[f];
    for (std::size_t t = 1; t < row.size(); ++t) ++b.counts[2 * row[t - 1] + row[t]];
    const double from0 = static_cast<double>(b.counts[0] + b.counts[1]) + 2.0 * alpha;
    const double from1 = static_cast<double>(b.counts[2] + b.counts[3]) + 2.0 * alpha;
    // The complement of the larger entry is exact, so each row sums to exactly 1.
    const auto row_pair = [alpha](std::uint64_t c0, std::uint64_t c1, double total, double& p0, double& p1) {
      if (c1 >= c0) {
        p1 = (static_cast<double>(c1) + alpha) / total;
        p0 = 1.0 - p1;
      } else {
        p0 = (static_cast<double>(c0) + alpha) / total;
        p1 = 1.0 - p0;
      }
    };
    row_pair(b.counts[0], b.counts[1], from0, b.p00, b.p01);
    row_pair(b.counts[2], b.counts[3], from1, b.p10, b.p11);
    m.last_train_state[f] = row.back();
  }
  return m;
}

std::vector<double> predict_markov(const TransitionModel& model, std::span<const std::uint8_t> prev_state) {
  if (prev_state.size() != model.bins.size()) throw InputError("previous-state vector does not match bin count");
  std::vector<double> out(prev_state.size());
  for (std::size_t f = 0; f < out.size(); ++f) out[f] = prev_state[f] ? model.bins[f].p11 : model.bins[f].p01;
  return out;
}

std::vector<double> markov_scores(const TransitionModel& model, const WindowedDataset& ds) {
  if (ds.bins != model.bins.size()) throw InputError("dataset bin count does not match the markov model");
  const std::size_t F = ds.bins;
  std::vector<double> out(ds.examples * F);
  for (std::size_t n = 0; n < ds.examples; ++n) {
    for (std::size_t f = 0; f < F; ++f) {
      const auto& b = model.bins[f];
      out[n * F + f] = ds.seq(n, ds.history - 1, f) ? b.p11 : b.p01;
    }
  }
  return out;
}

std::vector<double> markov_stream_scores(const TransitionModel& model, const OccupancyGrid& test) {
  if (test.bins() != model.bins.size()) throw InputError("test grid bin count does not match the markov model");
  const std::size_t F = test.bins();
  std::vector<double> out(test.minutes() * F);
  for (std::size_t f = 0; f < F; ++f) {
    const auto& b = model.bins[f];
    std::uint8_t prev = model.last_train_state[f];
    for (std::size_t t = 0; t < test.minutes(); ++t) {
      out[t * F + f] = prev ? b.p11 : b.p01;
      prev = test.at(f, t);
    }
  }
  return out;
}

}  // namespace specpred
