#include "specpred/dataset.hpp"

#include <cmath>
#include <string>

namespace specpred {

std::vector<std::uint8_t> WindowedDataset::bin_labels(std::size_t f) const {
  std::vector<std::uint8_t> y(examples);
  for (std::size_t n = 0; n < examples; ++n) y[n] = targets[n * bins + f];
  return y;
}

WindowedDataset WindowedDataset::from_origin(std::int64_t min_origin) const {
  std::size_t skip = 0;
  while (skip < examples && origin_minutes[skip] < min_origin) ++skip;
  WindowedDataset out;
  out.history = history;
  out.bins = bins;
  out.examples = examples - skip;
  out.features.assign(features.begin() + static_cast<std::ptrdiff_t>(skip * feature_dim()), features.end());
  out.targets.assign(targets.begin() + static_cast<std::ptrdiff_t>(skip * bins), targets.end());
  out.origin_minutes.assign(origin_minutes.begin() + static_cast<std::ptrdiff_t>(skip), origin_minutes.end());
  return out;
}

WindowedDataset build_windows(const OccupancyGrid& grid, std::size_t history) {
  if (history < 1) throw InputError("history length K must be >= 1");
  if (grid.minutes() <= history)
    throw InputError("grid has " + std::to_string(grid.minutes()) + " minutes, need more than K = " +
                     std::to_string(history));
  WindowedDataset ds;
  ds.history = history;
  ds.bins = grid.bins();
  ds.examples = grid.minutes() - history;
  const std::size_t F = ds.bins;
  const std::size_t D = ds.feature_dim();
  ds.features.resize(ds.examples * D);
  ds.targets.resize(ds.examples * F);
  ds.origin_minutes.resize(ds.examples);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ni = 0; ni < static_cast<std::ptrdiff_t>(ds.examples); ++ni) {
    const auto n = static_cast<std::size_t>(ni);
    const std::size_t t = n + history;
    std::uint8_t* x = ds.features.data() + n * D;
    for (std::size_t k = 0; k < history; ++k)
      for (std::size_t f = 0; f < F; ++f) x[k * F + f] = grid.at(f, t - history + k);
    for (std::size_t f = 0; f < F; ++f) ds.targets[n * F + f] = grid.at(f, t);
    ds.origin_minutes[n] = grid.start_minute() + static_cast<std::int64_t>(t);
  }
  return ds;
}

std::pair<OccupancyGrid, OccupancyGrid> chronological_split(const OccupancyGrid& grid, double train_fraction,
                                                            std::size_t history) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InputError("train fraction must lie in (0, 1)");
  const auto cut = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(grid.minutes())));
  if (cut <= history || grid.minutes() - cut <= history)
    throw InputError("split at minute " + std::to_string(cut) + " of " + std::to_string(grid.minutes()) +
                     " leaves a side with <= K = " + std::to_string(history) + " minutes");
  return {grid.slice(0, cut), grid.slice(cut, grid.minutes())};
}

}  // namespace specpred
