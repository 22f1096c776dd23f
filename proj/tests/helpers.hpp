#pragma once

#include <cstdint>
#include <vector>

#include "specpred/common.hpp"
#include "specpred/occupancy.hpp"

namespace testutil {

inline specpred::OccupancyGrid random_grid(std::size_t bins, std::size_t minutes, std::uint64_t seed, double p = 0.5) {
  specpred::Rng rng = specpred::make_stream(seed, 0x7e57);
  specpred::OccupancyGrid g(bins, minutes);
  for (std::size_t f = 0; f < bins; ++f)
    for (std::size_t t = 0; t < minutes; ++t) g.set(f, t, specpred::bernoulli(rng, p));
  return g;
}

inline specpred::OccupancyGrid grid_from_rows(const std::vector<std::vector<int>>& per_bin) {
  specpred::OccupancyGrid g(per_bin.size(), per_bin.empty() ? 0 : per_bin[0].size());
  for (std::size_t f = 0; f < per_bin.size(); ++f)
    for (std::size_t t = 0; t < per_bin[f].size(); ++t) g.set(f, t, static_cast<std::uint8_t>(per_bin[f][t]));
  return g;
}

}  // namespace testutil
