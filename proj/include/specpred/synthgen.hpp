#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "specpred/occupancy.hpp"

namespace specpred {

/// Two-state chain with P(0->1) = p01 and P(1->0) = p10.
struct MarkovKind {
  double p01 = 0.1;
  double p10 = 0.1;
  int initial = 0;
};

/// Square wave with `round(duty * period)` occupied minutes per period and an
/// independent per-minute flip with probability jitter_prob.
struct PeriodicKind {
  int period_min = 10;
  double duty = 0.5;
  double jitter_prob = 0.0;
  int phase = 0;
};

/// Constant state with independent per-minute flips.
struct StaticKind {
  int state = 0;
  double flip_prob = 0.0;
};

/// s(t) = 1 iff sum_k weights[k-1] * s(t-k) + bias + noise * z(t) > 0, z ~ N(0, 1).
/// The first `order` minutes are fair coin flips.
struct LaggedKind {
  int order = 2;
  std::vector<double> weights;
  double bias = 0.0;
  double noise = 0.0;
};

struct ChannelSpec {
  std::variant<MarkovKind, PeriodicKind, StaticKind, LaggedKind> kind;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BandSpec {
  std::vector<ChannelSpec> channels;
  std::size_t minutes = 1440;
  double noise_floor_dbm = -100.0;
  double burst_power_dbm = -60.0;
  int samples_per_minute = 4;
  double bin_width_hz = 5e6;
  double start_freq_hz = 3.5e9;
  int points_per_bin = 1;

  void validate() const;
};

/// Deterministic in (spec, minutes, stream). Bands use stream = bin index.
std::vector<std::uint8_t> gen_channel(const ChannelSpec& spec, std::size_t minutes, std::uint64_t stream = 0);

OccupancyGrid gen_band(const BandSpec& band);

/// Raw sweep whose occupancy at the noise/burst midpoint equals gen_band(band).
PowerSweep gen_sweep(const BandSpec& band);

/// Midpoint between noise floor and burst power.
inline double midpoint_threshold(const BandSpec& band) {
  return 0.5 * (band.noise_floor_dbm + band.burst_power_dbm);
}

namespace reference {
OccupancyGrid gen_band(const BandSpec& band);
}  // namespace reference

}  // namespace specpred
