#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "specpred/common.hpp"

namespace specpred {

/// One raw power reading.
struct SweepSample {
  double freq_hz = 0.0;
  std::size_t interval = 0;
  double power_dbm = 0.0;
};

/// Raw power readings over frequency points and one-minute intervals.
///
/// Samples are stored compressed: the readings for cell (point, interval)
/// live in power_dbm[offsets[c] .. offsets[c + 1]) with c = point * intervals + interval.
struct PowerSweep {
  std::vector<double> freq_points;
  std::size_t intervals = 0;
  std::vector<std::size_t> offsets;
  std::vector<double> power_dbm;

  std::size_t points() const { return freq_points.size(); }
  std::span<const double> samples(std::size_t point, std::size_t interval) const {
    const std::size_t c = point * intervals + interval;
    return std::span<const double>(power_dbm).subspan(offsets[c], offsets[c + 1] - offsets[c]);
  }

  /// Checks ordering, offsets and finiteness. Empty cells are allowed here and
  /// reported by compute_occupancy, which knows the bin they belong to.
  void validate() const;
};

/// Builds a sweep from unordered rows. Interval count is max(interval) + 1.
PowerSweep make_sweep(std::vector<SweepSample> rows);

/// Binary occupancy, F bins by T one-minute intervals, stored bin-major.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(std::size_t bins, std::size_t minutes, double bin_width_hz = 5e6,
                std::int64_t start_minute = 0);

  std::size_t bins() const { return bins_; }
  std::size_t minutes() const { return minutes_; }
  double bin_width_hz() const { return bin_width_hz_; }
  std::int64_t start_minute() const { return start_minute_; }

  std::uint8_t at(std::size_t bin, std::size_t minute) const { return values_[bin * minutes_ + minute]; }
  void set(std::size_t bin, std::size_t minute, std::uint8_t v) { values_[bin * minutes_ + minute] = v ? 1 : 0; }

  std::span<const std::uint8_t> bin(std::size_t f) const {
    return std::span<const std::uint8_t>(values_).subspan(f * minutes_, minutes_);
  }
  std::span<std::uint8_t> bin(std::size_t f) {
    return std::span<std::uint8_t>(values_).subspan(f * minutes_, minutes_);
  }
  std::span<const std::uint8_t> values() const { return values_; }

  /// Minutes [begin, end) as a new grid; start_minute shifts accordingly.
  OccupancyGrid slice(std::size_t begin, std::size_t end) const;

  /// Appends the minutes of `tail` (same bin count and width).
  OccupancyGrid concat(const OccupancyGrid& tail) const;

  bool operator==(const OccupancyGrid&) const = default;

 private:
  std::size_t bins_ = 0;
  std::size_t minutes_ = 0;
  double bin_width_hz_ = 5e6;
  std::int64_t start_minute_ = 0;
  std::vector<std::uint8_t> values_;
};

struct BinMapping {
  static constexpr std::size_t dropped = static_cast<std::size_t>(-1);
  double f_min_hz = 0.0;
  double bin_width_hz = 0.0;
  std::size_t bins = 0;
  std::vector<std::size_t> bin_of_point;  // `dropped` for points past the last bin
};

/// Floor division from the lowest frequency. Without a band edge every point is
/// kept (the last bin may be partial); with one, only full bins below the edge
/// are formed and points at or beyond the last full bin are dropped.
BinMapping bin_frequencies(const PowerSweep& sweep, double bin_width_hz,
                           std::optional<double> band_end_hz = std::nullopt);

/// CO(f,t) = 1 iff any sample of bin f during interval t is strictly above the threshold.
OccupancyGrid compute_occupancy(const PowerSweep& sweep, double bin_width_hz, double threshold_dbm,
                                std::optional<double> band_end_hz = std::nullopt);

/// Number of idle/occupied state changes per bin. Requires T >= 2.
std::vector<std::size_t> transition_rate(const OccupancyGrid& grid);

/// Per bin, percentage of occupied minutes in each 60-minute block; a trailing
/// partial block is normalized by its own length.
std::vector<std::vector<double>> airtime_utilization(const OccupancyGrid& grid);

std::vector<double> occupied_fraction(const OccupancyGrid& grid);

enum class DynamicsClass : std::uint8_t { static_bin, dynamic_bin };

struct BinDynamics {
  std::vector<std::size_t> transition_count;
  std::vector<double> occupied_fraction;
  std::vector<DynamicsClass> cls;
  std::vector<std::vector<double>> airtime;
};

struct DynamicsThresholds {
  std::size_t min_transitions = 50;
  double imbalance_bound = 0.01;
};

/// Dynamic iff transitions >= min_transitions and min(p, 1 - p) >= imbalance_bound.
std::vector<DynamicsClass> classify_dynamics(const BinDynamics& dyn, DynamicsThresholds th = {});

/// Transition counts, occupancy fractions, airtime and classes in one pass.
BinDynamics compute_dynamics(const OccupancyGrid& grid, DynamicsThresholds th = {});

namespace reference {
OccupancyGrid compute_occupancy(const PowerSweep& sweep, double bin_width_hz, double threshold_dbm,
                                std::optional<double> band_end_hz = std::nullopt);
}  // namespace reference

}  // namespace specpred
