#include "specpred/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

namespace specpred {

void PowerSweep::validate() const {
  if (freq_points.empty() || intervals == 0) throw InputError("power sweep is empty");
  for (std::size_t i = 1; i < freq_points.size(); ++i) {
    if (!(freq_points[i] > freq_points[i - 1]))
      throw InputError("sweep frequency points must be strictly increasing");
  }
  if (offsets.size() != freq_points.size() * intervals + 1 || offsets.back() != power_dbm.size())
    throw InputError("sweep sample offsets are inconsistent");
  for (double p : power_dbm) {
    if (!std::isfinite(p)) throw InputError("sweep contains a nonfinite power value");
  }
}

PowerSweep make_sweep(std::vector<SweepSample> rows) {
  if (rows.empty()) throw InputError("power sweep is empty");
  std::stable_sort(rows.begin(), rows.end(), [](const SweepSample& a, const SweepSample& b) {
    if (a.freq_hz != b.freq_hz) return a.freq_hz < b.freq_hz;
    return a.interval < b.interval;
  });
  PowerSweep s;
  std::size_t max_interval = 0;
  for (const auto& r : rows) {
    if (!std::isfinite(r.freq_hz)) throw InputError("sweep contains a nonfinite frequency");
    if (s.freq_points.empty() || s.freq_points.back() != r.freq_hz) s.freq_points.push_back(r.freq_hz);
    max_interval = std::max(max_interval, r.interval);
  }
  s.intervals = max_interval + 1;
  std::vector<std::size_t> counts(s.freq_points.size() * s.intervals, 0);
  std::size_t p = 0;
  for (const auto& r : rows) {
    while (s.freq_points[p] != r.freq_hz) ++p;
    ++counts[p * s.intervals + r.interval];
  }
  s.offsets.assign(counts.size() + 1, 0);
  for (std::size_t c = 0; c < counts.size(); ++c) s.offsets[c + 1] = s.offsets[c] + counts[c];
  s.power_dbm.resize(rows.size());
  std::vector<std::size_t> cursor(s.offsets.begin(), s.offsets.end() - 1);
  p = 0;
  for (const auto& r : rows) {
    while (s.freq_points[p] != r.freq_hz) ++p;
    s.power_dbm[cursor[p * s.intervals + r.interval]++] = r.power_dbm;
  }
  s.validate();
  return s;
}

OccupancyGrid::OccupancyGrid(std::size_t bins, std::size_t minutes, double bin_width_hz,
                             std::int64_t start_minute)
    : bins_(bins), minutes_(minutes), bin_width_hz_(bin_width_hz), start_minute_(start_minute),
      values_(bins * minutes, 0) {
  if (!(bin_width_hz > 0.0)) throw InputError("bin width must be positive");
}

OccupancyGrid OccupancyGrid::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > minutes_) throw InputError("grid slice out of range");
  OccupancyGrid out(bins_, end - begin, bin_width_hz_, start_minute_ + static_cast<std::int64_t>(begin));
  for (std::size_t f = 0; f < bins_; ++f) {
    auto src = bin(f).subspan(begin, end - begin);
    std::copy(src.begin(), src.end(), out.bin(f).begin());
  }
  return out;
}

OccupancyGrid OccupancyGrid::concat(const OccupancyGrid& tail) const {
  if (tail.bins_ != bins_) throw InputError("cannot concatenate grids with different bin counts");
  OccupancyGrid out(bins_, minutes_ + tail.minutes_, bin_width_hz_, start_minute_);
  for (std::size_t f = 0; f < bins_; ++f) {
    auto dst = out.bin(f);
    std::copy(bin(f).begin(), bin(f).end(), dst.begin());
    std::copy(tail.bin(f).begin(), tail.bin(f).end(), dst.begin() + static_cast<std::ptrdiff_t>(minutes_));
  }
  return out;
}

BinMapping bin_frequencies(const PowerSweep& sweep, double bin_width_hz, std::optional<double> band_end_hz) {
  if (sweep.freq_points.empty()) throw InputError("power sweep is empty");
  if (!(bin_width_hz > 0.0) || !std::isfinite(bin_width_hz)) throw InputError("bin width must be positive");
  BinMapping m;
  m.f_min_hz = sweep.freq_points.front();
  m.bin_width_hz = bin_width_hz;
  if (band_end_hz) {
    const double full = std::floor((*band_end_hz - m.f_min_hz) / bin_width_hz);
    if (full < 1.0) throw InputError("band edge leaves no full bin");
    m.bins = static_cast<std::size_t>(full);
  } else {
    m.bins = static_cast<std::size_t>(std::floor((sweep.freq_points.back() - m.f_min_hz) / bin_width_hz)) + 1;
  }
  m.bin_of_point.resize(sweep.freq_points.size());
  std::size_t dropped = 0;
  for (std::size_t p = 0; p < sweep.freq_points.size(); ++p) {
    const auto b = static_cast<std::size_t>(std::floor((sweep.freq_points[p] - m.f_min_hz) / bin_width_hz));
    if (b >= m.bins) {
      m.bin_of_point[p] = BinMapping::dropped;
      ++dropped;
    } else {
      m.bin_of_point[p] = b;
    }
  }
  if (dropped > 0)
    std::cerr << "warning: " << dropped << " frequency point(s) beyond the last full bin were dropped\n";
  return m;
}

namespace {

void require_threshold(double threshold_dbm) {
  if (!std::isfinite(threshold_dbm)) throw InputError("occupancy threshold must be finite");
}

[[noreturn]] void missing_cell(std::size_t bin, std::size_t interval) {
  throw InputError("no samples for bin " + std::to_string(bin) + ", interval " + std::to_string(interval));
}

}  // namespace

OccupancyGrid compute_occupancy(const PowerSweep& sweep, double bin_width_hz, double threshold_dbm,
                                std::optional<double> band_end_hz) {
  require_threshold(threshold_dbm);
  sweep.validate();
  const BinMapping map = bin_frequencies(sweep, bin_width_hz, band_end_hz);
  const std::size_t T = sweep.intervals;

  // Points are sorted, so every bin owns a contiguous point range.
  std::vector<std::size_t> first(map.bins + 1, sweep.points());
  for (std::size_t p = sweep.points(); p-- > 0;) {
    if (map.bin_of_point[p] != BinMapping::dropped) first[map.bin_of_point[p]] = p;
  }
  std::vector<std::size_t> last(map.bins, 0);
  for (std::size_t p = 0; p < sweep.points(); ++p) {
    if (map.bin_of_point[p] != BinMapping::dropped) last[map.bin_of_point[p]] = p + 1;
  }

  OccupancyGrid grid(map.bins, T, bin_width_hz, 0);
  const auto F = static_cast<std::ptrdiff_t>(map.bins);
  std::ptrdiff_t bad_bin = -1;
  std::size_t bad_interval = 0;

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t fi = 0; fi < F; ++fi) {
    const auto f = static_cast<std::size_t>(fi);
    auto row = grid.bin(f);
    std::vector<std::uint8_t> seen(T, 0);
    for (std::size_t p = first[f]; p < last[f] && first[f] < sweep.points(); ++p) {
      for (std::size_t t = 0; t < T; ++t) {
        const auto s = sweep.samples(p, t);
        if (!s.empty()) seen[t] = 1;
        if (row[t]) continue;
        for (double v : s) {
          if (v > threshold_dbm) {
            row[t] = 1;
            break;
          }
        }
      }
    }
    for (std::size_t t = 0; t < T; ++t) {
      if (!seen[t]) {
#pragma omp critical(specpred_missing_cell)
        if (bad_bin < 0 || fi < bad_bin || (fi == bad_bin && t < bad_interval)) {
          bad_bin = fi;
          bad_interval = t;
        }
        break;
      }
    }
  }
  if (bad_bin >= 0) missing_cell(static_cast<std::size_t>(bad_bin), bad_interval);
  return grid;
}

namespace reference {

OccupancyGrid compute_occupancy(const PowerSweep& sweep, double bin_width_hz, double threshold_dbm,
                                std::optional<double> band_end_hz) {
  require_threshold(threshold_dbm);
  sweep.validate();
  const BinMapping map = bin_frequencies(sweep, bin_width_hz, band_end_hz);
  OccupancyGrid grid(map.bins, sweep.intervals, bin_width_hz, 0);
  std::vector<std::size_t> count(map.bins * sweep.intervals, 0);
  for (std::size_t p = 0; p < sweep.points(); ++p) {
    const std::size_t f = map.bin_of_point[p];
    if (f == BinMapping::dropped) continue;
    for (std::size_t t = 0; t < sweep.intervals; ++t) {
      for (double v : sweep.samples(p, t)) {
        ++count[f * sweep.intervals + t];
        if (v > threshold_dbm) grid.set(f, t, 1);
      }
    }
  }
  for (std::size_t f = 0; f < map.bins; ++f) {
    for (std::size_t t = 0; t < sweep.intervals; ++t) {
      if (count[f * sweep.intervals + t] == 0) missing_cell(f, t);
    }
  }
  return grid;
}

}  // namespace reference

std::vector<std::size_t> transition_rate(const OccupancyGrid& grid) {
  if (grid.minutes() < 2) throw InputError("transition rate needs at least two minutes");
  std::vector<std::size_t> out(grid.bins(), 0);
  for (std::size_t f = 0; f < grid.bins(); ++f) {
    const auto row = grid.bin(f);
    std::size_t n = 0;
    for (std::size_t t = 1; t < row.size(); ++t) n += row[t] != row[t - 1];
    out[f] = n;
  }
  return out;
}

std::vector<std::vector<double>> airtime_utilization(const OccupancyGrid& grid) {
  const std::size_t T = grid.minutes();
  const std::size_t hours = (T + 59) / 60;
  std::vector<std::vector<double>> out(grid.bins(), std::vector<double>(hours, 0.0));
  for (std::size_t f = 0; f < grid.bins(); ++f) {
    const auto row = grid.bin(f);
    for (std::size_t h = 0; h < hours; ++h) {
      const std::size_t begin = h * 60;
      const std::size_t end = std::min(T, begin + 60);
      std::size_t occ = 0;
      for (std::size_t t = begin; t < end; ++t) occ += row[t];
      out[f][h] = 100.0 * static_cast<double>(occ) / static_cast<double>(end - begin);
    }
  }
  return out;
}

std::vector<double> occupied_fraction(const OccupancyGrid& grid) {
  std::vector<double> out(grid.bins(), 0.0);
  if (grid.minutes() == 0) return out;
  for (std::size_t f = 0; f < grid.bins(); ++f) {
    std::size_t occ = 0;
    for (auto v : grid.bin(f)) occ += v;
    out[f] = static_cast<double>(occ) / static_cast<double>(grid.minutes());
  }
  return out;
}

std::vector<DynamicsClass> classify_dynamics(const BinDynamics& dyn, DynamicsThresholds th) {
  if (!(th.imbalance_bound >= 0.0 && th.imbalance_bound < 0.5))
    throw InputError("imbalance bound must lie in [0, 0.5)");
  if (dyn.transition_count.size() != dyn.occupied_fraction.size())
    throw InputError("dynamics vectors differ in length");
  std::vector<DynamicsClass> out(dyn.transition_count.size());
  for (std::size_t f = 0; f < out.size(); ++f) {
    const double p = dyn.occupied_fraction[f];
    const bool dynamic = dyn.transition_count[f] >= th.min_transitions && std::min(p, 1.0 - p) >= th.imbalance_bound;
    out[f] = dynamic ? DynamicsClass::dynamic_bin : DynamicsClass::static_bin;
  }
  return out;
}

BinDynamics compute_dynamics(const OccupancyGrid& grid, DynamicsThresholds th) {
  BinDynamics d;
  d.transition_count = transition_rate(grid);
  d.occupied_fraction = occupied_fraction(grid);
  d.airtime = airtime_utilization(grid);
  d.cls = classify_dynamics(d, th);
  return d;
}

}  // namespace specpred
