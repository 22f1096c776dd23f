#include <doctest.h>

#include <numeric>

#include "helpers.hpp"
#include "specpred/occupancy.hpp"
#include "specpred/synthgen.hpp"

using namespace specpred;

TEST_SUITE("occupancy") {

TEST_CASE("bin_frequencies: floor((f - fmin) / width)") {
  const PowerSweep s = make_sweep({{3500e6, 0, -90}, {3502e6, 0, -90}, {3506e6, 0, -90}});
  const BinMapping m = bin_frequencies(s, 5e6);
  CHECK(m.bins == 2);
  CHECK(m.bin_of_point == std::vector<std::size_t>{0, 0, 1});
}

TEST_CASE("bin_frequencies: 450 MHz span at 5 MHz gives 90 bins") {
  std::vector<SweepSample> rows;
  for (int i = 0; i < 450; ++i) rows.push_back({3400e6 + 1e6 * i, 0, -100});
  const BinMapping m = bin_frequencies(make_sweep(rows), 5e6);
  CHECK(m.bins == 90);
  CHECK(m.bin_of_point.back() == 89);
}

TEST_CASE("bin_frequencies: single point is bin 0") {
  const BinMapping m = bin_frequencies(make_sweep({{1e9, 0, -90}}), 5e6);
  CHECK(m.bins == 1);
  CHECK(m.bin_of_point[0] == 0);
}

TEST_CASE("bin_frequencies: band edge keeps only whole bins") {
  const PowerSweep s = make_sweep({{0, 0, -90}, {4e6, 0, -90}, {6e6, 0, -90}, {9.9e6, 0, -90}, {11e6, 0, -90}});
  const BinMapping m = bin_frequencies(s, 5e6, 12e6);
  CHECK(m.bins == 2);
  CHECK(m.bin_of_point[4] == BinMapping::dropped);
  CHECK_THROWS_AS(bin_frequencies(s, 5e6, 3e6), InputError);
  CHECK_THROWS_AS(bin_frequencies(s, 0.0), InputError);
}

TEST_CASE("compute_occupancy: any sample strictly above the threshold") {
  CHECK(compute_occupancy(make_sweep({{1e9, 0, -90}, {1e9, 0, -85}, {1e9, 0, -70}}), 5e6, -75).at(0, 0) == 1);
  CHECK(compute_occupancy(make_sweep({{1e9, 0, -90}, {1e9, 0, -85}}), 5e6, -75).at(0, 0) == 0);
}

TEST_CASE("compute_occupancy: equality is idle (exhaustive two-sample enumeration)") {
  const double thr = -75.0;
  const double levels[] = {std::nextafter(thr, -1e9), thr, std::nextafter(thr, 1e9)};
  for (double a : levels)
    for (double b : levels) {
      const auto g = compute_occupancy(make_sweep({{1e9, 0, a}, {1e9, 0, b}}), 5e6, thr);
      CHECK(g.at(0, 0) == static_cast<std::uint8_t>(a > thr || b > thr));
    }
}

TEST_CASE("compute_occupancy: a bin with no samples in an interval is an error") {
  const PowerSweep s = make_sweep({{0, 0, -90}, {0, 1, -90}, {6e6, 1, -90}});
  CHECK_THROWS_WITH_AS(compute_occupancy(s, 5e6, -75), "no samples for bin 1, interval 0", InputError);
}

TEST_CASE("compute_occupancy: re-thresholding a 0/1 sweep at 0.5 is idempotent") {
  const OccupancyGrid r = testutil::random_grid(7, 40, 3);
  OccupancyGrid g(7, 40, 1e6);
  for (std::size_t f = 0; f < 7; ++f)
    for (std::size_t t = 0; t < 40; ++t) g.set(f, t, r.at(f, t));
  std::vector<SweepSample> rows;
  for (std::size_t f = 0; f < g.bins(); ++f)
    for (std::size_t t = 0; t < g.minutes(); ++t) rows.push_back({1e6 * static_cast<double>(f), t, double(g.at(f, t))});
  CHECK(compute_occupancy(make_sweep(rows), 1e6, 0.5) == g);
}

TEST_CASE("compute_occupancy: raising the threshold never turns a 0 into a 1") {
  BandSpec band;
  band.minutes = 200;
  band.samples_per_minute = 3;
  for (std::uint64_t i = 0; i < 6; ++i) band.channels.push_back({MarkovKind{0.2, 0.2, 0}, i});
  const PowerSweep s = gen_sweep(band);
  OccupancyGrid prev = compute_occupancy(s, band.bin_width_hz, -120);
  for (double thr = -110; thr <= -50; thr += 2.5) {
    const OccupancyGrid cur = compute_occupancy(s, band.bin_width_hz, thr);
    for (std::size_t i = 0; i < cur.values().size(); ++i) CHECK(cur.values()[i] <= prev.values()[i]);
    prev = cur;
  }
}

TEST_CASE("compute_occupancy: parallel equals serial reference") {
  BandSpec band;
  band.minutes = 300;
  band.points_per_bin = 3;
  for (std::uint64_t i = 0; i < 13; ++i) band.channels.push_back({PeriodicKind{5, 0.4, 0.1, static_cast<int>(i)}, i});
  const PowerSweep s = gen_sweep(band);
  CHECK(compute_occupancy(s, band.bin_width_hz, -80) == reference::compute_occupancy(s, band.bin_width_hz, -80));
}

TEST_CASE("transition_rate") {
  const auto g = testutil::grid_from_rows({{0, 0, 1, 1, 0}, {1, 1, 1, 1, 1}, {0, 1, 0, 1, 0}});
  CHECK(transition_rate(g) == std::vector<std::size_t>{2, 0, 4});
}

TEST_CASE("transition_rate is invariant under flipping a bin") {
  const OccupancyGrid g = testutil::random_grid(5, 300, 9);
  OccupancyGrid flipped = g;
  for (std::size_t f = 0; f < g.bins(); ++f)
    for (std::size_t t = 0; t < g.minutes(); ++t) flipped.set(f, t, !g.at(f, t));
  CHECK(transition_rate(flipped) == transition_rate(g));
}

TEST_CASE("airtime_utilization: hourly percentages") {
  OccupancyGrid g(2, 120);
  for (std::size_t t = 0; t < 60; ++t) g.set(0, t, 1);
  for (std::size_t t = 60; t < 120; t += 2) g.set(0, t, 1);
  const auto a = airtime_utilization(g);
  CHECK(a[0] == std::vector<double>{100.0, 50.0});
  CHECK(a[1] == std::vector<double>{0.0, 0.0});
  CHECK(airtime_utilization(OccupancyGrid(1, 87840))[0].size() == 1464);
}

TEST_CASE("airtime weighted by hour length reproduces the occupied fraction") {
  for (std::size_t T : {60u, 61u, 119u, 500u}) {
    const OccupancyGrid g = testutil::random_grid(4, T, T);
    const auto a = airtime_utilization(g);
    const auto frac = occupied_fraction(g);
    for (std::size_t f = 0; f < g.bins(); ++f) {
      // Recover each hour's occupied count exactly and compare integer totals.
      std::size_t occupied = 0;
      for (std::size_t h = 0; h < a[f].size(); ++h) {
        const std::size_t len = std::min<std::size_t>(60, T - h * 60);
        occupied += static_cast<std::size_t>(std::llround(a[f][h] * static_cast<double>(len) / 100.0));
      }
      const auto row = g.bin(f);
      CHECK(occupied == static_cast<std::size_t>(std::accumulate(row.begin(), row.end(), 0)));
      CHECK(frac[f] == doctest::Approx(static_cast<double>(occupied) / static_cast<double>(T)).epsilon(1e-15));
    }
  }
}

TEST_CASE("classify_dynamics") {
  BinDynamics d;
  d.transition_count = {0, 500, 500, 49, 50};
  d.occupied_fraction = {0.5, 0.4, 0.001, 0.5, 0.5};
  const auto c = classify_dynamics(d);
  CHECK(c[0] == DynamicsClass::static_bin);
  CHECK(c[1] == DynamicsClass::dynamic_bin);
  CHECK(c[2] == DynamicsClass::static_bin);
  CHECK(c[3] == DynamicsClass::static_bin);
  CHECK(c[4] == DynamicsClass::dynamic_bin);
  CHECK_THROWS_AS(classify_dynamics(d, {50, 0.5}), InputError);
}

TEST_CASE("grid slice and concat round-trip") {
  const OccupancyGrid g = testutil::random_grid(3, 50, 1);
  const OccupancyGrid a = g.slice(0, 20), b = g.slice(20, 50);
  CHECK(b.start_minute() == 20);
  CHECK(a.concat(b) == g);
}

}
