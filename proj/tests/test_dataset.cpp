#include <doctest.h>

#include "helpers.hpp"
#include "specpred/dataset.hpp"

using namespace specpred;

TEST_SUITE("dataset") {

TEST_CASE("build_windows: N = T - K and D = K F") {
  const WindowedDataset ds = build_windows(testutil::random_grid(4, 100, 1), 10);
  CHECK(ds.examples == 90);
  CHECK(ds.feature_dim() == 40);
  CHECK(build_windows(OccupancyGrid(90, 20), 10).feature_dim() == 900);
}

TEST_CASE("build_windows: time-major layout and origin minutes") {
  const OccupancyGrid g = testutil::random_grid(3, 30, 2);
  const WindowedDataset ds = build_windows(g, 4);
  for (std::size_t n = 0; n < ds.examples; ++n) {
    CHECK(ds.origin_minutes[n] == static_cast<std::int64_t>(n + 4));
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t f = 0; f < 3; ++f) {
        CHECK(ds.row(n)[k * 3 + f] == g.at(f, n + k));
        CHECK(ds.seq(n, k, f) == ds.row(n)[k * 3 + f]);
      }
    for (std::size_t f = 0; f < 3; ++f) CHECK(ds.target(n)[f] == g.at(f, n + 4));
  }
}

TEST_CASE("build_windows: all-ones grid") {
  OccupancyGrid g(5, 30);
  for (std::size_t f = 0; f < 5; ++f)
    for (std::size_t t = 0; t < 30; ++t) g.set(f, t, 1);
  const WindowedDataset ds = build_windows(g, 7);
  CHECK(std::all_of(ds.features.begin(), ds.features.end(), [](auto v) { return v == 1; }));
  CHECK(std::all_of(ds.targets.begin(), ds.targets.end(), [](auto v) { return v == 1; }));
}

TEST_CASE("build_windows: K must be below T") {
  CHECK_THROWS_AS(build_windows(OccupancyGrid(2, 10), 10), InputError);
  CHECK_THROWS_AS(build_windows(OccupancyGrid(2, 10), 0), InputError);
}

TEST_CASE("build_windows is injective on distinct grids") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const OccupancyGrid a = testutil::random_grid(3, 12, s);
    OccupancyGrid b = a;
    const std::size_t f = s % 3, t = s % 12;
    b.set(f, t, !a.at(f, t));
    const WindowedDataset da = build_windows(a, 3), db = build_windows(b, 3);
    CHECK((da.features != db.features || da.targets != db.targets));
  }
}

TEST_CASE("chronological_split: arithmetic, boundary, concat") {
  const OccupancyGrid g(2, 87840);
  const auto [tr, te] = chronological_split(g, 0.75);
  CHECK(tr.minutes() == 65880);
  CHECK(te.minutes() == 21960);
  CHECK(te.start_minute() == 65880);

  const OccupancyGrid r = testutil::random_grid(3, 101, 5);
  const auto [a, b] = chronological_split(r, 0.5);
  CHECK(a.minutes() == 50);  // minute 50 is the first test minute
  CHECK(a.concat(b) == r);
}

TEST_CASE("chronological_split: no temporal leakage") {
  const OccupancyGrid g = testutil::random_grid(2, 200, 4);
  const auto [tr, te] = chronological_split(g, 0.7, 10);
  const WindowedDataset a = build_windows(tr, 10), b = build_windows(te, 10);
  CHECK(a.origin_minutes.back() < b.origin_minutes.front());
  CHECK(b.origin_minutes.front() == te.start_minute() + 10);
}

TEST_CASE("chronological_split: infeasible sides") {
  const OccupancyGrid g(2, 40);
  CHECK_THROWS_AS(chronological_split(g, 0.0), InputError);
  CHECK_THROWS_AS(chronological_split(g, 1.0), InputError);
  CHECK_THROWS_AS(chronological_split(g, 0.8, 8), InputError);
  CHECK_NOTHROW(chronological_split(g, 0.5, 19));
}

TEST_CASE("from_origin drops earlier rows") {
  const WindowedDataset ds = build_windows(testutil::random_grid(2, 40, 6), 5);
  const WindowedDataset tail = ds.from_origin(20);
  CHECK(tail.examples == ds.examples - 15);
  CHECK(tail.origin_minutes.front() == 20);
  CHECK(std::equal(tail.row(0).begin(), tail.row(0).end(), ds.row(15).begin()));
}

}
