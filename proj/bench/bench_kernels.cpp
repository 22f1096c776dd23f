// Times each OpenMP kernel against its serial reference and checks that the
// two produce identical results.
//
//   bench_kernels [--bins F] [--minutes T] [--reps R]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <numeric>
#include <string>

#include <omp.h>

#include "specpred/boost.hpp"
#include "specpred/dataset.hpp"
#include "specpred/forest.hpp"
#include "specpred/lstm.hpp"
#include "specpred/occupancy.hpp"
#include "specpred/synthgen.hpp"

using namespace specpred;

namespace {

double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-22s %10.4f %10.4f %8.2fx  %s\n", name, serial, parallel, serial / parallel, same ? "identical" : "MISMATCH");
}

BandSpec mixed_band(std::size_t bins, std::size_t minutes) {
  BandSpec b;
  b.minutes = minutes;
  for (std::size_t f = 0; f < bins; ++f) {
    ChannelSpec c;
    c.seed = 1000 + f;
    switch (f % 4) {
      case 0: c.kind = MarkovKind{0.05, 0.1, 0}; break;
      case 1: c.kind = PeriodicKind{10 + static_cast<int>(f % 7), 0.4, 0.02, static_cast<int>(f)}; break;
      case 2: c.kind = StaticKind{static_cast<int>(f % 8 == 2), 0.0}; break;
      default: c.kind = LaggedKind{3, {0.0, 0.0, -1.0}, 0.5, 0.2}; break;
    }
    b.channels.push_back(c);
  }
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t bins = 32, minutes = 4000;
  int reps = 3;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (!std::strcmp(argv[i], "--bins")) bins = std::strtoul(argv[i + 1], nullptr, 10);
    else if (!std::strcmp(argv[i], "--minutes")) minutes = std::strtoul(argv[i + 1], nullptr, 10);
    else if (!std::strcmp(argv[i], "--reps")) reps = std::atoi(argv[i + 1]);
  }
  std::printf("threads=%d bins=%zu minutes=%zu reps=%d\n", omp_get_max_threads(), bins, minutes, reps);
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial_s", "openmp_s", "speedup");

  const BandSpec band = mixed_band(bins, minutes);
  OccupancyGrid g_ser, g_par;
  const double t_gs = best_of(reps, [&] { g_ser = reference::gen_band(band); });
  const double t_gp = best_of(reps, [&] { g_par = gen_band(band); });
  row("gen_band", t_gs, t_gp, g_ser == g_par);

  const PowerSweep sweep = gen_sweep(band);
  const double thr = midpoint_threshold(band);
  OccupancyGrid o_ser, o_par;
  const double t_os = best_of(reps, [&] { o_ser = reference::compute_occupancy(sweep, band.bin_width_hz, thr); });
  const double t_op = best_of(reps, [&] { o_par = compute_occupancy(sweep, band.bin_width_hz, thr); });
  row("compute_occupancy", t_os, t_op, o_ser == o_par && o_par == g_par);

  const WindowedDataset ds = build_windows(g_par, 10);
  const auto X = ds.feature_view();
  const auto Y = ds.target_view();

  ForestParams fp;
  fp.n_trees = 10;
  MultiOutputForest f_ser, f_par;
  const double t_fs = best_of(1, [&] { f_ser = reference::fit_forest_multi(X, Y, fp, 7); });
  const double t_fp = best_of(1, [&] { f_par = fit_forest_multi(X, Y, fp, 7); });
  row("fit_forest_multi", t_fs, t_fp, f_ser.predict_proba(X) == f_par.predict_proba(X));

  GbtParams gp;
  gp.n_rounds = 20;
  MultiOutputGbt b_ser, b_par;
  const double t_bs = best_of(1, [&] { b_ser = reference::fit_gbt_multi(X, Y, gp, 7); });
  const double t_bp = best_of(1, [&] { b_par = fit_gbt_multi(X, Y, gp, 7); });
  row("fit_gbt_multi", t_bs, t_bp, b_ser.predict(X) == b_par.predict(X));

  const LstmWeights w = init_weights(bins, 32, 7);
  std::vector<std::size_t> rows(std::min<std::size_t>(ds.examples, 1024));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  LossGrad l_ser, l_par;
  const double t_ls = best_of(reps, [&] { l_ser = reference::loss_and_gradient(w, ds, rows); });
  const double t_lp = best_of(reps, [&] { l_par = loss_and_gradient(w, ds, rows); });
  double worst = std::abs(l_ser.loss - l_par.loss);
  for (std::size_t i = 0; i < l_ser.grad.size(); ++i) worst = std::max(worst, std::abs(l_ser.grad[i] - l_par.grad[i]));
  // The batched kernel reorders floating-point sums, so agreement is to rounding.
  row("lstm_loss_and_gradient", t_ls, t_lp, worst < 1e-10);
  return 0;
}
