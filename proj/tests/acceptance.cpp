// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. `acceptance 4 7` runs only the listed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "specpred/pipeline.hpp"

using namespace specpred;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kRoundTripBudgetS = 30.0;
constexpr double kMarkovParamTol = 0.01;
constexpr double kMarkovBayesTol = 0.01;
constexpr double kMarkovBudgetS = 60.0;
constexpr double kGbtLeafTol = 1e-12;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradBudgetS = 60.0;
constexpr double kLaggedPdGap = 0.05;
constexpr double kBandBudgetS = 15.0 * 60.0;
constexpr double kStaticAccuracy = 0.995;
constexpr double kRegressionR = -0.8;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Occupancy round trip ---------------------------------------------------

BandSpec random_band(Rng& rng) {
  const auto pick = [&](std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); };
  BandSpec b;
  b.minutes = pick(50, 600);
  b.samples_per_minute = static_cast<int>(pick(1, 6));
  b.points_per_bin = static_cast<int>(pick(1, 4));
  b.bin_width_hz = std::array{1e5, 2e6, 5e6, 1.25e7}[rng() % 4];
  b.start_freq_hz = 1e8 + 1e6 * static_cast<double>(pick(0, 5000));
  b.noise_floor_dbm = -110.0 + 20.0 * uniform01(rng);
  b.burst_power_dbm = b.noise_floor_dbm + 3.0 + 40.0 * uniform01(rng);
  const std::size_t F = pick(1, 24);
  for (std::size_t f = 0; f < F; ++f) {
    ChannelSpec c;
    c.seed = rng();
    switch (rng() % 4) {
      case 0: c.kind = MarkovKind{0.01 + 0.5 * uniform01(rng), 0.01 + 0.5 * uniform01(rng), static_cast<int>(rng() % 2)}; break;
      case 1: c.kind = PeriodicKind{static_cast<int>(pick(2, 30)), 0.1 + 0.8 * uniform01(rng), 0.1 * uniform01(rng),
                                    static_cast<int>(pick(0, 29))}; break;
      case 2: c.kind = StaticKind{static_cast<int>(rng() % 2), rng() % 2 ? 0.0 : 0.05 * uniform01(rng)}; break;
      default: {
        const int order = static_cast<int>(pick(2, 5));
        std::vector<double> w(static_cast<std::size_t>(order));
        for (auto& v : w) v = 2.0 * uniform01(rng) - 1.0;
        c.kind = LaggedKind{order, w, uniform01(rng) - 0.5, 0.5 * uniform01(rng)};
      }
    }
    b.channels.push_back(c);
  }
  return b;
}

Outcome occupancy_round_trip() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_stream(101);
  std::size_t ok = 0;
  for (int i = 0; i < 20; ++i) {
    const BandSpec band = random_band(rng);
    const OccupancyGrid truth = gen_band(band);
    const OccupancyGrid got = compute_occupancy(gen_sweep(band), band.bin_width_hz, midpoint_threshold(band));
    ok += got == truth;
  }
  const double t = seconds_since(t0);
  return {ok == 20 && t < kRoundTripBudgetS, fmt("%zu/20 bands bit-exact, %.2f s", ok, t)};
}

// 2. Markov consistency ------------------------------------------------------

Outcome markov_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::pair<double, double>> params{{0.05, 0.1}, {0.2, 0.3}, {0.1, 0.05}, {0.3, 0.6},
                                                      {0.02, 0.02}, {0.4, 0.2}, {0.7, 0.2}, {0.15, 0.8}};
  BandSpec band;
  band.minutes = 100000;
  for (std::size_t i = 0; i < params.size(); ++i)
    band.channels.push_back({MarkovKind{params[i].first, params[i].second, 0}, 500 + i});
  const OccupancyGrid grid = gen_band(band);
  const auto [train, test] = chronological_split(grid, 0.8);
  const TransitionModel m = fit_markov(train);

  double worst_param = 0.0, bayes_sum = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto [p01, p10] = params[i];
    const double p11 = 1.0 - p10;
    worst_param = std::max({worst_param, std::abs(m.bins[i].p01 - p01), std::abs(m.bins[i].p11 - p11)});
    const double pi1 = p01 / (p01 + p10);
    bayes_sum += (1.0 - pi1) * std::max(p01, 1.0 - p01) + pi1 * std::max(p11, 1.0 - p11);
  }
  const double bayes = bayes_sum / static_cast<double>(params.size());

  ScoreMatrix sm;
  sm.rows = test.minutes();
  sm.bins = test.bins();
  sm.scores = markov_stream_scores(m, test);
  sm.labels.resize(sm.rows * sm.bins);
  for (std::size_t t = 0; t < sm.rows; ++t)
    for (std::size_t f = 0; f < sm.bins; ++f) sm.labels[t * sm.bins + f] = test.at(f, t);
  const double acc = average_accuracy(sm);
  const double t = seconds_since(t0);
  const bool pass = worst_param <= kMarkovParamTol && std::abs(acc - bayes) <= kMarkovBayesTol && t < kMarkovBudgetS;
  return {pass, fmt("max |p_hat - p| = %.4f, accuracy %.4f vs Bayes %.4f, %.2f s", worst_param, acc, bayes, t)};
}

// 3. Markov K-invariance -------------------------------------------------------

Outcome markov_k_invariance() {
  BandSpec band;
  band.minutes = 6000;
  for (std::uint64_t i = 0; i < 6; ++i) band.channels.push_back({MarkovKind{0.05 + 0.05 * i, 0.1, 0}, 40 + i});
  for (std::uint64_t i = 0; i < 6; ++i) band.channels.push_back({LaggedKind{3, {0.0, 0.0, -1.0}, 0.5, 0.3}, 60 + i});
  for (std::uint64_t i = 0; i < 4; ++i) band.channels.push_back({PeriodicKind{7 + static_cast<int>(i), 0.4, 0.02, 0}, 80 + i});
  const OccupancyGrid grid = gen_band(band);
  RunConfig c;
  c.method = Method::markov;
  const std::vector<std::size_t> ks{1, 5, 10, 30, 60};
  const auto entries = k_sweep(grid, c, ks);
  bool same = true;
  for (const auto& e : entries) {
    const auto& a = e.report;
    const auto& b = entries.front().report;
    same = same && a.rows == b.rows && a.average_accuracy == b.average_accuracy && a.balanced.mean == b.balanced.mean &&
           a.per_bin_accuracy == b.per_bin_accuracy;
    for (std::size_t i = 0; i < a.pd_all.size(); ++i) same = same && a.pd_all[i].pd == b.pd_all[i].pd;
  }
  std::string accs;
  for (const auto& e : entries) accs += fmt("%s%.17g", accs.empty() ? "" : ", ", e.report.average_accuracy);
  return {same, "accuracy per K {1,5,10,30,60}: " + accs};
}

// 4. Split-finding oracle ----------------------------------------------------

struct Frac {
  long long num = 0, den = 1;
};
bool frac_less(Frac a, Frac b) { return a.num * b.den < b.num * a.den; }
bool frac_eq(Frac a, Frac b) { return a.num * b.den == b.num * a.den; }

// Children purity sum_c sum_k n_ck^2 / n_c minus parent purity sum_k n_k^2 / n,
// i.e. n times the Gini decrease, as an exact fraction.
Frac gini_gain(const std::vector<std::array<int, 2>>& children, std::array<int, 2> parent) {
  const int n = parent[0] + parent[1];
  // Common denominator n * prod(n_c) stays small for n <= 8.
  long long den = n;
  for (const auto& c : children) den *= (c[0] + c[1]);
  long long num = 0;
  for (const auto& c : children) num += static_cast<long long>(c[0] * c[0] + c[1] * c[1]) * (den / (c[0] + c[1]));
  num -= static_cast<long long>(parent[0] * parent[0] + parent[1] * parent[1]) * (den / n);
  return {num, den};
}

Outcome split_oracle() {
  Rng rng = make_stream(404);
  std::size_t agree = 0;
  std::string first_bad;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = 1 + rng() % 8, cols = 1 + rng() % 6;
    std::vector<std::uint8_t> x(rows * cols), y(rows);
    for (auto& v : x) v = rng() % 2;
    for (auto& v : y) v = rng() % 2;
    // Bootstrap-style sample with repeats, and a random candidate subset.
    const std::size_t n = 1 + rng() % 8;
    std::vector<std::uint32_t> samples(n);
    for (auto& s : samples) s = static_cast<std::uint32_t>(rng() % rows);
    std::vector<std::size_t> cand(cols);
    std::iota(cand.begin(), cand.end(), std::size_t{0});
    std::shuffle(cand.begin(), cand.end(), rng);
    cand.resize(1 + rng() % cols);
    const std::size_t min_child = 1 + rng() % 3;

    std::optional<std::size_t> want;
    Frac best;
    std::array<int, 2> parent{0, 0};
    for (auto s : samples) ++parent[y[s]];
    for (std::size_t f : cand) {
      std::array<int, 2> l{0, 0}, r{0, 0};
      for (auto s : samples) ++(x[s * cols + f] ? r : l)[y[s]];
      if (static_cast<std::size_t>(l[0] + l[1]) < min_child || static_cast<std::size_t>(r[0] + r[1]) < min_child) continue;
      const Frac g = gini_gain({l, r}, parent);
      if (g.num <= 0) continue;
      if (!want || frac_less(best, g) || (frac_eq(best, g) && f < *want)) {
        want = f;
        best = g;
      }
    }
    const auto got = best_split({x, rows, cols}, y, samples, cand, min_child);
    bool ok = got.has_value() == want.has_value();
    if (ok && got) {
      const double want_decrease = static_cast<double>(best.num) / static_cast<double>(best.den) / static_cast<double>(n);
      ok = got->feature == *want && std::abs(got->impurity_decrease - want_decrease) <= 1e-12;
    }
    agree += ok;
    if (!ok && first_bad.empty()) first_bad = fmt(" (first disagreement at case %d)", trial);
  }
  return {agree == 1000, fmt("%zu/1000 random datasets agree with brute force%s", agree, first_bad.c_str())};
}

// 5. Boosting oracle ---------------------------------------------------------

Outcome boosting_oracle() {
  // Feature 0 separates y; feature 1 carries no signal. With p = 2/3 everywhere,
  // g = 2/3 for y = 0 and -1/3 for y = 1, h = 2/9.
  //   left  (x0 = 0, y = 0,0,1): G = 1,  H = 2/3 -> -0.1 * 1 / (2/3 + 1) = -0.06
  //   right (x0 = 1, y = 1,1,1): G = -1, H = 2/3 ->  0.06
  const std::vector<std::uint8_t> x{0, 0, 0, 1, 0, 0, 1, 1, 1, 0, 1, 1};
  const std::vector<std::uint8_t> y{0, 0, 1, 1, 1, 1};
  GbtParams p;
  p.n_rounds = 1;
  p.max_depth = 1;
  p.learning_rate = 0.1;
  p.lambda = 1.0;
  p.gamma = 0.0;
  p.min_child_hessian = 0.0;
  const GbtModel m = fit_gbt({x, 6, 2}, y, p);
  const auto& nodes = m.rounds.at(0).nodes;
  bool hand = nodes.size() == 3 && nodes[0].feature == 0 && std::abs(m.base_score - std::log(2.0)) <= kGbtLeafTol &&
              std::abs(nodes[nodes[0].left].value - (-0.06)) <= kGbtLeafTol &&
              std::abs(nodes[nodes[0].right].value - 0.06) <= kGbtLeafTol;

  // Loss monotonicity over 200 rounds on a set of fixtures.
  std::size_t fixtures = 0, monotone = 0;
  GbtParams q;  // defaults: 200 rounds, eta 0.1, gamma 0
  Rng rng = make_stream(505);
  for (int i = 0; i < 4; ++i) {
    const std::size_t N = 200 + 100 * static_cast<std::size_t>(i), D = 8 + static_cast<std::size_t>(i) * 4;
    std::vector<std::uint8_t> X(N * D), Y(N);
    for (std::size_t r = 0; r < N; ++r) {
      for (std::size_t c = 0; c < D; ++c) X[r * D + c] = bernoulli(rng, 0.4);
      Y[r] = (X[r * D] ^ X[r * D + 1]) != bernoulli(rng, 0.15);
    }
    const GbtModel g = fit_gbt({X, N, D}, Y, q);
    ++fixtures;
    monotone += std::is_sorted(g.train_loss.rbegin(), g.train_loss.rend());
  }
  BandSpec band;
  band.minutes = 1500;
  for (std::uint64_t i = 0; i < 4; ++i) band.channels.push_back({LaggedKind{3, {0.4, 0.0, -1.0}, 0.3, 0.3}, 9 + i});
  for (std::uint64_t i = 0; i < 4; ++i) band.channels.push_back({MarkovKind{0.1, 0.3, 0}, 19 + i});
  const WindowedDataset ds = build_windows(gen_band(band), 10);
  const MultiOutputGbt mg = fit_gbt_multi(ds.feature_view(), ds.target_view(), q, 3);
  for (const auto& g : mg.per_bin) {
    ++fixtures;
    monotone += g.train_loss.size() == q.n_rounds + 1 && std::is_sorted(g.train_loss.rbegin(), g.train_loss.rend());
  }
  return {hand && monotone == fixtures,
          fmt("hand-traced leaves %s; loss non-increasing on %zu/%zu fixtures", hand ? "match" : "DIFFER", monotone, fixtures)};
}

// 6. LSTM gradient check -------------------------------------------------------

// Independent scalar forward pass and loss in long double, for finite
// differences that are not swamped by rounding on small gradients.
using wide = long double;

wide wide_loss(const std::vector<wide>& p, std::size_t F, std::size_t H, std::span<const std::uint8_t> seq,
               std::size_t K, std::span<const std::uint8_t> target) {
  const std::size_t G = 4 * H;
  const wide* Wx = p.data();
  const wide* Wh = Wx + F * G;
  const wide* b = Wh + H * G;
  const wide* Wy = b + G;
  const wide* by = Wy + F * H;
  const auto sig = [](wide z) { return 1.0L / (1.0L + std::exp(-z)); };
  std::vector<wide> h(H, 0.0L), c(H, 0.0L), a(G);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t q = 0; q < G; ++q) {
      wide s = b[q];
      for (std::size_t j = 0; j < F; ++j) s += Wx[j * G + q] * seq[k * F + j];
      for (std::size_t m = 0; m < H; ++m) s += Wh[m * G + q] * h[m];
      a[q] = s;
    }
    for (std::size_t u = 0; u < H; ++u) {
      c[u] = sig(a[H + u]) * c[u] + sig(a[u]) * std::tanh(a[3 * H + u]);
      h[u] = sig(a[2 * H + u]) * std::tanh(c[u]);
    }
  }
  wide loss = 0.0L;
  for (std::size_t o = 0; o < F; ++o) {
    wide z = by[o];
    for (std::size_t m = 0; m < H; ++m) z += Wy[o * H + m] * h[m];
    loss += std::max(z, 0.0L) - z * target[o] + std::log1p(std::exp(-std::abs(z)));
  }
  return loss / static_cast<wide>(F);
}

Outcome lstm_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_stream(606);
  double worst = 0.0;
  std::size_t checked = 0;
  for (int i = 0; i < 10; ++i) {
    const std::size_t H = i % 2 ? 8 : 4;
    const std::size_t F = 2 + rng() % 4, K = 2 + rng() % 5;
    OccupancyGrid g(F, K + 6);
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t t = 0; t < g.minutes(); ++t) g.set(f, t, bernoulli(rng, 0.5));
    const WindowedDataset ds = build_windows(g, K);
    LstmWeights w = init_weights(F, H, 1000 + static_cast<std::uint64_t>(i));
    // Push weights off the initialization scale so gates are not all near 0.5.
    for (auto& v : w.params) v += 0.3 * (2.0 * uniform01(rng) - 1.0);
    for (std::size_t row = 0; row < ds.examples; row += 2) {
      const std::size_t one[] = {row};
      const LossGrad an = loss_and_gradient(w, ds, one);
      std::vector<wide> p(w.params.begin(), w.params.end());
      const wide eps = 1e-6L;
      for (std::size_t j = 0; j < p.size(); ++j) {
        const wide orig = p[j];
        p[j] = orig + eps;
        const wide lp = wide_loss(p, F, H, ds.row(row), K, ds.target(row));
        p[j] = orig - eps;
        const wide lm = wide_loss(p, F, H, ds.row(row), K, ds.target(row));
        p[j] = orig;
        const double fd = static_cast<double>((lp - lm) / (2.0L * eps));
        const double ga = an.grad[j];
        worst = std::max(worst, std::abs(ga - fd) / std::max(1e-12, std::abs(ga) + std::abs(fd)));
        ++checked;
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst < kGradRelTol && t < kGradBudgetS,
          fmt("max relative error %.3g over %zu parameters in 10 fixtures, %.2f s", worst, checked, t)};
}

// 7, 8, 10. The 90-bin mixed band --------------------------------------------

struct BandRun {
  std::vector<std::size_t> lagged, statics;
  std::map<std::string, ScoreMatrix> scores;
  std::map<std::string, EvalReport> reports;
  std::map<std::string, double> seconds;
  double total_seconds = 0.0;
};

BandSpec mixed_band() {
  BandSpec b;
  b.minutes = 20000;
  std::uint64_t seed = 7000;
  for (int i = 0; i < 8; ++i) b.channels.push_back({StaticKind{0, 0.0}, seed++});
  for (int i = 0; i < 7; ++i) b.channels.push_back({StaticKind{1, 0.0}, seed++});
  for (int i = 0; i < 20; ++i)
    b.channels.push_back({MarkovKind{0.02 + 0.01 * i, 0.05 + 0.015 * i, i % 2}, seed++});
  for (int i = 0; i < 25; ++i)
    b.channels.push_back({PeriodicKind{4 + i % 7, 0.3 + 0.05 * (i % 5), 0.02, i}, seed++});
  // Lagged bins: s_t = NOT s_{t-d} (plus a weaker lag-1 term for some), corrupted by noise.
  for (int i = 0; i < 30; ++i) {
    const int d = 2 + i % 4;
    std::vector<double> w(static_cast<std::size_t>(d), 0.0);
    w.back() = -1.0;
    if (i % 3 == 1) w.front() = 0.3;
    b.channels.push_back({LaggedKind{d, w, 0.5, 0.2 + 0.02 * (i % 5)}, seed++});
  }
  return b;
}

RunConfig band_config(Method m) {
  RunConfig c;
  c.method = m;
  c.history = 10;
  c.train_fraction = 0.8;
  // Desk-scale settings: fewer trees and boosting rounds than the library
  // defaults, and a wider LSTM training schedule, to fit the time budget.
  c.forest.n_trees = 30;
  c.forest.mtry = 90;
  c.gbt.n_rounds = 60;
  c.gbt.max_depth = 4;
  c.lstm.hidden_size = 64;
  c.lstm.epochs = 20;
  c.lstm.batch_size = 64;
  c.lstm.learning_rate = 1e-2;
  return c;
}

const BandRun& band_run() {
  static std::optional<BandRun> cached;
  if (cached) return *cached;
  BandRun r;
  const auto t_all = std::chrono::steady_clock::now();
  const BandSpec band = mixed_band();
  for (std::size_t f = 0; f < band.channels.size(); ++f) {
    if (std::holds_alternative<LaggedKind>(band.channels[f].kind)) r.lagged.push_back(f);
    if (const auto* s = std::get_if<StaticKind>(&band.channels[f].kind); s && s->flip_prob == 0.0) r.statics.push_back(f);
  }
  const OccupancyGrid grid = gen_band(band);
  const auto [train, test] = chronological_split(grid, 0.8, 10);
  const WindowedDataset train_ds = build_windows(train, 10);
  const WindowedDataset test_ds = build_windows(test, 10);
  for (Method m : {Method::markov, Method::rf, Method::gbt, Method::lstm}) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig c = band_config(m);
    const TrainedModel model = train_model(train_ds, train, c);
    ScoreMatrix sm = score_model(model, test_ds);
    r.reports[method_name(m)] = evaluate(sm, eval_options(c, grid));
    r.scores[method_name(m)] = std::move(sm);
    r.seconds[method_name(m)] = seconds_since(t0);
  }
  r.total_seconds = seconds_since(t_all);
  cached = std::move(r);
  return *cached;
}

Outcome direction_of_effect() {
  const BandRun& r = band_run();
  const auto& mk = r.reports.at("markov");
  const OperatingPoint mk_lag = pd_at_pfa(r.scores.at("markov").select_bins(r.lagged), 0.01);
  bool pass = r.total_seconds < kBandBudgetS;
  std::string detail = fmt("markov acc %.4f pd1 %.4f lagged-pd1 %.4f", mk.average_accuracy, mk.pd_all[0].pd, mk_lag.pd);
  for (const char* name : {"rf", "gbt", "lstm"}) {
    const auto& rep = r.reports.at(name);
    const OperatingPoint lag = pd_at_pfa(r.scores.at(name).select_bins(r.lagged), 0.01);
    const bool ok = rep.average_accuracy > mk.average_accuracy && rep.pd_all[0].pd > mk.pd_all[0].pd &&
                    lag.pd - mk_lag.pd >= kLaggedPdGap;
    pass = pass && ok;
    detail += fmt("; %s acc %.4f pd1 %.4f lagged-pd1 %.4f (%.0f s)%s", name, rep.average_accuracy, rep.pd_all[0].pd,
                  lag.pd, r.seconds.at(name), ok ? "" : " <- below markov");
  }
  return {pass, detail + fmt("; total %.0f s", r.total_seconds)};
}

Outcome static_bins() {
  const BandRun& r = band_run();
  double worst = 1.0;
  std::string worst_at;
  for (const auto& [name, rep] : r.reports)
    for (auto f : r.statics)
      if (rep.per_bin_accuracy[f] < worst) {
        worst = rep.per_bin_accuracy[f];
        worst_at = fmt(" (%s, bin %zu)", name.c_str(), f);
      }
  return {worst >= kStaticAccuracy, fmt("lowest static-bin accuracy %.4f%s over %zu bins x 4 methods", worst,
                                         worst_at.c_str(), r.statics.size())};
}

Outcome calibration_contract() {
  const BandRun& r = band_run();
  bool pass = true;
  std::string detail;
  for (const auto& [name, rep] : r.reports) {
    for (const auto* ops : {&rep.pd_all, &rep.pd_dynamic}) {
      if (ops->empty()) continue;
      for (const auto& op : *ops) pass = pass && op.achieved_pfa <= op.target_pfa;
      pass = pass && ops->size() == 2 && (*ops)[1].pd >= (*ops)[0].pd;
    }
    detail += fmt("%s%s Pfa %.4f/%.4f Pd %.4f/%.4f", detail.empty() ? "" : "; ", name.c_str(), rep.pd_all[0].achieved_pfa,
                  rep.pd_all[1].achieved_pfa, rep.pd_all[0].pd, rep.pd_all[1].pd);
  }
  return {pass, detail};
}

// 9. Dynamics regression -----------------------------------------------------

Outcome dynamics_regression() {
  BandSpec band;
  band.minutes = 20000;
  const int F = 25;
  for (int i = 0; i < F; ++i) {
    const double p = 0.01 + (0.5 - 0.01) * i / (F - 1);
    band.channels.push_back({MarkovKind{p, p, 0}, 900 + static_cast<std::uint64_t>(i)});
  }
  const OccupancyGrid grid = gen_band(band);
  RunConfig c;
  c.method = Method::markov;
  const auto [train, test] = chronological_split(grid, c.train_fraction, c.history);
  const ScoreMatrix sm = score_model(train_model(train, c), build_windows(test, c.history));
  const EvalReport rep = evaluate(sm, eval_options(c, grid));
  const bool pass = rep.fit && rep.fit->pearson_r < kRegressionR;
  return {pass, rep.fit ? fmt("Pearson r %.4f, slope %.3g per transition", rep.fit->pearson_r, rep.fit->slope) : "no fit"};
}

// 11. Determinism ------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "specpred_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  BandSpec band;
  band.minutes = 1200;
  for (std::uint64_t i = 0; i < 4; ++i) band.channels.push_back({MarkovKind{0.1, 0.2, 0}, i});
  for (std::uint64_t i = 0; i < 4; ++i) band.channels.push_back({LaggedKind{3, {0.0, 0.0, -1.0}, 0.5, 0.25}, 10 + i});
  band.channels.push_back({StaticKind{1, 0.0}, 20});
  std::ofstream(root / "band.json") << io::band_to_json(band).dump(2);

  std::size_t identical = 0, compared = 0;
  std::string bad;
  const int max_threads = omp_get_max_threads();
  for (Method m : {Method::markov, Method::rf, Method::gbt, Method::lstm}) {
    RunConfig c;
    c.spec_path = (root / "band.json").string();
    c.method = m;
    c.forest.n_trees = 8;
    c.gbt.n_rounds = 15;
    c.lstm.hidden_size = 8;
    c.lstm.epochs = 2;
    for (int run = 0; run < 2; ++run) {
      c.out_dir = (root / (method_name(m) + "_" + std::to_string(run))).string();
      omp_set_num_threads(run == 0 ? 1 : 4);
      run_pipeline(c);
    }
    for (const char* file : {"report.json", "model.json", "scores.csv", "grid.csv", "per_bin.csv"}) {
      ++compared;
      const bool same = slurp(root / (method_name(m) + "_0") / file) == slurp(root / (method_name(m) + "_1") / file);
      identical += same;
      if (!same && bad.empty()) bad = fmt(" (first difference: %s/%s)", method_name(m).c_str(), file);
    }
  }
  omp_set_num_threads(max_threads);
  fs::remove_all(root);
  return {identical == compared,
          fmt("%zu/%zu artifacts byte-identical across runs with 1 and 4 threads%s", identical, compared, bad.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"occupancy round-trip", occupancy_round_trip},
      {"markov consistency", markov_consistency},
      {"markov K-invariance", markov_k_invariance},
      {"split-finding oracle", split_oracle},
      {"boosting oracle", boosting_oracle},
      {"LSTM gradient check", lstm_gradients},
      {"direction of effect (90-bin band)", direction_of_effect},
      {"static-bin accuracy", static_bins},
      {"dynamics regression", dynamics_regression},
      {"calibration contract", calibration_contract},
      {"determinism", determinism},
  };
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::stoul(argv[i]));
  if (selected.empty())
    for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(i);

  int failed = 0;
  for (std::size_t id : selected) {
    if (id < 1 || id > criteria.size()) {
      std::printf("criterion %zu: no such criterion\n", id);
      ++failed;
      continue;
    }
    const auto& [name, fn] = criteria[id - 1];
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] criterion %2zu  %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
