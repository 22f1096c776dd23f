#define EIGEN_DONT_PARALLELIZE
#include "specpred/lstm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace specpred {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const Mat>;
using MutMap = Eigen::Map<Mat>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// Rows per gradient chunk. Chunk sums are reduced in index order, so the
// result does not depend on how many threads process the chunks.
constexpr std::size_t kChunk = 32;

double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Stable per-element sigmoid cross-entropy.
double bce(double z, int y) { return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z))); }

struct ParamViews {
  ConstMap wx, wh, wy;
  Eigen::Map<const RowVec> b, by;

  explicit ParamViews(const LstmWeights& w)
      : wx(w.params.data() + w.wx_offset(), static_cast<Eigen::Index>(w.inputs), static_cast<Eigen::Index>(4 * w.hidden)),
        wh(w.params.data() + w.wh_offset(), static_cast<Eigen::Index>(w.hidden), static_cast<Eigen::Index>(4 * w.hidden)),
        wy(w.params.data() + w.wy_offset(), static_cast<Eigen::Index>(w.inputs), static_cast<Eigen::Index>(w.hidden)),
        b(w.params.data() + w.b_offset(), static_cast<Eigen::Index>(4 * w.hidden)),
        by(w.params.data() + w.by_offset(), static_cast<Eigen::Index>(w.inputs)) {}
};

// Activations of one chunk, kept for the backward pass.
struct ChunkTrace {
  std::vector<Mat> x;      // K of B x F
  std::vector<Mat> gates;  // K of B x 4H, post-activation
  std::vector<Mat> c;      // K+1 of B x H
  std::vector<Mat> h;      // K+1 of B x H
  std::vector<Mat> tc;     // K of B x H, tanh(c)
  Mat z;                   // B x F logits
};

ChunkTrace forward_chunk(const LstmWeights& w, const WindowedDataset& ds, std::span<const std::size_t> rows) {
  const auto B = static_cast<Eigen::Index>(rows.size());
  const auto F = static_cast<Eigen::Index>(w.inputs);
  const auto H = static_cast<Eigen::Index>(w.hidden);
  const std::size_t K = ds.history;
  const ParamViews p(w);
  ChunkTrace tr;
  tr.x.assign(K, Mat(B, F));
  tr.gates.assign(K, Mat(B, 4 * H));
  tr.c.assign(K + 1, Mat::Zero(B, H));
  tr.h.assign(K + 1, Mat::Zero(B, H));
  tr.tc.assign(K, Mat(B, H));
  for (std::size_t k = 0; k < K; ++k) {
    Mat& x = tr.x[k];
    for (Eigen::Index r = 0; r < B; ++r)
      for (Eigen::Index f = 0; f < F; ++f)
        x(r, f) = ds.seq(rows[static_cast<std::size_t>(r)], k, static_cast<std::size_t>(f));
    Mat& a = tr.gates[k];
    a.noalias() = x * p.wx;
    a.noalias() += tr.h[k] * p.wh;
    a.rowwise() += p.b;
    auto sigm = a.leftCols(3 * H).array();
    sigm = 1.0 / (1.0 + (-sigm).exp());
    a.rightCols(H) = a.rightCols(H).array().tanh().matrix();
    const auto i = a.middleCols(0, H).array();
    const auto fg = a.middleCols(H, H).array();
    const auto o = a.middleCols(2 * H, H).array();
    const auto g = a.middleCols(3 * H, H).array();
    tr.c[k + 1] = (fg * tr.c[k].array() + i * g).matrix();
    tr.tc[k] = tr.c[k + 1].array().tanh().matrix();
    tr.h[k + 1] = (o * tr.tc[k].array()).matrix();
  }
  tr.z.noalias() = tr.h[K] * p.wy.transpose();
  tr.z.rowwise() += p.by;
  return tr;
}

// Adds the gradient of sum_n loss_n * scale into `grad`; returns sum_n loss_n.
double backward_chunk(const LstmWeights& w, const WindowedDataset& ds, std::span<const std::size_t> rows,
                      double scale, std::span<double> grad) {
  const ChunkTrace tr = forward_chunk(w, ds, rows);
  const auto B = static_cast<Eigen::Index>(rows.size());
  const auto F = static_cast<Eigen::Index>(w.inputs);
  const auto H = static_cast<Eigen::Index>(w.hidden);
  const std::size_t K = ds.history;
  const ParamViews p(w);

  MutMap gwx(grad.data() + w.wx_offset(), F, 4 * H);
  MutMap gwh(grad.data() + w.wh_offset(), H, 4 * H);
  Eigen::Map<RowVec> gb(grad.data() + w.b_offset(), 4 * H);
  MutMap gwy(grad.data() + w.wy_offset(), F, H);
  Eigen::Map<RowVec> gby(grad.data() + w.by_offset(), F);

  Mat dz(B, F);
  double loss_sum = 0.0;
  for (Eigen::Index r = 0; r < B; ++r) {
    const auto target = ds.target(rows[static_cast<std::size_t>(r)]);
    double l = 0.0;
    for (Eigen::Index f = 0; f < F; ++f) {
      const double z = tr.z(r, f);
      const int y = target[static_cast<std::size_t>(f)];
      l += bce(z, y);
      dz(r, f) = (sig(z) - y) * scale;
    }
    loss_sum += l / static_cast<double>(F);
  }

  gwy.noalias() += dz.transpose() * tr.h[K];
  gby += dz.colwise().sum();
  Mat dh = dz * p.wy;
  Mat dc = Mat::Zero(B, H);
  Mat da(B, 4 * H);
  for (std::size_t k = K; k-- > 0;) {
    const Mat& a = tr.gates[k];
    const auto i = a.middleCols(0, H).array();
    const auto fg = a.middleCols(H, H).array();
    const auto o = a.middleCols(2 * H, H).array();
    const auto g = a.middleCols(3 * H, H).array();
    const auto tc = tr.tc[k].array();
    dc.array() += dh.array() * o * (1.0 - tc * tc);
    da.middleCols(0, H) = (dc.array() * g * i * (1.0 - i)).matrix();
    da.middleCols(H, H) = (dc.array() * tr.c[k].array() * fg * (1.0 - fg)).matrix();
    da.middleCols(2 * H, H) = (dh.array() * tc * o * (1.0 - o)).matrix();
    da.middleCols(3 * H, H) = (dc.array() * i * (1.0 - g * g)).matrix();
    dc.array() *= fg;
    gwx.noalias() += tr.x[k].transpose() * da;
    gwh.noalias() += tr.h[k].transpose() * da;
    gb += da.colwise().sum();
    dh.noalias() = da * p.wh.transpose();
  }
  return loss_sum;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

void require_shapes(const LstmWeights& w, const WindowedDataset& ds) {
  if (ds.bins != w.inputs) throw InputError("dataset bin count does not match the LSTM input width");
  if (ds.history == 0) throw InputError("LSTM needs sequences of length >= 1");
}

}  // namespace

LstmWeights::LstmWeights(std::size_t in, std::size_t hid)
    : inputs(in), hidden(hid), params(param_count(in, hid), 0.0) {}

std::size_t LstmWeights::param_count(std::size_t in, std::size_t hid) {
  return in * 4 * hid + hid * 4 * hid + 4 * hid + in * hid + in;
}

bool LstmWeights::all_finite() const {
  return std::all_of(params.begin(), params.end(), [](double v) { return std::isfinite(v); });
}

LstmWeights init_weights(std::size_t inputs, std::size_t hidden, std::uint64_t seed) {
  if (inputs == 0 || hidden == 0) throw InputError("LSTM sizes must be positive");
  LstmWeights w(inputs, hidden);
  Rng rng = make_stream(seed, 0x11);
  const double a = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto& v : w.params) v = a * (2.0 * uniform01(rng) - 1.0);
  for (std::size_t q = 0; q < 4 * hidden; ++q) w.b(q) = (q >= hidden && q < 2 * hidden) ? 1.0 : 0.0;
  for (std::size_t o = 0; o < inputs; ++o) w.by(o) = 0.0;
  return w;
}

CellState cell_forward(std::span<const double> x, std::span<const double> h, std::span<const double> c,
                       const LstmWeights& w) {
  const std::size_t H = w.hidden;
  if (x.size() != w.inputs || h.size() != H || c.size() != H) throw InputError("LSTM cell input shapes do not match");
  CellState out{std::vector<double>(H), std::vector<double>(H)};
  std::vector<double> a(4 * H);
  for (std::size_t q = 0; q < 4 * H; ++q) {
    double s = w.b(q);
    for (std::size_t j = 0; j < x.size(); ++j) s += w.wx(j, q) * x[j];
    for (std::size_t m = 0; m < H; ++m) s += w.wh(m, q) * h[m];
    a[q] = s;
  }
  for (std::size_t u = 0; u < H; ++u) {
    const double i = sig(a[u]);
    const double f = sig(a[H + u]);
    const double o = sig(a[2 * H + u]);
    const double g = std::tanh(a[3 * H + u]);
    out.c[u] = f * c[u] + i * g;
    out.h[u] = o * std::tanh(out.c[u]);
  }
  return out;
}

std::vector<double> forward(std::span<const std::uint8_t> sequence, std::size_t steps, const LstmWeights& w) {
  if (steps == 0 || sequence.size() != steps * w.inputs)
    throw InputError("sequence length does not match K x F");
  CellState s{std::vector<double>(w.hidden, 0.0), std::vector<double>(w.hidden, 0.0)};
  std::vector<double> x(w.inputs);
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t f = 0; f < w.inputs; ++f) x[f] = sequence[k * w.inputs + f];
    s = cell_forward(x, s.h, s.c, w);
  }
  std::vector<double> z(w.inputs);
  for (std::size_t o = 0; o < w.inputs; ++o) {
    double v = w.by(o);
    for (std::size_t m = 0; m < w.hidden; ++m) v += w.wy(o, m) * s.h[m];
    z[o] = v;
  }
  return z;
}

double bce_loss(std::span<const double> logits, std::span<const std::uint8_t> targets) {
  if (logits.size() != targets.size() || logits.empty()) throw InputError("logit and target lengths differ");
  double s = 0.0;
  for (std::size_t f = 0; f < logits.size(); ++f) s += bce(logits[f], targets[f]);
  return s / static_cast<double>(logits.size());
}

LossGrad loss_and_gradient(const LstmWeights& w, const WindowedDataset& ds, std::span<const std::size_t> rows) {
  require_shapes(w, ds);
  if (rows.empty()) throw InputError("gradient needs at least one example");
  const std::size_t B = rows.size();
  const std::size_t P = w.params.size();
  const std::size_t chunks = (B + kChunk - 1) / kChunk;
  const double scale = 1.0 / (static_cast<double>(B) * static_cast<double>(w.inputs));
  std::vector<std::vector<double>> part(chunks, std::vector<double>(P, 0.0));
  std::vector<double> loss(chunks, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(chunks); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    const std::size_t begin = c * kChunk;
    const std::size_t len = std::min(kChunk, B - begin);
    loss[c] = backward_chunk(w, ds, rows.subspan(begin, len), scale, part[c]);
  }
  LossGrad out{0.0, std::move(part[0])};
  out.loss = loss[0];
  for (std::size_t c = 1; c < chunks; ++c) {
    for (std::size_t i = 0; i < P; ++i) out.grad[i] += part[c][i];
    out.loss += loss[c];
  }
  out.loss /= static_cast<double>(B);
  return out;
}

double clip_gradients(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
  return norm;
}

std::vector<double> LstmModel::predict(const WindowedDataset& ds) const {
  require_shapes(weights, ds);
  if (ds.history != history) throw InputError("dataset history length does not match the LSTM model");
  const std::size_t F = weights.inputs;
  std::vector<double> out(ds.examples * F);
  const auto rows = all_rows(ds.examples);
  const std::size_t chunks = (ds.examples + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(chunks); ++ci) {
    const std::size_t begin = static_cast<std::size_t>(ci) * kChunk;
    const std::size_t len = std::min(kChunk, ds.examples - begin);
    const ChunkTrace tr = forward_chunk(weights, ds, std::span<const std::size_t>(rows).subspan(begin, len));
    for (std::size_t r = 0; r < len; ++r)
      for (std::size_t f = 0; f < F; ++f)
        out[(begin + r) * F + f] = sig(tr.z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)));
  }
  return out;
}

LstmModel train_lstm(const WindowedDataset& ds, const LstmConfig& cfg) {
  if (ds.examples == 0) throw InputError("LSTM training set is empty");
  if (cfg.hidden_size == 0 || cfg.batch_size == 0 || !(cfg.learning_rate > 0.0))
    throw InputError("LSTM hidden size, batch size and learning rate must be positive");
  LstmModel model;
  model.config = cfg;
  model.history = ds.history;
  model.weights = init_weights(ds.bins, cfg.hidden_size, cfg.seed);
  require_shapes(model.weights, ds);

  auto& w = model.weights;
  const std::size_t P = w.params.size();
  std::vector<double> m1(P, 0.0), m2(P, 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t step = 0;
  auto order = all_rows(ds.examples);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_stream(cfg.seed, 0x22, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batch = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - begin);
      LossGrad lg = loss_and_gradient(w, ds, std::span<const std::size_t>(order).subspan(begin, len));
      if (!std::isfinite(lg.loss))
        throw TrainingError("nonfinite LSTM loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch));
      epoch_loss += lg.loss * static_cast<double>(len);
      clip_gradients(lg.grad, cfg.grad_clip_norm);
      ++step;
      if (cfg.optimizer == Optimizer::sgd) {
        for (std::size_t i = 0; i < P; ++i) w.params[i] -= cfg.learning_rate * lg.grad[i];
      } else {
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        for (std::size_t i = 0; i < P; ++i) {
          const double g = lg.grad[i];
          m1[i] = beta1 * m1[i] + (1.0 - beta1) * g;
          m2[i] = beta2 * m2[i] + (1.0 - beta2) * g * g;
          w.params[i] -= cfg.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
        }
      }
    }
    model.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  if (!w.all_finite()) throw TrainingError("LSTM weights became nonfinite");
  return model;
}

double grad_check(const LstmWeights& w, const WindowedDataset& ds, std::size_t row, double epsilon,
                  std::size_t n_params, std::uint64_t seed) {
  require_shapes(w, ds);
  if (row >= ds.examples) throw InputError("grad-check row out of range");
  const std::size_t one[] = {row};
  const LossGrad analytic = loss_and_gradient(w, ds, one);
  const auto seq = ds.row(row);
  const auto target = ds.target(row);
  const std::size_t P = w.params.size();

  std::vector<std::size_t> pick(P);
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  Rng rng = make_stream(seed, 0x33);
  std::shuffle(pick.begin(), pick.end(), rng);
  pick.resize(std::min(n_params, P));

  LstmWeights probe = w;
  double worst = 0.0;
  for (std::size_t i : pick) {
    const double orig = probe.params[i];
    probe.params[i] = orig + epsilon;
    const double lp = bce_loss(forward(seq, ds.history, probe), target);
    probe.params[i] = orig - epsilon;
    const double lm = bce_loss(forward(seq, ds.history, probe), target);
    probe.params[i] = orig;
    const double fd = (lp - lm) / (2.0 * epsilon);
    const double ga = analytic.grad[i];
    worst = std::max(worst, std::abs(ga - fd) / std::max(1e-8, std::abs(ga) + std::abs(fd)));
  }
  return worst;
}

namespace reference {

LossGrad loss_and_gradient(const LstmWeights& w, const WindowedDataset& ds, std::span<const std::size_t> rows) {
  require_shapes(w, ds);
  const std::size_t F = w.inputs;
  const std::size_t H = w.hidden;
  const std::size_t K = ds.history;
  const double scale = 1.0 / (static_cast<double>(rows.size()) * static_cast<double>(F));
  LossGrad out{0.0, std::vector<double>(w.params.size(), 0.0)};
  auto& g = out.grad;

  for (std::size_t row : rows) {
    // Forward with full per-step trace.
    std::vector<std::vector<double>> hs(K + 1, std::vector<double>(H, 0.0)), cs = hs;
    std::vector<std::vector<double>> gi(K, std::vector<double>(H)), gf = gi, go = gi, gg = gi;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t u = 0; u < H; ++u) {
        double a[4];
        for (std::size_t gate = 0; gate < 4; ++gate) {
          const std::size_t q = gate * H + u;
          double s = w.b(q);
          for (std::size_t j = 0; j < F; ++j) s += w.wx(j, q) * ds.seq(row, k, j);
          for (std::size_t m = 0; m < H; ++m) s += w.wh(m, q) * hs[k][m];
          a[gate] = s;
        }
        gi[k][u] = sig(a[0]);
        gf[k][u] = sig(a[1]);
        go[k][u] = sig(a[2]);
        gg[k][u] = std::tanh(a[3]);
        cs[k + 1][u] = gf[k][u] * cs[k][u] + gi[k][u] * gg[k][u];
        hs[k + 1][u] = go[k][u] * std::tanh(cs[k + 1][u]);
      }
    }
    std::vector<double> dh(H, 0.0);
    const auto target = ds.target(row);
    double l = 0.0;
    for (std::size_t o = 0; o < F; ++o) {
      double z = w.by(o);
      for (std::size_t m = 0; m < H; ++m) z += w.wy(o, m) * hs[K][m];
      l += bce(z, target[o]);
      const double dz = (sig(z) - target[o]) * scale;
      g[w.by_offset() + o] += dz;
      for (std::size_t m = 0; m < H; ++m) {
        g[w.wy_offset() + o * H + m] += dz * hs[K][m];
        dh[m] += dz * w.wy(o, m);
      }
    }
    out.loss += l / static_cast<double>(F);

    std::vector<double> dc(H, 0.0), da(4 * H);
    for (std::size_t k = K; k-- > 0;) {
      for (std::size_t u = 0; u < H; ++u) {
        const double tc = std::tanh(cs[k + 1][u]);
        dc[u] += dh[u] * go[k][u] * (1.0 - tc * tc);
        da[u] = dc[u] * gg[k][u] * gi[k][u] * (1.0 - gi[k][u]);
        da[H + u] = dc[u] * cs[k][u] * gf[k][u] * (1.0 - gf[k][u]);
        da[2 * H + u] = dh[u] * tc * go[k][u] * (1.0 - go[k][u]);
        da[3 * H + u] = dc[u] * gi[k][u] * (1.0 - gg[k][u] * gg[k][u]);
        dc[u] *= gf[k][u];
      }
      for (std::size_t q = 0; q < 4 * H; ++q) {
        g[w.b_offset() + q] += da[q];
        for (std::size_t j = 0; j < F; ++j) g[w.wx_offset() + j * 4 * H + q] += ds.seq(row, k, j) * da[q];
        for (std::size_t m = 0; m < H; ++m) g[w.wh_offset() + m * 4 * H + q] += hs[k][m] * da[q];
      }
      for (std::size_t m = 0; m < H; ++m) {
        double s = 0.0;
        for (std::size_t q = 0; q < 4 * H; ++q) s += w.wh(m, q) * da[q];
        dh[m] = s;
      }
    }
  }
  out.loss /= static_cast<double>(rows.size());
  return out;
}

}  // namespace reference

}  // namespace specpred
