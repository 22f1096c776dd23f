#include "specpred/boost.hpp"

#include <algorithm>
#include <cmath>

namespace specpred {

GradHess logistic_grad_hess(double margin, int label) {
  const double p = sigmoid(margin);
  return {p - static_cast<double>(label), p * (1.0 - p)};
}

double leaf_value(double G, double H, double lambda, double eta) { return -eta * G / (H + lambda); }

double split_gain(double GL, double HL, double GR, double HR, double lambda, double gamma) {
  const double G = GL + GR;
  const double H = HL + HR;
  return 0.5 * (GL * GL / (HL + lambda) + GR * GR / (HR + lambda) - G * G / (H + lambda)) - gamma;
}

double logistic_loss(std::span<const double> margins, std::span<const std::uint8_t> labels) {
  double sum = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const double m = margins[i];
    // -[y log s(m) + (1-y) log(1-s(m))] = max(m, 0) - y m + log(1 + e^-|m|)
    sum += std::max(m, 0.0) - labels[i] * m + std::log1p(std::exp(-std::abs(m)));
  }
  return margins.empty() ? 0.0 : sum / static_cast<double>(margins.size());
}

SparseRows SparseRows::from(const BinaryMatrixView& X) {
  SparseRows s;
  s.cols = X.cols;
  s.offsets.resize(X.rows + 1, 0);
  for (std::size_t r = 0; r < X.rows; ++r) {
    std::size_t nnz = 0;
    for (auto v : X.row(r)) nnz += v;
    s.offsets[r + 1] = s.offsets[r] + nnz;
  }
  s.index.resize(s.offsets.back());
  for (std::size_t r = 0; r < X.rows; ++r) {
    std::size_t k = s.offsets[r];
    const auto row = X.row(r);
    for (std::size_t j = 0; j < row.size(); ++j)
      if (row[j]) s.index[k++] = static_cast<std::uint32_t>(j);
  }
  return s;
}

double RegTree::predict(std::span<const std::uint8_t> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& nd = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] ? nd.right : nd.left);
  }
  return nodes[i].value;
}

namespace {

struct Hist {
  std::vector<double> G, H;
  std::vector<std::uint32_t> C;

  explicit Hist(std::size_t d) : G(d, 0.0), H(d, 0.0), C(d, 0) {}

  void accumulate(const SparseRows& X, std::span<const double> g, std::span<const double> h,
                  std::span<const std::uint32_t> samples) {
    for (auto s : samples) {
      const double gs = g[s];
      const double hs = h[s];
      for (auto j : X.row(s)) {
        G[j] += gs;
        H[j] += hs;
        ++C[j];
      }
    }
  }

  void subtract(const Hist& o) {
    for (std::size_t j = 0; j < G.size(); ++j) {
      G[j] -= o.G[j];
      H[j] -= o.H[j];
      C[j] -= o.C[j];
    }
  }
};

struct Totals {
  double G = 0.0;
  double H = 0.0;
  std::size_t n = 0;
};

std::optional<GbtSplit> scan(const Hist& hist, const Totals& tot, const GbtParams& p) {
  std::optional<GbtSplit> best;
  for (std::size_t j = 0; j < hist.G.size(); ++j) {
    const std::size_t nr = hist.C[j];
    if (nr == 0 || nr == tot.n) continue;
    const double GR = hist.G[j];
    const double HR = hist.H[j];
    const double GL = tot.G - GR;
    const double HL = tot.H - HR;
    if (HL < p.min_child_hessian || HR < p.min_child_hessian) continue;
    const double gain = split_gain(GL, HL, GR, HR, p.lambda, p.gamma);
    if (gain > 0.0 && (!best || gain > best->gain)) best = GbtSplit{j, gain};
  }
  return best;
}

class TreeGrower {
 public:
  TreeGrower(const BinaryMatrixView& dense, const SparseRows& sparse, std::span<const double> g,
             std::span<const double> h, const GbtParams& p, std::vector<std::uint32_t>& idx,
             std::vector<double>& margins)
      : dense_(dense), sparse_(sparse), g_(g), h_(h), p_(p), idx_(idx), scratch_(idx.size()), margins_(margins) {}

  RegTree grow() {
    Hist root(sparse_.cols);
    const std::span<const std::uint32_t> all(idx_);
    root.accumulate(sparse_, g_, h_, all);
    Totals tot;
    for (auto s : all) {
      tot.G += g_[s];
      tot.H += h_[s];
    }
    tot.n = all.size();
    tree_.nodes.emplace_back();
    node(0, 0, idx_.size(), 0, root, tot);
    return std::move(tree_);
  }

 private:
  void node(std::size_t id, std::size_t begin, std::size_t end, std::size_t depth, Hist& hist, const Totals& tot) {
    std::optional<GbtSplit> split;
    if (depth < p_.max_depth) split = scan(hist, tot, p_);
    if (!split) {
      const double v = leaf_value(tot.G, tot.H, p_.lambda, p_.learning_rate);
      tree_.nodes[id].value = v;
      for (std::size_t i = begin; i < end; ++i) margins_[idx_[i]] += v;
      return;
    }
    const std::size_t f = split->feature;
    std::size_t nl = 0;
    std::size_t nr = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto s = idx_[i];
      if (dense_(s, f) == 0) idx_[begin + nl++] = s;
      else scratch_[nr++] = s;
    }
    std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(nr),
              idx_.begin() + static_cast<std::ptrdiff_t>(begin + nl));
    const std::size_t mid = begin + nl;

    const Totals right{hist.G[f], hist.H[f], hist.C[f]};
    const Totals left{tot.G - right.G, tot.H - right.H, tot.n - right.n};

    const auto l = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes.emplace_back();
    tree_.nodes[id].feature = static_cast<std::int32_t>(f);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = l + 1;

    // Histogram the smaller child; the parent histogram becomes the larger one.
    Hist small(sparse_.cols);
    const bool left_small = nl <= nr;
    if (left_small) small.accumulate(sparse_, g_, h_, std::span<const std::uint32_t>(idx_.data() + begin, nl));
    else small.accumulate(sparse_, g_, h_, std::span<const std::uint32_t>(idx_.data() + mid, nr));
    hist.subtract(small);
    Hist& lh = left_small ? small : hist;
    Hist& rh = left_small ? hist : small;
    node(static_cast<std::size_t>(l), begin, mid, depth + 1, lh, left);
    node(static_cast<std::size_t>(l + 1), mid, end, depth + 1, rh, right);
  }

  const BinaryMatrixView& dense_;
  const SparseRows& sparse_;
  std::span<const double> g_, h_;
  const GbtParams& p_;
  std::vector<std::uint32_t>& idx_;
  std::vector<std::uint32_t> scratch_;
  std::vector<double>& margins_;
  RegTree tree_;
};

std::vector<std::uint8_t> column(const BinaryMatrixView& Y, std::size_t f) {
  std::vector<std::uint8_t> y(Y.rows);
  for (std::size_t n = 0; n < Y.rows; ++n) y[n] = Y(n, f);
  return y;
}

}  // namespace

std::optional<GbtSplit> histogram_split(const SparseRows& X, std::span<const double> g, std::span<const double> h,
                                        std::span<const std::uint32_t> samples, const GbtParams& params) {
  Hist hist(X.cols);
  hist.accumulate(X, g, h, samples);
  Totals tot;
  for (auto s : samples) {
    tot.G += g[s];
    tot.H += h[s];
  }
  tot.n = samples.size();
  return scan(hist, tot, params);
}

double GbtModel::margin(std::span<const std::uint8_t> x, std::size_t n_rounds) const {
  if (x.size() != feature_dim) throw InputError("feature dimension does not match the boosted model");
  double m = base_score;
  const std::size_t r = std::min(n_rounds, rounds.size());
  for (std::size_t i = 0; i < r; ++i) m += rounds[i].predict(x);
  return m;
}

double GbtModel::predict(std::span<const std::uint8_t> x) const {
  if (constant) {
    if (x.size() != feature_dim) throw InputError("feature dimension does not match the boosted model");
    return *constant;
  }
  return sigmoid(margin(x));
}

std::vector<double> GbtModel::predict(const BinaryMatrixView& X) const {
  if (X.cols != feature_dim) throw InputError("feature dimension does not match the boosted model");
  std::vector<double> out(X.rows);
  for (std::size_t n = 0; n < X.rows; ++n) out[n] = predict(X.row(n));
  return out;
}

GbtModel fit_gbt(const BinaryMatrixView& X, const SparseRows& sparse, std::span<const std::uint8_t> y,
                 const GbtParams& params, std::uint64_t) {
  if (X.rows == 0 || X.rows != y.size()) throw InputError("boosting needs a nonempty X with one label per row");
  if (!(params.learning_rate >= 0.0) || !(params.lambda >= 0.0) || !(params.min_child_hessian >= 0.0))
    throw InputError("boosting parameters out of range");
  GbtModel m;
  m.params = params;
  m.feature_dim = X.cols;
  const std::size_t N = X.rows;
  std::size_t pos = 0;
  for (auto v : y) pos += v;
  if (pos == 0 || pos == N) {
    m.constant = (static_cast<double>(pos) + 1.0) / (static_cast<double>(N) + 2.0);
    m.base_score = std::log(*m.constant / (1.0 - *m.constant));
    return m;
  }
  const double rate = static_cast<double>(pos) / static_cast<double>(N);
  m.base_score = std::clamp(std::log(rate / (1.0 - rate)), -10.0, 10.0);

  std::vector<double> margins(N, m.base_score), g(N), h(N);
  std::vector<std::uint32_t> idx(N);
  m.train_loss.reserve(params.n_rounds + 1);
  m.train_loss.push_back(logistic_loss(margins, y));
  m.rounds.reserve(params.n_rounds);
  for (std::size_t r = 0; r < params.n_rounds; ++r) {
    for (std::size_t i = 0; i < N; ++i) {
      const auto gh = logistic_grad_hess(margins[i], y[i]);
      g[i] = gh.g;
      h[i] = gh.h;
      idx[i] = static_cast<std::uint32_t>(i);
    }
    TreeGrower grower(X, sparse, g, h, params, idx, margins);
    m.rounds.push_back(grower.grow());
    m.train_loss.push_back(logistic_loss(margins, y));
  }
  return m;
}

GbtModel fit_gbt(const BinaryMatrixView& X, std::span<const std::uint8_t> y, const GbtParams& params,
                 std::uint64_t seed) {
  return fit_gbt(X, SparseRows::from(X), y, params, seed);
}

std::vector<double> MultiOutputGbt::predict(const BinaryMatrixView& X) const {
  if (X.cols != feature_dim) throw InputError("feature dimension does not match the boosted model");
  const std::size_t F = per_bin.size();
  std::vector<double> out(X.rows * F);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ni = 0; ni < static_cast<std::ptrdiff_t>(X.rows); ++ni) {
    const auto n = static_cast<std::size_t>(ni);
    const auto x = X.row(n);
    for (std::size_t f = 0; f < F; ++f) out[n * F + f] = per_bin[f].predict(x);
  }
  return out;
}

MultiOutputGbt fit_gbt_multi(const BinaryMatrixView& X, const BinaryMatrixView& Y, const GbtParams& params,
                             std::uint64_t seed) {
  if (X.rows == 0 || X.rows != Y.rows) throw InputError("boosting needs a nonempty X with one target row per example");
  const SparseRows sparse = SparseRows::from(X);
  MultiOutputGbt m;
  m.feature_dim = X.cols;
  m.seed = seed;
  m.per_bin.resize(Y.cols);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t fi = 0; fi < static_cast<std::ptrdiff_t>(Y.cols); ++fi) {
    const auto f = static_cast<std::size_t>(fi);
    const auto y = column(Y, f);
    m.per_bin[f] = fit_gbt(X, sparse, y, params, seed);
  }
  return m;
}

namespace reference {

MultiOutputGbt fit_gbt_multi(const BinaryMatrixView& X, const BinaryMatrixView& Y, const GbtParams& params,
                             std::uint64_t seed) {
  MultiOutputGbt m;
  m.feature_dim = X.cols;
  m.seed = seed;
  for (std::size_t f = 0; f < Y.cols; ++f) {
    const auto y = column(Y, f);
    m.per_bin.push_back(specpred::fit_gbt(X, y, params, seed));
  }
  return m;
}

}  // namespace reference

}  // namespace specpred
