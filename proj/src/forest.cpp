#include "specpred/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace specpred {

namespace {

using i128 = __int128;

// Weighted child purity sL/nL + sR/nR as an exact fraction num/den, where
// s = n0^2 + n1^2. Larger is better; parent purity is S/n.
struct Purity {
  i128 num = 0;
  i128 den = 1;
};

bool greater(const Purity& a, const Purity& b) { return a.num * b.den > b.num * a.den; }

std::vector<std::uint8_t> column(const BinaryMatrixView& Y, std::size_t f) {
  std::vector<std::uint8_t> y(Y.rows);
  for (std::size_t n = 0; n < Y.rows; ++n) y[n] = Y(n, f);
  return y;
}

DecisionTree fit_unit(const BinaryMatrixView& X, std::span<const std::uint8_t> y, const ForestParams& params,
                      std::uint64_t seed, std::uint64_t stream, std::uint64_t tree) {
  Rng rng = make_stream(seed, stream, tree);
  const auto N = static_cast<std::uint32_t>(X.rows);
  std::vector<std::uint32_t> sample(N);
  std::uniform_int_distribution<std::uint32_t> pick(0, N - 1);
  for (auto& s : sample) s = pick(rng);
  std::sort(sample.begin(), sample.end());
  return fit_tree(X, y, sample, params, rng);
}

}  // namespace

std::size_t ForestParams::resolved_mtry(std::size_t feature_dim) const {
  if (mtry > 0) return std::min(mtry, feature_dim);
  auto m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(feature_dim))));
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(feature_dim, 1));
}

double DecisionTree::predict(std::span<const std::uint8_t> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& nd = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] ? nd.right : nd.left);
  }
  const auto& leaf = nodes[i];
  return static_cast<double>(leaf.n1) / static_cast<double>(leaf.n0 + leaf.n1);
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& nd = nodes[i];
    if (nd.is_leaf()) continue;
    d[static_cast<std::size_t>(nd.left)] = d[i] + 1;
    d[static_cast<std::size_t>(nd.right)] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

std::optional<SplitChoice> best_split(const BinaryMatrixView& X, std::span<const std::uint8_t> y,
                                      std::span<const std::uint32_t> samples,
                                      std::span<const std::size_t> candidates, std::size_t min_child) {
  const std::size_t C = candidates.size();
  const std::size_t n = samples.size();
  if (C == 0 || n < 2) return std::nullopt;
  min_child = std::max<std::size_t>(min_child, 1);

  std::vector<std::uint32_t> ones(C, 0), ones_pos(C, 0);
  std::uint64_t pos = 0;
  const std::uint8_t* base = X.data.data();
  for (std::uint32_t s : samples) {
    const std::uint8_t* row = base + static_cast<std::size_t>(s) * X.cols;
    const std::uint8_t label = y[s];
    pos += label;
    for (std::size_t c = 0; c < C; ++c) {
      const std::uint8_t v = row[candidates[c]];
      ones[c] += v;
      ones_pos[c] += v & label;
    }
  }
  if (pos == 0 || pos == n) return std::nullopt;

  const auto sq = [](i128 v) { return v * v; };
  const i128 N = static_cast<i128>(n);
  const i128 parent_s = sq(static_cast<i128>(pos)) + sq(N - static_cast<i128>(pos));

  bool found = false;
  Purity best;
  std::size_t best_feature = 0;
  for (std::size_t c = 0; c < C; ++c) {
    const i128 nr = ones[c];
    const i128 nl = N - nr;
    if (nr < static_cast<i128>(min_child) || nl < static_cast<i128>(min_child)) continue;
    const i128 pr = ones_pos[c];
    const i128 pl = static_cast<i128>(pos) - pr;
    const i128 sr = sq(pr) + sq(nr - pr);
    const i128 sl = sq(pl) + sq(nl - pl);
    const Purity p{sl * nr + sr * nl, nl * nr};
    // Strict decrease: p > parent_s / n.
    if (!(p.num * N > parent_s * p.den)) continue;
    const std::size_t feat = candidates[c];
    if (!found || greater(p, best) || (!greater(best, p) && feat < best_feature)) {
      found = true;
      best = p;
      best_feature = feat;
    }
  }
  if (!found) return std::nullopt;
  const double nd = static_cast<double>(n);
  const double decrease = (static_cast<double>(best.num) / static_cast<double>(best.den) -
                           static_cast<double>(parent_s) / nd) / nd;
  return SplitChoice{best_feature, decrease};
}

DecisionTree fit_tree(const BinaryMatrixView& X, std::span<const std::uint8_t> y,
                      std::span<const std::uint32_t> sample, const ForestParams& params, Rng& rng) {
  DecisionTree tree;
  const std::size_t D = X.cols;
  const std::size_t mtry = params.resolved_mtry(D);
  const std::size_t min_leaf = std::max<std::size_t>(params.min_samples_leaf, 1);
  std::vector<std::uint32_t> idx(sample.begin(), sample.end());
  std::vector<std::uint32_t> scratch(idx.size());
  std::vector<std::size_t> perm(D);
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  struct Task {
    std::size_t node, begin, end, depth;
  };
  std::vector<Task> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, 0, idx.size(), 0});

  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    const std::span<const std::uint32_t> members(idx.data() + task.begin, task.end - task.begin);
    std::uint32_t n1 = 0;
    for (auto s : members) n1 += y[s];
    tree.nodes[task.node].n1 = n1;
    tree.nodes[task.node].n0 = static_cast<std::uint32_t>(members.size()) - n1;

    if (task.depth >= params.max_depth || n1 == 0 || n1 == members.size() || members.size() < 2 * min_leaf ||
        D == 0)
      continue;

    for (std::size_t i = 0; i < mtry; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, D - 1);
      std::swap(perm[i], perm[pick(rng)]);
    }
    const auto split = best_split(X, y, members, std::span<const std::size_t>(perm.data(), mtry), min_leaf);
    if (!split) continue;

    // Stable partition: x == 0 to the left, x == 1 to the right.
    const std::size_t f = split->feature;
    std::size_t nl = 0;
    std::size_t nr = 0;
    for (auto s : members) {
      if (X(s, f) == 0) idx[task.begin + nl++] = s;
      else scratch[nr++] = s;
    }
    std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(nr),
              idx.begin() + static_cast<std::ptrdiff_t>(task.begin + nl));

    const auto left = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& nd = tree.nodes[task.node];
    nd.feature = static_cast<std::int32_t>(f);
    nd.left = left;
    nd.right = left + 1;
    // Right pushed first so the left subtree is grown (and numbered) first.
    stack.push_back({static_cast<std::size_t>(left + 1), task.begin + nl, task.end, task.depth + 1});
    stack.push_back({static_cast<std::size_t>(left), task.begin, task.begin + nl, task.depth + 1});
  }
  return tree;
}

double ForestModel::predict_proba(std::span<const std::uint8_t> x) const {
  if (x.size() != feature_dim) throw InputError("feature dimension does not match the forest");
  if (trees.empty()) throw InputError("forest has no trees");
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return sum / static_cast<double>(trees.size());
}

std::vector<double> ForestModel::predict_proba(const BinaryMatrixView& X) const {
  if (X.cols != feature_dim) throw InputError("feature dimension does not match the forest");
  std::vector<double> out(X.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(X.rows); ++n)
    out[static_cast<std::size_t>(n)] = predict_proba(X.row(static_cast<std::size_t>(n)));
  return out;
}

ForestModel fit_forest(const BinaryMatrixView& X, std::span<const std::uint8_t> y, const ForestParams& params,
                       std::uint64_t seed, std::uint64_t stream) {
  if (X.rows == 0 || X.rows != y.size()) throw InputError("forest needs a nonempty X with one label per row");
  if (params.n_trees == 0) throw InputError("forest needs at least one tree");
  ForestModel m;
  m.params = params;
  m.seed = seed;
  m.feature_dim = X.cols;
  m.trees.resize(params.n_trees);
  for (std::size_t t = 0; t < params.n_trees; ++t) m.trees[t] = fit_unit(X, y, params, seed, stream, t);
  return m;
}

std::vector<double> MultiOutputForest::predict_proba(const BinaryMatrixView& X) const {
  if (X.cols != feature_dim) throw InputError("feature dimension does not match the forest");
  const std::size_t F = per_bin.size();
  std::vector<double> out(X.rows * F);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ni = 0; ni < static_cast<std::ptrdiff_t>(X.rows); ++ni) {
    const auto n = static_cast<std::size_t>(ni);
    const auto x = X.row(n);
    for (std::size_t f = 0; f < F; ++f) out[n * F + f] = per_bin[f].predict_proba(x);
  }
  return out;
}

MultiOutputForest fit_forest_multi(const BinaryMatrixView& X, const BinaryMatrixView& Y, const ForestParams& params,
                                   std::uint64_t seed) {
  if (X.rows == 0 || X.rows != Y.rows) throw InputError("forest needs a nonempty X with one target row per example");
  if (params.n_trees == 0) throw InputError("forest needs at least one tree");
  const std::size_t F = Y.cols;
  const std::size_t T = params.n_trees;
  std::vector<std::vector<std::uint8_t>> labels(F);
  for (std::size_t f = 0; f < F; ++f) labels[f] = column(Y, f);

  MultiOutputForest m;
  m.feature_dim = X.cols;
  m.per_bin.resize(F);
  for (std::size_t f = 0; f < F; ++f) {
    m.per_bin[f].params = params;
    m.per_bin[f].seed = seed;
    m.per_bin[f].feature_dim = X.cols;
    m.per_bin[f].trees.resize(T);
  }
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t u = 0; u < static_cast<std::ptrdiff_t>(F * T); ++u) {
    const auto f = static_cast<std::size_t>(u) / T;
    const auto t = static_cast<std::size_t>(u) % T;
    m.per_bin[f].trees[t] = fit_unit(X, labels[f], params, seed, f, t);
  }
  return m;
}

namespace reference {

MultiOutputForest fit_forest_multi(const BinaryMatrixView& X, const BinaryMatrixView& Y, const ForestParams& params,
                                   std::uint64_t seed) {
  MultiOutputForest m;
  m.feature_dim = X.cols;
  for (std::size_t f = 0; f < Y.cols; ++f) {
    const auto y = column(Y, f);
    m.per_bin.push_back(specpred::fit_forest(X, y, params, seed, f));
  }
  return m;
}

}  // namespace reference

}  // namespace specpred
