#include "specpred/eval.hpp"

#include <algorithm>
#include <cmath>

namespace specpred {

void ScoreMatrix::validate() const {
  if (scores.size() != rows * bins || labels.size() != rows * bins)
    throw InputError("score and label matrices must both be rows x bins");
  if (!origin_minutes.empty() && origin_minutes.size() != rows)
    throw InputError("origin minute count does not match the score rows");
  for (double s : scores)
    if (!(s >= 0.0 && s <= 1.0)) throw InputError("scores must lie in [0, 1]");
  for (auto l : labels)
    if (l > 1) throw InputError("labels must be 0 or 1");
}

ScoreMatrix ScoreMatrix::select_bins(std::span<const std::size_t> keep) const {
  ScoreMatrix out;
  out.rows = rows;
  out.bins = keep.size();
  out.method = method;
  out.history = history;
  out.origin_minutes = origin_minutes;
  out.scores.resize(rows * keep.size());
  out.labels.resize(rows * keep.size());
  for (std::size_t n = 0; n < rows; ++n) {
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (keep[i] >= bins) throw InputError("bin index out of range");
      out.scores[n * keep.size() + i] = score(n, keep[i]);
      out.labels[n * keep.size() + i] = label(n, keep[i]);
    }
  }
  return out;
}

ScoreMatrix ScoreMatrix::from_origin(std::int64_t min_origin) const {
  if (origin_minutes.size() != rows) throw InputError("score matrix has no origin minutes");
  std::size_t skip = 0;
  while (skip < rows && origin_minutes[skip] < min_origin) ++skip;
  ScoreMatrix out = *this;
  out.rows = rows - skip;
  const auto cut = static_cast<std::ptrdiff_t>(skip * bins);
  out.scores.erase(out.scores.begin(), out.scores.begin() + cut);
  out.labels.erase(out.labels.begin(), out.labels.begin() + cut);
  out.origin_minutes.erase(out.origin_minutes.begin(), out.origin_minutes.begin() + static_cast<std::ptrdiff_t>(skip));
  return out;
}

double average_accuracy(const ScoreMatrix& sm, double tau) {
  if (sm.rows * sm.bins == 0) throw InputError("accuracy of an empty score matrix");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < sm.scores.size(); ++i) correct += (sm.scores[i] > tau ? 1 : 0) == sm.labels[i];
  return static_cast<double>(correct) / static_cast<double>(sm.scores.size());
}

std::vector<double> per_bin_accuracy(const ScoreMatrix& sm, double tau) {
  if (sm.rows == 0) throw InputError("accuracy of an empty score matrix");
  std::vector<double> out(sm.bins);
  for (std::size_t f = 0; f < sm.bins; ++f) {
    std::size_t correct = 0;
    for (std::size_t n = 0; n < sm.rows; ++n) correct += (sm.score(n, f) > tau ? 1 : 0) == sm.label(n, f);
    out[f] = static_cast<double>(correct) / static_cast<double>(sm.rows);
  }
  return out;
}

BalancedAccuracy balanced_accuracy(const ScoreMatrix& sm, double tau) {
  BalancedAccuracy out;
  if (sm.bins == 0) return out;
  out.per_bin.resize(sm.bins);
  double sum = 0.0;
  for (std::size_t f = 0; f < sm.bins; ++f) {
    std::size_t pos = 0, neg = 0, tp = 0, tn = 0;
    for (std::size_t n = 0; n < sm.rows; ++n) {
      const bool pred = sm.score(n, f) > tau;
      if (sm.label(n, f)) {
        ++pos;
        tp += pred;
      } else {
        ++neg;
        tn += !pred;
      }
    }
    const double tpr = pos ? static_cast<double>(tp) / static_cast<double>(pos) : 1.0;
    const double tnr = neg ? static_cast<double>(tn) / static_cast<double>(neg) : 1.0;
    if (pos == 0 || neg == 0) out.single_class_bins.push_back(f);
    out.per_bin[f] = 0.5 * (tpr + tnr);
    sum += out.per_bin[f];
  }
  out.mean = sum / static_cast<double>(sm.bins);
  return out;
}

namespace {

Calibration calibrate(std::vector<double> idle, std::vector<double> candidates, double target) {
  if (idle.empty()) throw InputError("threshold calibration needs at least one idle cell");
  if (!(target > 0.0 && target <= 1.0)) throw InputError("target false-alarm rate must lie in (0, 1]");
  std::sort(idle.begin(), idle.end());
  candidates.push_back(0.0);
  candidates.push_back(1.0);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  const auto n_idle = static_cast<double>(idle.size());
  const auto pfa = [&](double tau) {
    const auto below = std::lower_bound(idle.begin(), idle.end(), tau) - idle.begin();
    return static_cast<double>(idle.size() - static_cast<std::size_t>(below)) / n_idle;
  };
  // pfa is non-increasing in tau: binary search for the first feasible candidate.
  std::size_t lo = 0, hi = candidates.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (pfa(candidates[mid]) <= target) hi = mid;
    else lo = mid + 1;
  }
  if (lo == candidates.size()) return {std::nextafter(1.0, 2.0), 0.0};
  return {candidates[lo], pfa(candidates[lo])};
}

}  // namespace

Calibration calibrate_threshold(const ScoreMatrix& sm, double target_pfa) {
  std::vector<double> idle;
  for (std::size_t i = 0; i < sm.scores.size(); ++i)
    if (!sm.labels[i]) idle.push_back(sm.scores[i]);
  return calibrate(std::move(idle), sm.scores, target_pfa);
}

std::vector<Calibration> calibrate_threshold_per_bin(const ScoreMatrix& sm, double target_pfa) {
  std::vector<Calibration> out(sm.bins);
  for (std::size_t f = 0; f < sm.bins; ++f) {
    std::vector<double> idle, all;
    for (std::size_t n = 0; n < sm.rows; ++n) {
      all.push_back(sm.score(n, f));
      if (!sm.label(n, f)) idle.push_back(sm.score(n, f));
    }
    out[f] = idle.empty() ? Calibration{0.0, 0.0} : calibrate(std::move(idle), std::move(all), target_pfa);
  }
  return out;
}

OperatingPoint pd_at_pfa(const ScoreMatrix& sm, double target_pfa) {
  std::size_t occupied = 0;
  for (auto l : sm.labels) occupied += l;
  if (occupied == 0) throw InputError("detection probability needs at least one occupied cell");
  const Calibration cal = calibrate_threshold(sm, target_pfa);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < sm.scores.size(); ++i) hit += sm.labels[i] && sm.scores[i] >= cal.tau;
  return {target_pfa, cal.tau, cal.achieved_pfa, static_cast<double>(hit) / static_cast<double>(occupied)};
}

LinearFit accuracy_vs_dynamics(std::span<const double> acc, std::span<const double> rates) {
  if (acc.size() != rates.size()) throw InputError("accuracy and rate vectors differ in length");
  if (acc.size() < 2) throw InputError("regression needs at least two bins");
  const auto n = static_cast<double>(acc.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    mx += rates[i];
    my += acc[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double dx = rates[i] - mx;
    const double dy = acc[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0) throw InputError("transition rates are constant; regression is undefined");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.pearson_r = syy == 0.0 ? 0.0 : sxy / std::sqrt(sxx * syy);
  return fit;
}

EvalReport evaluate(const ScoreMatrix& sm, const EvalOptions& opt) {
  sm.validate();
  EvalReport r;
  r.method = sm.method;
  r.history = sm.history;
  r.rows = sm.rows;
  r.bins = sm.bins;
  r.average_accuracy = average_accuracy(sm, opt.tau);
  r.balanced = balanced_accuracy(sm, opt.tau);
  r.per_bin_accuracy = per_bin_accuracy(sm, opt.tau);
  for (double t : opt.pfa_targets) r.pd_all.push_back(pd_at_pfa(sm, t));

  if (!opt.transition_counts.empty()) {
    if (opt.transition_counts.size() != sm.bins) throw InputError("transition count vector does not match bins");
    r.transition_rate = opt.transition_counts;
  } else {
    r.transition_rate.assign(sm.bins, 0);
    for (std::size_t f = 0; f < sm.bins; ++f)
      for (std::size_t n = 1; n < sm.rows; ++n) r.transition_rate[f] += sm.label(n, f) != sm.label(n - 1, f);
  }
  std::vector<double> rates(r.transition_rate.begin(), r.transition_rate.end());
  const bool varied = std::adjacent_find(rates.begin(), rates.end(), std::not_equal_to<>()) != rates.end();
  if (sm.bins >= 2 && varied) r.fit = accuracy_vs_dynamics(r.per_bin_accuracy, rates);

  if (!opt.classes.empty() && opt.classes.size() != sm.bins) throw InputError("class vector does not match bins");
  r.classes = opt.classes.empty() ? std::vector<DynamicsClass>(sm.bins, DynamicsClass::dynamic_bin) : opt.classes;
  std::vector<std::size_t> dyn;
  for (std::size_t f = 0; f < sm.bins; ++f)
    if (r.classes[f] == DynamicsClass::dynamic_bin) dyn.push_back(f);
  if (!dyn.empty()) {
    const ScoreMatrix sub = sm.select_bins(dyn);
    r.average_accuracy_dynamic = average_accuracy(sub, opt.tau);
    r.balanced_accuracy_dynamic = balanced_accuracy(sub, opt.tau).mean;
    const bool has_pos = std::any_of(sub.labels.begin(), sub.labels.end(), [](auto v) { return v != 0; });
    const bool has_neg = std::any_of(sub.labels.begin(), sub.labels.end(), [](auto v) { return v == 0; });
    if (has_pos && has_neg)
      for (double t : opt.pfa_targets) r.pd_dynamic.push_back(pd_at_pfa(sub, t));
  }
  return r;
}

}  // namespace specpred
