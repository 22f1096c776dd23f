#include "specpred/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace specpred {

namespace fs = std::filesystem;
using io::json;

std::string method_name(Method m) {
  switch (m) {
    case Method::markov: return "markov";
    case Method::rf: return "rf";
    case Method::gbt: return "gbt";
    case Method::lstm: return "lstm";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "markov") return Method::markov;
  if (s == "rf") return Method::rf;
  if (s == "gbt") return Method::gbt;
  if (s == "lstm") return Method::lstm;
  throw InputError("unknown method '" + s + "' (expected markov, rf, gbt or lstm)");
}

void RunConfig::validate() const {
  const int sources = !spec_path.empty() + !grid_path.empty() + !sweep_path.empty();
  if (sources != 1) throw InputError("give exactly one of --spec, --grid or --sweep");
  if (!sweep_path.empty() && !threshold_dbm) throw InputError("--sweep input needs --threshold-dbm");
  if (!(bin_width_hz > 0.0)) throw InputError("bin width must be positive");
  if (history < 1) throw InputError("history length K must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InputError("train fraction must lie in (0, 1)");
  if (!(markov_alpha > 0.0)) throw InputError("markov alpha must be positive");
  if (forest.n_trees < 1 || forest.max_depth < 1 || forest.min_samples_leaf < 1)
    throw InputError("forest needs n_trees, max_depth and min_samples_leaf >= 1");
  if (gbt.n_rounds < 1 || gbt.max_depth < 1 || !(gbt.learning_rate > 0.0) || !(gbt.lambda >= 0.0) ||
      !(gbt.gamma >= 0.0) || !(gbt.min_child_hessian >= 0.0))
    throw InputError("invalid boosting parameters");
  if (lstm.hidden_size < 1 || lstm.epochs < 1 || lstm.batch_size < 1 || !(lstm.learning_rate > 0.0))
    throw InputError("invalid LSTM parameters");
  if (pfa_targets.empty()) throw InputError("at least one Pfa target is required");
  for (double p : pfa_targets)
    if (!(p > 0.0 && p <= 1.0)) throw InputError("Pfa targets must lie in (0, 1]");
  if (ks.empty()) throw InputError("K list must not be empty");
  for (auto k : ks)
    if (k < 1) throw InputError("every K must be >= 1");
}

json config_to_json(const RunConfig& c) {
  return {{"spec", c.spec_path},
          {"grid", c.grid_path},
          {"sweep", c.sweep_path},
          {"bin_width_hz", c.bin_width_hz},
          {"threshold_dbm", c.threshold_dbm ? json(*c.threshold_dbm) : json(nullptr)},
          {"k", c.history},
          {"train_fraction", c.train_fraction},
          {"method", method_name(c.method)},
          {"markov", {{"alpha", c.markov_alpha}}},
          {"rf", io::to_json(c.forest)},
          {"gbt", io::to_json(c.gbt)},
          {"lstm", io::to_json(c.lstm)},
          {"seed", c.seed},
          {"pfa", c.pfa_targets},
          {"ks", c.ks}};
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.spec_path = j.value("spec", std::string());
  c.grid_path = j.value("grid", std::string());
  c.sweep_path = j.value("sweep", std::string());
  c.bin_width_hz = j.value("bin_width_hz", c.bin_width_hz);
  if (j.contains("threshold_dbm") && !j.at("threshold_dbm").is_null()) c.threshold_dbm = j.at("threshold_dbm").get<double>();
  c.history = j.value("k", c.history);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.method = parse_method(j.value("method", std::string("markov")));
  if (j.contains("markov")) c.markov_alpha = j.at("markov").value("alpha", c.markov_alpha);
  if (j.contains("rf")) c.forest = io::forest_params_from_json(j.at("rf"));
  if (j.contains("gbt")) c.gbt = io::gbt_params_from_json(j.at("gbt"));
  if (j.contains("lstm")) c.lstm = io::lstm_config_from_json(j.at("lstm"));
  c.seed = j.value("seed", c.seed);
  c.pfa_targets = j.value("pfa", c.pfa_targets);
  c.ks = j.value("ks", c.ks);
  return c;
}

json model_to_json(const TrainedModel& m) {
  json j = std::visit([](const auto& model) { return io::to_json(model); }, m.model);
  j["history"] = m.history;
  return j;
}

TrainedModel model_from_json(const json& j) {
  TrainedModel m;
  m.method = parse_method(j.at("type").get<std::string>());
  m.history = j.at("history").get<std::size_t>();
  switch (m.method) {
    case Method::markov: m.model = io::markov_from_json(j); break;
    case Method::rf: m.model = io::forest_from_json(j); break;
    case Method::gbt: m.model = io::gbt_from_json(j); break;
    case Method::lstm: m.model = io::lstm_from_json(j); break;
  }
  return m;
}

OccupancyGrid load_grid(const RunConfig& c) {
  if (!c.grid_path.empty()) return io::read_grid(c.grid_path, c.bin_width_hz);
  if (!c.sweep_path.empty()) {
    std::ifstream f(c.sweep_path);
    if (!f) throw InputError("cannot open " + c.sweep_path);
    return compute_occupancy(io::read_sweep_csv(f), c.bin_width_hz, *c.threshold_dbm);
  }
  std::ifstream f(c.spec_path);
  if (!f) throw InputError("cannot open " + c.spec_path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw InputError(c.spec_path + ": " + e.what());
  }
  const BandSpec band = io::band_from_json(j);
  const double threshold = c.threshold_dbm.value_or(midpoint_threshold(band));
  return compute_occupancy(gen_sweep(band), band.bin_width_hz, threshold);
}

TrainedModel train_model(const WindowedDataset& ds, const OccupancyGrid& train_grid, const RunConfig& c) {
  TrainedModel m;
  m.method = c.method;
  m.history = ds.history;
  switch (c.method) {
    case Method::markov: m.model = fit_markov(train_grid, c.markov_alpha); break;
    case Method::rf: m.model = fit_forest_multi(ds.feature_view(), ds.target_view(), c.forest, c.seed); break;
    case Method::gbt: m.model = fit_gbt_multi(ds.feature_view(), ds.target_view(), c.gbt, c.seed); break;
    case Method::lstm: {
      LstmConfig cfg = c.lstm;
      cfg.seed = c.seed;
      m.model = train_lstm(ds, cfg);
      break;
    }
  }
  return m;
}

TrainedModel train_model(const OccupancyGrid& train, const RunConfig& c) {
  return train_model(build_windows(train, c.history), train, c);
}

ScoreMatrix score_model(const TrainedModel& m, const WindowedDataset& ds) {
  if (ds.history != m.history)
    throw InputError("model was trained with K = " + std::to_string(m.history) + ", dataset has K = " +
                     std::to_string(ds.history));
  ScoreMatrix sm;
  sm.rows = ds.examples;
  sm.bins = ds.bins;
  sm.labels = ds.targets;
  sm.origin_minutes = ds.origin_minutes;
  sm.method = method_name(m.method);
  sm.history = ds.history;
  sm.scores = std::visit(
      [&](const auto& model) -> std::vector<double> {
        using M = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<M, TransitionModel>) return markov_scores(model, ds);
        else if constexpr (std::is_same_v<M, MultiOutputForest>) {
          if (model.feature_dim != ds.feature_dim()) throw InputError("forest feature count does not match dataset");
          return model.predict_proba(ds.feature_view());
        } else if constexpr (std::is_same_v<M, MultiOutputGbt>) {
          if (model.feature_dim != ds.feature_dim()) throw InputError("boosting feature count does not match dataset");
          return model.predict(ds.feature_view());
        } else {
          if (model.weights.inputs != ds.bins) throw InputError("LSTM input size does not match dataset");
          return model.predict(ds);
        }
      },
      m.model);
  return sm;
}

ScoreMatrix attach_labels(const io::ScoreTable& t, const OccupancyGrid& grid) {
  if (t.bins != grid.bins()) throw InputError("score file has " + std::to_string(t.bins) + " bins, grid has " +
                                              std::to_string(grid.bins()));
  ScoreMatrix sm;
  sm.rows = t.origins.size();
  sm.bins = t.bins;
  sm.scores = t.scores;
  sm.origin_minutes = t.origins;
  sm.labels.resize(sm.rows * sm.bins);
  for (std::size_t n = 0; n < sm.rows; ++n) {
    const std::int64_t idx = t.origins[n] - grid.start_minute();
    if (idx < 0 || idx >= static_cast<std::int64_t>(grid.minutes()))
      throw InputError("score minute " + std::to_string(t.origins[n]) + " is outside the grid");
    for (std::size_t f = 0; f < sm.bins; ++f) sm.labels[n * sm.bins + f] = grid.at(f, static_cast<std::size_t>(idx));
  }
  return sm;
}

EvalOptions eval_options(const RunConfig& c, const OccupancyGrid& full_grid) {
  EvalOptions opt;
  opt.pfa_targets = c.pfa_targets;
  opt.classes = compute_dynamics(full_grid).cls;
  return opt;
}

std::vector<KSweepEntry> k_sweep(const OccupancyGrid& grid, const RunConfig& c, const std::vector<std::size_t>& ks) {
  if (ks.empty()) throw InputError("K list must not be empty");
  const std::size_t kmax = *std::max_element(ks.begin(), ks.end());
  const auto [train, test] = chronological_split(grid, c.train_fraction, kmax);
  const std::int64_t first_origin = test.start_minute() + static_cast<std::int64_t>(kmax);
  const EvalOptions opt = eval_options(c, grid);
  std::vector<KSweepEntry> out;
  for (auto k : ks) {
    if (k < 1) throw InputError("every K must be >= 1");
    RunConfig ck = c;
    ck.history = k;
    const TrainedModel m = train_model(train, ck);
    const WindowedDataset ds = build_windows(test, k).from_origin(first_origin);
    out.push_back({k, evaluate(score_model(m, ds), opt)});
  }
  return out;
}

json dataset_summary(const OccupancyGrid& train, const OccupancyGrid& test, std::size_t history) {
  return {{"history", history},
          {"bins", train.bins()},
          {"feature_dim", history * train.bins()},
          {"train_minutes", train.minutes()},
          {"test_minutes", test.minutes()},
          {"train_start_minute", train.start_minute()},
          {"test_start_minute", test.start_minute()},
          {"train_examples", train.minutes() > history ? train.minutes() - history : 0},
          {"test_examples", test.minutes() > history ? test.minutes() - history : 0}};
}

namespace {

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);
  return f;
}

void provenance_line(std::ostream& os, const RunConfig& c) { os << "# provenance " << config_to_json(c).dump() << '\n'; }

template <typename F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

void write_json_artifact(const std::string& path, const json& body, const RunConfig& c) {
  json doc = body;
  doc["provenance"] = config_to_json(c);
  auto f = open_out(path);
  f << doc.dump(2) << '\n';
}

void write_grid_artifact(const std::string& path, const OccupancyGrid& grid, const RunConfig& c) {
  auto f = open_out(path);
  provenance_line(f, c);
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".hex") == 0) io::write_grid_hex(f, grid);
  else io::write_grid_csv(f, grid);
}

void write_scores_artifact(const std::string& path, const ScoreMatrix& sm, const RunConfig& c) {
  auto f = open_out(path);
  provenance_line(f, c);
  io::write_scores_csv(f, sm.origin_minutes, sm.scores, sm.bins);
}

void write_per_bin_csv(const std::string& path, const EvalReport& r, const RunConfig& c) {
  auto f = open_out(path);
  provenance_line(f, c);
  f << "bin,accuracy,balanced_accuracy,transition_count,class\n";
  for (std::size_t b = 0; b < r.bins; ++b)
    f << b << ',' << io::format_double(r.per_bin_accuracy[b]) << ',' << io::format_double(r.balanced.per_bin[b]) << ','
      << r.transition_rate[b] << ',' << (r.classes[b] == DynamicsClass::dynamic_bin ? "dynamic" : "static") << '\n';
}

void write_rate_scatter_csv(const std::string& path, const EvalReport& r, const RunConfig& c) {
  auto f = open_out(path);
  provenance_line(f, c);
  f << "bin,transition_count,accuracy,fitted\n";
  for (std::size_t b = 0; b < r.bins; ++b) {
    f << b << ',' << r.transition_rate[b] << ',' << io::format_double(r.per_bin_accuracy[b]) << ',';
    if (r.fit) f << io::format_double(r.fit->intercept + r.fit->slope * static_cast<double>(r.transition_rate[b]));
    f << '\n';
  }
}

void write_k_sweep_csv(const std::string& path, const std::vector<KSweepEntry>& entries, const RunConfig& c) {
  auto f = open_out(path);
  provenance_line(f, c);
  f << "k,method,rows,average_accuracy,balanced_accuracy";
  if (!entries.empty())
    for (const auto& op : entries.front().report.pd_all) f << ",pd_at_pfa_" << io::format_double(op.target_pfa);
  f << '\n';
  for (const auto& e : entries) {
    f << e.history << ',' << e.report.method << ',' << e.report.rows << ',' << io::format_double(e.report.average_accuracy)
      << ',' << io::format_double(e.report.balanced.mean);
    for (const auto& op : e.report.pd_all) f << ',' << io::format_double(op.pd);
    f << '\n';
  }
}

void write_minute_strip_csv(const std::string& path, const ScoreMatrix& sm, std::int64_t minute, double tau,
                            const RunConfig& c) {
  const auto it = std::find(sm.origin_minutes.begin(), sm.origin_minutes.end(), minute);
  if (it == sm.origin_minutes.end()) throw InputError("minute " + std::to_string(minute) + " has no prediction");
  const auto n = static_cast<std::size_t>(it - sm.origin_minutes.begin());
  auto f = open_out(path);
  provenance_line(f, c);
  f << "bin,truth,prediction\n";
  for (std::size_t b = 0; b < sm.bins; ++b)
    f << b << ',' << int(sm.label(n, b)) << ',' << decide(sm.score(n, b), tau) << '\n';
}

PipelineResult run_pipeline(const RunConfig& c) {
  const auto dir = fs::path(c.out_dir);
  const bool write = !c.out_dir.empty();
  const auto out = [&](const char* name) { return (dir / name).string(); };
  try {
    stage("config", [&] {
      c.validate();
      if (write) {
        fs::create_directories(dir);
        fs::remove(dir / "FAILED");
        write_json_artifact(out("config.json"), json::object(), c);
      }
    });
    PipelineResult res;
    res.grid = stage("occupancy", [&] { return load_grid(c); });
    if (write) stage("occupancy", [&] { write_grid_artifact(out("grid.csv"), res.grid, c); });

    const auto [train, test] = stage("windows", [&] { return chronological_split(res.grid, c.train_fraction, c.history); });
    const WindowedDataset train_ds = stage("windows", [&] { return build_windows(train, c.history); });
    const WindowedDataset test_ds = stage("windows", [&] { return build_windows(test, c.history); });
    if (write) stage("windows", [&] { write_json_artifact(out("dataset.json"), dataset_summary(train, test, c.history), c); });

    const TrainedModel model = stage("train", [&] { return train_model(train_ds, train, c); });
    if (write) stage("train", [&] { write_json_artifact(out("model.json"), model_to_json(model), c); });

    res.scores = stage("predict", [&] { return score_model(model, test_ds); });
    if (write) stage("predict", [&] { write_scores_artifact(out("scores.csv"), res.scores, c); });

    res.report = stage("eval", [&] { return evaluate(res.scores, eval_options(c, res.grid)); });
    if (write) {
      stage("report", [&] {
        write_json_artifact(out("report.json"), io::to_json(res.report), c);
        write_per_bin_csv(out("per_bin.csv"), res.report, c);
        write_rate_scatter_csv(out("accuracy_vs_rate.csv"), res.report, c);
      });
    }
    return res;
  } catch (const StageError& e) {
    if (write) {
      std::error_code ec;
      fs::create_directories(dir, ec);
      std::ofstream f(dir / "FAILED");
      f << "stage: " << e.stage() << "\n" << e.what() << "\n";
    }
    throw;
  }
}

}  // namespace specpred
