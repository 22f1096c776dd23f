// specpred: occupancy grids and next-minute occupancy prediction from the command line.
//
//   specpred synth    --spec band.json --out grid.csv
//   specpred run      --spec band.json --method rf --k 10 --out runs/rf
//   specpred sweep-k  --grid grid.csv --method gbt --ks 1,5,10,30,60
//
// Output paths default to $SPECPRED_OUT (or ./specpred-out when unset).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <omp.h>

#include <CLI11.hpp>

#include "specpred/pipeline.hpp"

using namespace specpred;
namespace fs = std::filesystem;
using io::json;

namespace {

std::string default_out_root() {
  const char* env = std::getenv("SPECPRED_OUT");
  return env && *env ? env : "specpred-out";
}

// A path with an extension names a file; anything else is a directory that
// receives `name`.
std::string resolve_out(const std::string& out, const std::string& name) {
  const fs::path p(out.empty() ? default_out_root() : out);
  return p.has_extension() ? p.string() : (p / name).string();
}

std::string out_dir(const std::string& out) { return out.empty() ? default_out_root() : out; }

std::optional<json> read_provenance(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    json j = json::parse(f);
    if (j.contains("provenance")) return j.at("provenance");
    return std::nullopt;
  }
  std::string line;
  std::getline(f, line);
  const std::string tag = "# provenance ";
  if (line.rfind(tag, 0) == 0) return json::parse(line.substr(tag.size()));
  return std::nullopt;
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

// Flags that map onto RunConfig. Each is applied only when given, so a config
// loaded with --config can be selectively overridden.
struct Flags {
  std::string config, spec, grid, sweep, out, method, optimizer;
  double bin_width = 0, threshold = 0, train_fraction = 0, alpha = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<double> pfa;
  std::vector<std::size_t> ks;
  std::size_t rf_trees = 0, rf_depth = 0, rf_leaf = 0, rf_mtry = 0;
  std::size_t gbt_rounds = 0, gbt_depth = 0;
  double gbt_eta = 0, gbt_lambda = 0, gbt_gamma = 0, gbt_hess = 0;
  std::size_t lstm_hidden = 0, lstm_epochs = 0, lstm_batch = 0;
  double lstm_lr = 0, lstm_clip = 0;
  // Every subcommand registers its own copy of a flag; only one is parsed.
  std::multimap<std::string, CLI::Option*> by_name;

  bool given(const std::string& name) const {
    const auto [lo, hi] = by_name.equal_range(name);
    for (auto it = lo; it != hi; ++it)
      if (it->second->count() > 0) return true;
    return false;
  }
};

template <typename T>
CLI::Option* add(CLI::App* app, Flags& fl, const std::string& name, T& var, const std::string& help) {
  auto* o = app->add_option(name, var, help);
  fl.by_name.emplace(name, o);
  return o;
}

void add_input_flags(CLI::App* app, Flags& fl) {
  add(app, fl, "--config", fl.config, "Load a RunConfig (or any artifact's provenance block) from JSON");
  add(app, fl, "--spec", fl.spec, "Band spec JSON to synthesize the grid from");
  add(app, fl, "--grid", fl.grid, "Occupancy grid file (CSV or hexgrid)");
  add(app, fl, "--sweep", fl.sweep, "Power sweep CSV (freq_hz,interval_index,power_dbm)");
  add(app, fl, "--bin-width-hz", fl.bin_width, "Frequency bin width in Hz");
  add(app, fl, "--threshold-dbm", fl.threshold, "Occupancy threshold in dBm");
}

void add_split_flags(CLI::App* app, Flags& fl) {
  add(app, fl, "--k", fl.k, "History length K in minutes");
  add(app, fl, "--train-fraction", fl.train_fraction, "Fraction of minutes used for training");
}

void add_model_flags(CLI::App* app, Flags& fl) {
  add(app, fl, "--method", fl.method, "markov | rf | gbt | lstm");
  add(app, fl, "--seed", fl.seed, "Random seed");
  add(app, fl, "--markov-alpha", fl.alpha, "Laplace smoothing for the Markov baseline");
  add(app, fl, "--rf-trees", fl.rf_trees, "Random forest: trees per bin");
  add(app, fl, "--rf-depth", fl.rf_depth, "Random forest: maximum depth");
  add(app, fl, "--rf-min-leaf", fl.rf_leaf, "Random forest: minimum samples per leaf");
  add(app, fl, "--rf-mtry", fl.rf_mtry, "Random forest: features tried per split (0 = sqrt)");
  add(app, fl, "--gbt-rounds", fl.gbt_rounds, "Boosting rounds");
  add(app, fl, "--gbt-depth", fl.gbt_depth, "Boosting tree depth");
  add(app, fl, "--gbt-eta", fl.gbt_eta, "Boosting learning rate");
  add(app, fl, "--gbt-lambda", fl.gbt_lambda, "Boosting L2 leaf penalty");
  add(app, fl, "--gbt-gamma", fl.gbt_gamma, "Boosting split penalty");
  add(app, fl, "--gbt-min-hessian", fl.gbt_hess, "Boosting minimum child hessian");
  add(app, fl, "--lstm-hidden", fl.lstm_hidden, "LSTM hidden size");
  add(app, fl, "--lstm-epochs", fl.lstm_epochs, "LSTM epochs");
  add(app, fl, "--lstm-batch", fl.lstm_batch, "LSTM minibatch size");
  add(app, fl, "--lstm-lr", fl.lstm_lr, "LSTM learning rate");
  add(app, fl, "--lstm-optimizer", fl.optimizer, "adam | sgd");
  add(app, fl, "--lstm-clip", fl.lstm_clip, "LSTM gradient clip norm (<= 0 disables)");
}

void add_eval_flags(CLI::App* app, Flags& fl) {
  fl.by_name.emplace("--pfa", app->add_option("--pfa", fl.pfa, "Pfa targets, comma separated")->delimiter(','));
}

void add_out_flag(CLI::App* app, Flags& fl, const std::string& help) { add(app, fl, "--out", fl.out, help); }

RunConfig build_config(const Flags& fl) {
  RunConfig c;
  if (fl.given("--config")) {
    json j = read_json(fl.config);
    c = config_from_json(j.contains("provenance") ? j.at("provenance") : j);
  }
  // Any explicit input flag replaces the input source wholesale.
  if (fl.given("--spec") || fl.given("--grid") || fl.given("--sweep")) {
    c.spec_path = fl.given("--spec") ? fl.spec : "";
    c.grid_path = fl.given("--grid") ? fl.grid : "";
    c.sweep_path = fl.given("--sweep") ? fl.sweep : "";
  }
  if (fl.given("--bin-width-hz")) c.bin_width_hz = fl.bin_width;
  if (fl.given("--threshold-dbm")) c.threshold_dbm = fl.threshold;
  if (fl.given("--k")) c.history = fl.k;
  if (fl.given("--train-fraction")) c.train_fraction = fl.train_fraction;
  if (fl.given("--method")) c.method = parse_method(fl.method);
  if (fl.given("--seed")) c.seed = fl.seed;
  if (fl.given("--markov-alpha")) c.markov_alpha = fl.alpha;
  if (fl.given("--rf-trees")) c.forest.n_trees = fl.rf_trees;
  if (fl.given("--rf-depth")) c.forest.max_depth = fl.rf_depth;
  if (fl.given("--rf-min-leaf")) c.forest.min_samples_leaf = fl.rf_leaf;
  if (fl.given("--rf-mtry")) c.forest.mtry = fl.rf_mtry;
  if (fl.given("--gbt-rounds")) c.gbt.n_rounds = fl.gbt_rounds;
  if (fl.given("--gbt-depth")) c.gbt.max_depth = fl.gbt_depth;
  if (fl.given("--gbt-eta")) c.gbt.learning_rate = fl.gbt_eta;
  if (fl.given("--gbt-lambda")) c.gbt.lambda = fl.gbt_lambda;
  if (fl.given("--gbt-gamma")) c.gbt.gamma = fl.gbt_gamma;
  if (fl.given("--gbt-min-hessian")) c.gbt.min_child_hessian = fl.gbt_hess;
  if (fl.given("--lstm-hidden")) c.lstm.hidden_size = fl.lstm_hidden;
  if (fl.given("--lstm-epochs")) c.lstm.epochs = fl.lstm_epochs;
  if (fl.given("--lstm-batch")) c.lstm.batch_size = fl.lstm_batch;
  if (fl.given("--lstm-lr")) c.lstm.learning_rate = fl.lstm_lr;
  if (fl.given("--lstm-clip")) c.lstm.grad_clip_norm = fl.lstm_clip;
  if (fl.given("--lstm-optimizer")) {
    if (fl.optimizer != "adam" && fl.optimizer != "sgd") throw InputError("--lstm-optimizer must be adam or sgd");
    c.lstm.optimizer = fl.optimizer == "adam" ? Optimizer::adam : Optimizer::sgd;
  }
  if (fl.given("--pfa")) c.pfa_targets = fl.pfa;
  if (fl.given("--ks")) c.ks = fl.ks;
  return c;
}

ScoreMatrix load_scores(const std::string& scores_path, const OccupancyGrid& grid) {
  std::ifstream f(scores_path);
  if (!f) throw InputError("cannot open " + scores_path);
  ScoreMatrix sm = attach_labels(io::read_scores_csv(f), grid);
  if (auto prov = read_provenance(scores_path)) {
    sm.method = prov->value("method", std::string());
    sm.history = prov->value("k", std::size_t{0});
  }
  return sm;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectrum occupancy grids and next-minute occupancy prediction"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = OpenMP default)");

  Flags fl;
  std::string model_path, scores_path, sweep_out;
  std::optional<double> band_end;
  std::int64_t minute = 0;
  double tau = 0.5;
  bool dump = false;

  auto* synth = app.add_subcommand("synth", "Generate an occupancy grid (and optionally its power sweep) from a band spec");
  add(synth, fl, "--spec", fl.spec, "Band spec JSON")->required();
  add_out_flag(synth, fl, "Grid output (.csv or .hex, or a directory)");
  synth->add_option("--sweep-out", sweep_out, "Also write the synthetic power sweep CSV here");

  auto* occ = app.add_subcommand("occupancy", "Threshold a power sweep into an occupancy grid");
  add(occ, fl, "--sweep", fl.sweep, "Power sweep CSV")->required();
  add(occ, fl, "--bin-width-hz", fl.bin_width, "Frequency bin width in Hz")->required();
  add(occ, fl, "--threshold-dbm", fl.threshold, "Occupancy threshold in dBm")->required();
  occ->add_option("--band-end-hz", band_end, "Upper band edge; only whole bins below it are kept");
  add_out_flag(occ, fl, "Grid output (.csv or .hex, or a directory)");

  auto* win = app.add_subcommand("windows", "Split a grid chronologically and summarize the windowed datasets");
  add_input_flags(win, fl);
  add_split_flags(win, fl);
  add_out_flag(win, fl, "Output directory");
  win->add_flag("--dump", dump, "Also write train_windows.csv and test_windows.csv");

  auto* train = app.add_subcommand("train", "Fit a model on the training split");
  add_input_flags(train, fl);
  add_split_flags(train, fl);
  add_model_flags(train, fl);
  add_out_flag(train, fl, "Model output (.json, or a directory)");

  auto* predict = app.add_subcommand("predict", "Score the test split with a trained model");
  add_input_flags(predict, fl);
  add(predict, fl, "--train-fraction", fl.train_fraction, "Split point (defaults to the model's)");
  predict->add_option("--model", model_path, "Model JSON from `train`")->required();
  add_out_flag(predict, fl, "Score output (.csv, or a directory)");

  auto* eval = app.add_subcommand("eval", "Accuracy, balanced accuracy and Pd at fixed Pfa for a score file");
  add_input_flags(eval, fl);
  eval->add_option("--scores", scores_path, "Score CSV from `predict`")->required();
  add_eval_flags(eval, fl);
  add_out_flag(eval, fl, "Report output (.json, or a directory)");

  auto* sweep = app.add_subcommand("sweep-k", "Train and evaluate one method for several history lengths");
  add_input_flags(sweep, fl);
  add(sweep, fl, "--train-fraction", fl.train_fraction, "Fraction of minutes used for training");
  add_model_flags(sweep, fl);
  add_eval_flags(sweep, fl);
  fl.by_name.emplace("--ks", sweep->add_option("--ks", fl.ks, "History lengths, comma separated")->delimiter(','));
  add_out_flag(sweep, fl, "K-sweep CSV output (.csv, or a directory)");

  auto* report = app.add_subcommand("report", "Plot-ready CSVs: per-bin accuracy, accuracy vs transitions, minute strip");
  add_input_flags(report, fl);
  report->add_option("--scores", scores_path, "Score CSV from `predict`")->required();
  report->add_option("--minute", minute, "Prediction minute for the truth/prediction strip");
  report->add_option("--tau", tau, "Decision threshold for the strip and accuracies");
  add_eval_flags(report, fl);
  add_out_flag(report, fl, "Output directory");

  auto* run = app.add_subcommand("run", "Full pipeline: ingest, occupancy, windows, train, predict, eval, report");
  add_input_flags(run, fl);
  add_split_flags(run, fl);
  add_model_flags(run, fl);
  add_eval_flags(run, fl);
  add_out_flag(run, fl, "Output directory");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (synth->parsed()) {
      RunConfig c;
      c.spec_path = fl.spec;
      const BandSpec band = io::band_from_json(read_json(fl.spec));
      const OccupancyGrid grid = gen_band(band);
      write_grid_artifact(resolve_out(fl.out, "grid.csv"), grid, c);
      if (!sweep_out.empty()) {
        std::ofstream f(sweep_out);
        if (!f) throw InputError("cannot write " + sweep_out);
        io::write_sweep_csv(f, gen_sweep(band));
      }
    } else if (occ->parsed()) {
      RunConfig c;
      c.sweep_path = fl.sweep;
      c.bin_width_hz = fl.bin_width;
      c.threshold_dbm = fl.threshold;
      std::ifstream f(fl.sweep);
      if (!f) throw InputError("cannot open " + fl.sweep);
      const OccupancyGrid grid = compute_occupancy(io::read_sweep_csv(f), fl.bin_width, fl.threshold, band_end);
      write_grid_artifact(resolve_out(fl.out, "grid.csv"), grid, c);
    } else if (win->parsed()) {
      const RunConfig c = build_config(fl);
      c.validate();
      const OccupancyGrid grid = load_grid(c);
      const auto [tr, te] = chronological_split(grid, c.train_fraction, c.history);
      const std::string dir = out_dir(fl.out);
      write_json_artifact((fs::path(dir) / "dataset.json").string(), dataset_summary(tr, te, c.history), c);
      if (dump) {
        std::ofstream a(fs::path(dir) / "train_windows.csv"), b(fs::path(dir) / "test_windows.csv");
        io::write_dataset_csv(a, build_windows(tr, c.history));
        io::write_dataset_csv(b, build_windows(te, c.history));
      }
    } else if (train->parsed()) {
      const RunConfig c = build_config(fl);
      c.validate();
      const OccupancyGrid grid = load_grid(c);
      const auto [tr, te] = chronological_split(grid, c.train_fraction, c.history);
      write_json_artifact(resolve_out(fl.out, "model.json"), model_to_json(train_model(tr, c)), c);
    } else if (predict->parsed()) {
      const json mj = read_json(model_path);
      RunConfig c = mj.contains("provenance") ? config_from_json(mj.at("provenance")) : RunConfig{};
      const RunConfig overrides = build_config(fl);
      if (fl.given("--spec") || fl.given("--grid") || fl.given("--sweep")) {
        c.spec_path = overrides.spec_path;
        c.grid_path = overrides.grid_path;
        c.sweep_path = overrides.sweep_path;
      }
      if (fl.given("--train-fraction")) c.train_fraction = overrides.train_fraction;
      if (fl.given("--bin-width-hz")) c.bin_width_hz = overrides.bin_width_hz;
      if (fl.given("--threshold-dbm")) c.threshold_dbm = overrides.threshold_dbm;
      const TrainedModel m = model_from_json(mj);
      c.history = m.history;
      c.method = m.method;
      c.validate();
      const OccupancyGrid grid = load_grid(c);
      const auto [tr, te] = chronological_split(grid, c.train_fraction, c.history);
      write_scores_artifact(resolve_out(fl.out, "scores.csv"), score_model(m, build_windows(te, c.history)), c);
    } else if (eval->parsed() || report->parsed()) {
      RunConfig c;
      if (auto prov = read_provenance(scores_path)) c = config_from_json(*prov);
      const RunConfig overrides = build_config(fl);
      if (fl.given("--spec") || fl.given("--grid") || fl.given("--sweep")) {
        c.spec_path = overrides.spec_path;
        c.grid_path = overrides.grid_path;
        c.sweep_path = overrides.sweep_path;
      }
      if (fl.given("--bin-width-hz")) c.bin_width_hz = overrides.bin_width_hz;
      if (fl.given("--threshold-dbm")) c.threshold_dbm = overrides.threshold_dbm;
      if (fl.given("--pfa")) c.pfa_targets = overrides.pfa_targets;
      c.validate();
      const OccupancyGrid grid = load_grid(c);
      const ScoreMatrix sm = load_scores(scores_path, grid);
      EvalOptions opt = eval_options(c, grid);
      opt.tau = tau;
      const EvalReport r = evaluate(sm, opt);
      if (eval->parsed()) {
        write_json_artifact(resolve_out(fl.out, "report.json"), io::to_json(r), c);
      } else {
        const fs::path dir(out_dir(fl.out));
        write_per_bin_csv((dir / "per_bin.csv").string(), r, c);
        write_rate_scatter_csv((dir / "accuracy_vs_rate.csv").string(), r, c);
        if (report->count("--minute"))
          write_minute_strip_csv((dir / ("strip_" + std::to_string(minute) + ".csv")).string(), sm, minute, tau, c);
      }
    } else if (sweep->parsed()) {
      const RunConfig c = build_config(fl);
      c.validate();
      const OccupancyGrid grid = load_grid(c);
      write_k_sweep_csv(resolve_out(fl.out, "k_sweep.csv"), k_sweep(grid, c, c.ks), c);
    } else if (run->parsed()) {
      RunConfig c = build_config(fl);
      c.out_dir = out_dir(fl.out);
      const PipelineResult res = run_pipeline(c);
      std::cout << io::to_json(res.report).dump(2) << '\n';
    }
  } catch (const StageError& e) {
    std::cerr << "error in stage " << e.what() << '\n';
    return 3;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
