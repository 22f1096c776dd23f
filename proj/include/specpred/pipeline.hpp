#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "specpred/boost.hpp"
#include "specpred/eval.hpp"
#include "specpred/forest.hpp"
#include "specpred/io.hpp"
#include "specpred/lstm.hpp"
#include "specpred/markov.hpp"
#include "specpred/synthgen.hpp"

namespace specpred {

enum class Method { markov, rf, gbt, lstm };

std::string method_name(Method m);
Method parse_method(const std::string& s);

inline constexpr std::uint64_t default_seed = 20240601;

struct RunConfig {
  // Exactly one input source: a band spec, a grid file, or a sweep CSV.
  std::string spec_path;
  std::string grid_path;
  std::string sweep_path;
  double bin_width_hz = 5e6;
  std::optional<double> threshold_dbm;  // sweep input only; --spec input thresholds at the band midpoint
  std::size_t history = 10;
  double train_fraction = 0.8;
  Method method = Method::markov;
  double markov_alpha = 1.0;
  ForestParams forest;
  GbtParams gbt;
  LstmConfig lstm;
  std::uint64_t seed = default_seed;
  std::vector<double> pfa_targets{0.01, 0.05};
  std::vector<std::size_t> ks{1, 5, 10, 30, 60};
  std::string out_dir;

  void validate() const;
};

/// Provenance block. The output directory is left out so that identical runs
/// written to different places produce identical files.
io::json config_to_json(const RunConfig& c);
RunConfig config_from_json(const io::json& j);

/// A failure inside one pipeline stage; what() is "<stage>: <cause>".
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause)
      : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct TrainedModel {
  Method method = Method::markov;
  std::size_t history = 0;
  std::variant<TransitionModel, MultiOutputForest, MultiOutputGbt, LstmModel> model;
};

io::json model_to_json(const TrainedModel& m);
TrainedModel model_from_json(const io::json& j);

/// Loads (or synthesizes) the grid named by the config's input fields.
OccupancyGrid load_grid(const RunConfig& c);

TrainedModel train_model(const OccupancyGrid& train, const RunConfig& c);
TrainedModel train_model(const WindowedDataset& train, const OccupancyGrid& train_grid, const RunConfig& c);

/// Scores every window of `ds`; the result carries the dataset's targets as labels.
ScoreMatrix score_model(const TrainedModel& m, const WindowedDataset& ds);

/// Labels for the given origin minutes, looked up in the grid.
ScoreMatrix attach_labels(const io::ScoreTable& scores, const OccupancyGrid& grid);

EvalOptions eval_options(const RunConfig& c, const OccupancyGrid& full_grid);

struct KSweepEntry {
  std::size_t history = 0;
  EvalReport report;
};

/// Train and evaluate once per K. Every K is scored on the same prediction
/// minutes (those with at least max(Ks) test minutes of history) so that the
/// entries are directly comparable.
std::vector<KSweepEntry> k_sweep(const OccupancyGrid& grid, const RunConfig& c, const std::vector<std::size_t>& ks);

struct PipelineResult {
  OccupancyGrid grid;
  ScoreMatrix scores;
  EvalReport report;
};

/// synth/ingest -> occupancy -> windows -> train -> predict -> eval, writing
/// the artifact set into c.out_dir when it is non-empty.
PipelineResult run_pipeline(const RunConfig& c);

// Artifact writers shared by the pipeline and the CLI. JSON artifacts carry a
// "provenance" member; CSV artifacts start with a `# provenance <json>` line.
void write_json_artifact(const std::string& path, const io::json& body, const RunConfig& c);
void write_grid_artifact(const std::string& path, const OccupancyGrid& grid, const RunConfig& c);
void write_scores_artifact(const std::string& path, const ScoreMatrix& sm, const RunConfig& c);
void write_per_bin_csv(const std::string& path, const EvalReport& r, const RunConfig& c);
void write_rate_scatter_csv(const std::string& path, const EvalReport& r, const RunConfig& c);
void write_k_sweep_csv(const std::string& path, const std::vector<KSweepEntry>& entries, const RunConfig& c);
/// Truth and 0/1 prediction per bin for one prediction minute.
void write_minute_strip_csv(const std::string& path, const ScoreMatrix& sm, std::int64_t minute, double tau,
                            const RunConfig& c);

io::json dataset_summary(const OccupancyGrid& train, const OccupancyGrid& test, std::size_t history);

}  // namespace specpred
