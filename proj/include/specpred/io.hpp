#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "specpred/boost.hpp"
#include "specpred/dataset.hpp"
#include "specpred/eval.hpp"
#include "specpred/forest.hpp"
#include "specpred/lstm.hpp"
#include "specpred/markov.hpp"
#include "specpred/occupancy.hpp"
#include "specpred/synthgen.hpp"

namespace specpred::io {

using nlohmann::json;

// Readers skip blank lines and lines starting with `#`.

// Occupancy grid, CSV form: header `minute,bin_0,...,bin_{F-1}`, one row per
// minute with the absolute minute index and 0/1 values. Bin width is not part
// of the file and is supplied by the reader.
void write_grid_csv(std::ostream& os, const OccupancyGrid& grid);
OccupancyGrid read_grid_csv(std::istream& is, double bin_width_hz = 5e6);

// Compact form: a header line
//   hexgrid bins=F minutes=T start_minute=S bin_width_hz=W
// followed by one line per minute of ceil(F/4) hex digits. Bin f is bit
// (3 - f % 4) of digit f / 4, so the string reads left to right in bin order.
void write_grid_hex(std::ostream& os, const OccupancyGrid& grid);
OccupancyGrid read_grid_hex(std::istream& is);

/// Reads either form, chosen by the first line.
OccupancyGrid read_grid(const std::string& path, double bin_width_hz = 5e6);
void write_grid(const std::string& path, const OccupancyGrid& grid);  // .hex suffix selects the compact form

// Sweep CSV: header `freq_hz,interval_index,power_dbm`, one row per sample.
void write_sweep_csv(std::ostream& os, const PowerSweep& sweep);
PowerSweep read_sweep_csv(std::istream& is);

BandSpec band_from_json(const json& j);
json band_to_json(const BandSpec& band);

// Dataset dump: `origin_minute,x_0..x_{KF-1},y_0..y_{F-1}`.
void write_dataset_csv(std::ostream& os, const WindowedDataset& ds);

// Scores: `origin_minute,s_0..s_{F-1}` with shortest round-trip decimals.
void write_scores_csv(std::ostream& os, const std::vector<std::int64_t>& origins, const std::vector<double>& scores,
                      std::size_t bins);
struct ScoreTable {
  std::vector<std::int64_t> origins;
  std::vector<double> scores;
  std::size_t bins = 0;
};
ScoreTable read_scores_csv(std::istream& is);

json to_json(const TransitionModel& m);
TransitionModel markov_from_json(const json& j);
json to_json(const ForestParams& p);
ForestParams forest_params_from_json(const json& j);
json to_json(const MultiOutputForest& m);
MultiOutputForest forest_from_json(const json& j);
json to_json(const GbtParams& p);
GbtParams gbt_params_from_json(const json& j);
json to_json(const MultiOutputGbt& m);
MultiOutputGbt gbt_from_json(const json& j);
json to_json(const LstmConfig& c);
LstmConfig lstm_config_from_json(const json& j);
json to_json(const LstmModel& m);
LstmModel lstm_from_json(const json& j);

json to_json(const EvalReport& r);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

}  // namespace specpred::io
