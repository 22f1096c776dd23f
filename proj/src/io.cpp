#include "specpred/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace specpred::io {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view s, std::size_t line_no) {
  s = trim(s);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InputError("line " + std::to_string(line_no) + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

bool next_line(std::istream& is, std::string& line, std::size_t& line_no) {
  while (std::getline(is, line)) {
    ++line_no;
    const auto t = trim(line);
    if (!t.empty() && t.front() != '#') return true;
  }
  return false;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  return f;
}

char hex_digit(unsigned v) { return "0123456789abcdef"[v & 0xF]; }

unsigned hex_value(char c, std::size_t line_no) {
  if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
  if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
  if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
  throw InputError("line " + std::to_string(line_no) + ": invalid hex digit");
}

json tree_to_json(const DecisionTree& t) {
  json feature = json::array(), left = json::array(), right = json::array(), n0 = json::array(), n1 = json::array();
  for (const auto& nd : t.nodes) {
    feature.push_back(nd.feature);
    left.push_back(nd.left);
    right.push_back(nd.right);
    n0.push_back(nd.n0);
    n1.push_back(nd.n1);
  }
  return {{"feature", feature}, {"left", left}, {"right", right}, {"n0", n0}, {"n1", n1}};
}

DecisionTree tree_from_json(const json& j) {
  DecisionTree t;
  const auto& feature = j.at("feature");
  t.nodes.resize(feature.size());
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    auto& nd = t.nodes[i];
    nd.feature = feature[i].get<std::int32_t>();
    nd.left = j.at("left")[i].get<std::int32_t>();
    nd.right = j.at("right")[i].get<std::int32_t>();
    nd.n0 = j.at("n0")[i].get<std::uint32_t>();
    nd.n1 = j.at("n1")[i].get<std::uint32_t>();
  }
  return t;
}

json regtree_to_json(const RegTree& t) {
  json feature = json::array(), left = json::array(), right = json::array(), value = json::array();
  for (const auto& nd : t.nodes) {
    feature.push_back(nd.feature);
    left.push_back(nd.left);
    right.push_back(nd.right);
    value.push_back(nd.value);
  }
  return {{"feature", feature}, {"left", left}, {"right", right}, {"value", value}};
}

RegTree regtree_from_json(const json& j) {
  RegTree t;
  const auto& feature = j.at("feature");
  t.nodes.resize(feature.size());
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    auto& nd = t.nodes[i];
    nd.feature = feature[i].get<std::int32_t>();
    nd.left = j.at("left")[i].get<std::int32_t>();
    nd.right = j.at("right")[i].get<std::int32_t>();
    nd.value = j.at("value")[i].get<double>();
  }
  return t;
}

json shaped(const std::vector<double>& p, std::size_t offset, std::size_t rows, std::size_t cols) {
  return {{"shape", {rows, cols}},
          {"data", std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(offset),
                                       p.begin() + static_cast<std::ptrdiff_t>(offset + rows * cols))}};
}

void unshape(const json& j, std::vector<double>& p, std::size_t offset, std::size_t rows, std::size_t cols) {
  const auto shape = j.at("shape").get<std::vector<std::size_t>>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (shape.size() != 2 || shape[0] != rows || shape[1] != cols || data.size() != rows * cols)
    throw InputError("LSTM weight block has the wrong shape");
  std::copy(data.begin(), data.end(), p.begin() + static_cast<std::ptrdiff_t>(offset));
}

json op_to_json(const OperatingPoint& op) {
  return {{"target_pfa", op.target_pfa}, {"tau", op.tau}, {"achieved_pfa", op.achieved_pfa}, {"pd", op.pd}};
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw InputError("cannot format number");
  return std::string(buf, ptr);
}

void write_grid_csv(std::ostream& os, const OccupancyGrid& grid) {
  os << "minute";
  for (std::size_t f = 0; f < grid.bins(); ++f) os << ",bin_" << f;
  os << '\n';
  std::string line;
  for (std::size_t t = 0; t < grid.minutes(); ++t) {
    line = std::to_string(grid.start_minute() + static_cast<std::int64_t>(t));
    for (std::size_t f = 0; f < grid.bins(); ++f) {
      line += ',';
      line += grid.at(f, t) ? '1' : '0';
    }
    line += '\n';
    os << line;
  }
}

OccupancyGrid read_grid_csv(std::istream& is, double bin_width_hz) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(is, line, line_no)) throw InputError("grid file is empty");
  const auto header = split(trim(line), ',');
  if (header.size() < 2 || trim(header[0]) != "minute") throw InputError("grid header must start with 'minute'");
  const std::size_t F = header.size() - 1;
  for (std::size_t f = 0; f < F; ++f)
    if (trim(header[f + 1]) != "bin_" + std::to_string(f)) throw InputError("grid header column " + std::to_string(f + 1) + " must be bin_" + std::to_string(f));
  std::vector<std::vector<std::uint8_t>> cols(F);
  std::int64_t start = 0;
  std::size_t T = 0;
  while (next_line(is, line, line_no)) {
    const auto cells = split(trim(line), ',');
    if (cells.size() != F + 1) throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(F + 1) + " columns");
    const auto minute = parse_number<std::int64_t>(cells[0], line_no);
    if (T == 0) start = minute;
    else if (minute != start + static_cast<std::int64_t>(T))
      throw InputError("line " + std::to_string(line_no) + ": minutes must be consecutive");
    for (std::size_t f = 0; f < F; ++f) {
      const auto v = trim(cells[f + 1]);
      if (v != "0" && v != "1") throw InputError("line " + std::to_string(line_no) + ": occupancy values must be 0 or 1");
      cols[f].push_back(v == "1");
    }
    ++T;
  }
  OccupancyGrid grid(F, T, bin_width_hz, start);
  for (std::size_t f = 0; f < F; ++f) std::copy(cols[f].begin(), cols[f].end(), grid.bin(f).begin());
  return grid;
}

void write_grid_hex(std::ostream& os, const OccupancyGrid& grid) {
  os << "hexgrid bins=" << grid.bins() << " minutes=" << grid.minutes() << " start_minute=" << grid.start_minute()
     << " bin_width_hz=" << format_double(grid.bin_width_hz()) << '\n';
  const std::size_t digits = (grid.bins() + 3) / 4;
  std::string line(digits, '0');
  for (std::size_t t = 0; t < grid.minutes(); ++t) {
    for (std::size_t d = 0; d < digits; ++d) {
      unsigned v = 0;
      for (std::size_t b = 0; b < 4; ++b) {
        const std::size_t f = d * 4 + b;
        if (f < grid.bins() && grid.at(f, t)) v |= 1u << (3 - b);
      }
      line[d] = hex_digit(v);
    }
    os << line << '\n';
  }
}

OccupancyGrid read_grid_hex(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(is, line, line_no)) throw InputError("grid file is empty");
  const auto fields = split(trim(line), ' ');
  if (fields.empty() || fields[0] != "hexgrid") throw InputError("hex grid must start with 'hexgrid'");
  std::size_t F = 0, T = 0;
  std::int64_t start = 0;
  double width = 5e6;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const auto kv = split(fields[i], '=');
    if (kv.size() != 2) throw InputError("malformed hex grid header field");
    if (kv[0] == "bins") F = parse_number<std::size_t>(kv[1], line_no);
    else if (kv[0] == "minutes") T = parse_number<std::size_t>(kv[1], line_no);
    else if (kv[0] == "start_minute") start = parse_number<std::int64_t>(kv[1], line_no);
    else if (kv[0] == "bin_width_hz") width = parse_number<double>(kv[1], line_no);
    else throw InputError("unknown hex grid header field '" + std::string(kv[0]) + "'");
  }
  OccupancyGrid grid(F, T, width, start);
  const std::size_t digits = (F + 3) / 4;
  for (std::size_t t = 0; t < T; ++t) {
    if (!next_line(is, line, line_no)) throw InputError("hex grid ends after " + std::to_string(t) + " minutes");
    const auto s = trim(line);
    if (s.size() != digits) throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(digits) + " hex digits");
    for (std::size_t d = 0; d < digits; ++d) {
      const unsigned v = hex_value(s[d], line_no);
      for (std::size_t b = 0; b < 4; ++b) {
        const std::size_t f = d * 4 + b;
        const bool bit = (v >> (3 - b)) & 1u;
        if (f < F) grid.set(f, t, bit);
        else if (bit) throw InputError("line " + std::to_string(line_no) + ": padding bits must be zero");
      }
    }
  }
  if (next_line(is, line, line_no)) throw InputError("hex grid has more rows than its header declares");
  return grid;
}

OccupancyGrid read_grid(const std::string& path, double bin_width_hz) {
  auto f = open_in(path);
  std::string first;
  std::size_t line_no = 0;
  next_line(f, first, line_no);
  f.clear();
  f.seekg(0);
  if (first.rfind("hexgrid", 0) == 0) return read_grid_hex(f);
  return read_grid_csv(f, bin_width_hz);
}

void write_grid(const std::string& path, const OccupancyGrid& grid) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path);
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".hex") == 0) write_grid_hex(f, grid);
  else write_grid_csv(f, grid);
}

void write_sweep_csv(std::ostream& os, const PowerSweep& sweep) {
  os << "freq_hz,interval_index,power_dbm\n";
  for (std::size_t p = 0; p < sweep.points(); ++p) {
    const std::string freq = format_double(sweep.freq_points[p]);
    for (std::size_t t = 0; t < sweep.intervals; ++t)
      for (double v : sweep.samples(p, t)) os << freq << ',' << t << ',' << format_double(v) << '\n';
  }
}

PowerSweep read_sweep_csv(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(is, line, line_no)) throw InputError("sweep file is empty");
  const auto header = split(trim(line), ',');
  if (header.size() != 3 || trim(header[0]) != "freq_hz" || trim(header[1]) != "interval_index" ||
      trim(header[2]) != "power_dbm")
    throw InputError("sweep header must be freq_hz,interval_index,power_dbm");
  std::vector<SweepSample> rows;
  while (next_line(is, line, line_no)) {
    const auto c = split(trim(line), ',');
    if (c.size() != 3) throw InputError("line " + std::to_string(line_no) + ": expected 3 columns");
    rows.push_back({parse_number<double>(c[0], line_no), parse_number<std::size_t>(c[1], line_no),
                    parse_number<double>(c[2], line_no)});
  }
  return make_sweep(std::move(rows));
}

BandSpec band_from_json(const json& j) {
  BandSpec b;
  b.minutes = j.value("minutes", b.minutes);
  b.noise_floor_dbm = j.value("noise_floor_dbm", b.noise_floor_dbm);
  b.burst_power_dbm = j.value("burst_power_dbm", b.burst_power_dbm);
  b.samples_per_minute = j.value("samples_per_minute", b.samples_per_minute);
  b.bin_width_hz = j.value("bin_width_hz", b.bin_width_hz);
  b.start_freq_hz = j.value("start_freq_hz", b.start_freq_hz);
  b.points_per_bin = j.value("points_per_bin", b.points_per_bin);
  for (const auto& c : j.at("channels")) {
    const auto kind = c.at("kind").get<std::string>();
    ChannelSpec spec;
    spec.seed = c.value("seed", std::uint64_t{0});
    if (kind == "markov") {
      spec.kind = MarkovKind{c.at("p01").get<double>(), c.at("p10").get<double>(), c.value("initial", 0)};
    } else if (kind == "periodic") {
      spec.kind = PeriodicKind{c.at("period_min").get<int>(), c.at("duty").get<double>(),
                               c.value("jitter_prob", 0.0), c.value("phase", 0)};
    } else if (kind == "static") {
      spec.kind = StaticKind{c.at("state").get<int>(), c.value("flip_prob", 0.0)};
    } else if (kind == "lagged") {
      spec.kind = LaggedKind{c.at("order").get<int>(), c.at("weights").get<std::vector<double>>(),
                             c.value("bias", 0.0), c.value("noise", 0.0)};
    } else {
      throw InputError("unknown channel kind '" + kind + "'");
    }
    // `count` replicates an entry with consecutive seeds.
    const auto count = c.value("count", 1);
    if (count < 1) throw InputError("channel count must be >= 1");
    for (int i = 0; i < count; ++i) {
      b.channels.push_back(spec);
      b.channels.back().seed = spec.seed + static_cast<std::uint64_t>(i);
    }
  }
  b.validate();
  return b;
}

json band_to_json(const BandSpec& b) {
  json channels = json::array();
  for (const auto& c : b.channels) {
    json e = std::visit(
        [](const auto& k) -> json {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, MarkovKind>)
            return {{"kind", "markov"}, {"p01", k.p01}, {"p10", k.p10}, {"initial", k.initial}};
          else if constexpr (std::is_same_v<K, PeriodicKind>)
            return {{"kind", "periodic"}, {"period_min", k.period_min}, {"duty", k.duty},
                    {"jitter_prob", k.jitter_prob}, {"phase", k.phase}};
          else if constexpr (std::is_same_v<K, StaticKind>)
            return {{"kind", "static"}, {"state", k.state}, {"flip_prob", k.flip_prob}};
          else
            return {{"kind", "lagged"}, {"order", k.order}, {"weights", k.weights}, {"bias", k.bias},
                    {"noise", k.noise}};
        },
        c.kind);
    e["seed"] = c.seed;
    channels.push_back(std::move(e));
  }
  return {{"minutes", b.minutes},
          {"noise_floor_dbm", b.noise_floor_dbm},
          {"burst_power_dbm", b.burst_power_dbm},
          {"samples_per_minute", b.samples_per_minute},
          {"bin_width_hz", b.bin_width_hz},
          {"start_freq_hz", b.start_freq_hz},
          {"points_per_bin", b.points_per_bin},
          {"channels", channels}};
}

void write_dataset_csv(std::ostream& os, const WindowedDataset& ds) {
  os << "origin_minute";
  for (std::size_t j = 0; j < ds.feature_dim(); ++j) os << ",x_" << j;
  for (std::size_t f = 0; f < ds.bins; ++f) os << ",y_" << f;
  os << '\n';
  std::string line;
  for (std::size_t n = 0; n < ds.examples; ++n) {
    line = std::to_string(ds.origin_minutes[n]);
    for (auto v : ds.row(n)) {
      line += ',';
      line += v ? '1' : '0';
    }
    for (auto v : ds.target(n)) {
      line += ',';
      line += v ? '1' : '0';
    }
    line += '\n';
    os << line;
  }
}

void write_scores_csv(std::ostream& os, const std::vector<std::int64_t>& origins, const std::vector<double>& scores,
                      std::size_t bins) {
  if (scores.size() != origins.size() * bins) throw InputError("score matrix does not match origin count");
  os << "origin_minute";
  for (std::size_t f = 0; f < bins; ++f) os << ",s_" << f;
  os << '\n';
  for (std::size_t n = 0; n < origins.size(); ++n) {
    os << origins[n];
    for (std::size_t f = 0; f < bins; ++f) os << ',' << format_double(scores[n * bins + f]);
    os << '\n';
  }
}

ScoreTable read_scores_csv(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(is, line, line_no)) throw InputError("score file is empty");
  const auto header = split(trim(line), ',');
  if (header.size() < 2 || trim(header[0]) != "origin_minute") throw InputError("score header must start with origin_minute");
  ScoreTable t;
  t.bins = header.size() - 1;
  while (next_line(is, line, line_no)) {
    const auto c = split(trim(line), ',');
    if (c.size() != t.bins + 1) throw InputError("line " + std::to_string(line_no) + ": wrong column count");
    t.origins.push_back(parse_number<std::int64_t>(c[0], line_no));
    for (std::size_t f = 0; f < t.bins; ++f) t.scores.push_back(parse_number<double>(c[f + 1], line_no));
  }
  return t;
}

json to_json(const TransitionModel& m) {
  json bins = json::array();
  for (std::size_t f = 0; f < m.bins.size(); ++f) {
    const auto& b = m.bins[f];
    bins.push_back({{"p00", b.p00}, {"p01", b.p01}, {"p10", b.p10}, {"p11", b.p11}, {"counts", b.counts},
                    {"last_train_state", m.last_train_state[f]}});
  }
  return {{"type", "markov"}, {"alpha", m.alpha}, {"bins", bins}};
}

TransitionModel markov_from_json(const json& j) {
  TransitionModel m;
  m.alpha = j.at("alpha").get<double>();
  for (const auto& b : j.at("bins")) {
    TransitionModel::Bin bin;
    bin.p00 = b.at("p00").get<double>();
    bin.p01 = b.at("p01").get<double>();
    bin.p10 = b.at("p10").get<double>();
    bin.p11 = b.at("p11").get<double>();
    bin.counts = b.at("counts").get<std::array<std::uint64_t, 4>>();
    m.bins.push_back(bin);
    m.last_train_state.push_back(b.at("last_train_state").get<std::uint8_t>());
  }
  return m;
}

json to_json(const ForestParams& p) {
  return {{"n_trees", p.n_trees}, {"max_depth", p.max_depth}, {"min_samples_leaf", p.min_samples_leaf}, {"mtry", p.mtry}};
}

ForestParams forest_params_from_json(const json& j) {
  ForestParams p;
  p.n_trees = j.value("n_trees", p.n_trees);
  p.max_depth = j.value("max_depth", p.max_depth);
  p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
  p.mtry = j.value("mtry", p.mtry);
  return p;
}

json to_json(const MultiOutputForest& m) {
  json bins = json::array();
  for (const auto& f : m.per_bin) {
    json trees = json::array();
    for (const auto& t : f.trees) trees.push_back(tree_to_json(t));
    bins.push_back({{"trees", trees}});
  }
  const ForestParams p = m.per_bin.empty() ? ForestParams{} : m.per_bin.front().params;
  const std::uint64_t seed = m.per_bin.empty() ? 0 : m.per_bin.front().seed;
  return {{"type", "rf"}, {"feature_dim", m.feature_dim}, {"params", to_json(p)}, {"seed", seed}, {"bins", bins}};
}

MultiOutputForest forest_from_json(const json& j) {
  MultiOutputForest m;
  m.feature_dim = j.at("feature_dim").get<std::size_t>();
  const ForestParams p = forest_params_from_json(j.at("params"));
  const auto seed = j.at("seed").get<std::uint64_t>();
  for (const auto& b : j.at("bins")) {
    ForestModel f;
    f.params = p;
    f.seed = seed;
    f.feature_dim = m.feature_dim;
    for (const auto& t : b.at("trees")) f.trees.push_back(tree_from_json(t));
    m.per_bin.push_back(std::move(f));
  }
  return m;
}

json to_json(const GbtParams& p) {
  return {{"n_rounds", p.n_rounds}, {"max_depth", p.max_depth},   {"learning_rate", p.learning_rate},
          {"lambda", p.lambda},     {"gamma", p.gamma},           {"min_child_hessian", p.min_child_hessian}};
}

GbtParams gbt_params_from_json(const json& j) {
  GbtParams p;
  p.n_rounds = j.value("n_rounds", p.n_rounds);
  p.max_depth = j.value("max_depth", p.max_depth);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.lambda = j.value("lambda", p.lambda);
  p.gamma = j.value("gamma", p.gamma);
  p.min_child_hessian = j.value("min_child_hessian", p.min_child_hessian);
  return p;
}

json to_json(const MultiOutputGbt& m) {
  json bins = json::array();
  for (const auto& b : m.per_bin) {
    json rounds = json::array();
    for (const auto& t : b.rounds) rounds.push_back(regtree_to_json(t));
    bins.push_back({{"base_score", b.base_score},
                    {"constant", b.constant ? json(*b.constant) : json(nullptr)},
                    {"rounds", rounds},
                    {"train_loss", b.train_loss}});
  }
  const GbtParams p = m.per_bin.empty() ? GbtParams{} : m.per_bin.front().params;
  return {{"type", "gbt"}, {"feature_dim", m.feature_dim}, {"params", to_json(p)}, {"seed", m.seed}, {"bins", bins}};
}

MultiOutputGbt gbt_from_json(const json& j) {
  MultiOutputGbt m;
  m.feature_dim = j.at("feature_dim").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  const GbtParams p = gbt_params_from_json(j.at("params"));
  for (const auto& b : j.at("bins")) {
    GbtModel g;
    g.params = p;
    g.feature_dim = m.feature_dim;
    g.base_score = b.at("base_score").get<double>();
    if (!b.at("constant").is_null()) g.constant = b.at("constant").get<double>();
    for (const auto& t : b.at("rounds")) g.rounds.push_back(regtree_from_json(t));
    g.train_loss = b.at("train_loss").get<std::vector<double>>();
    m.per_bin.push_back(std::move(g));
  }
  return m;
}

json to_json(const LstmConfig& c) {
  return {{"hidden_size", c.hidden_size},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"optimizer", c.optimizer == Optimizer::adam ? "adam" : "sgd"},
          {"grad_clip_norm", c.grad_clip_norm},
          {"seed", c.seed}};
}

LstmConfig lstm_config_from_json(const json& j) {
  LstmConfig c;
  c.hidden_size = j.value("hidden_size", c.hidden_size);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  const auto opt = j.value("optimizer", std::string("adam"));
  if (opt != "adam" && opt != "sgd") throw InputError("optimizer must be adam or sgd");
  c.optimizer = opt == "adam" ? Optimizer::adam : Optimizer::sgd;
  c.grad_clip_norm = j.value("grad_clip_norm", c.grad_clip_norm);
  c.seed = j.value("seed", c.seed);
  return c;
}

json to_json(const LstmModel& m) {
  const auto& w = m.weights;
  const std::size_t F = w.inputs, H = w.hidden;
  return {{"type", "lstm"},
          {"history", m.history},
          {"config", to_json(m.config)},
          {"inputs", F},
          {"hidden", H},
          {"weights",
           {{"wx", shaped(w.params, w.wx_offset(), F, 4 * H)},
            {"wh", shaped(w.params, w.wh_offset(), H, 4 * H)},
            {"b", shaped(w.params, w.b_offset(), 1, 4 * H)},
            {"wy", shaped(w.params, w.wy_offset(), F, H)},
            {"by", shaped(w.params, w.by_offset(), 1, F)}}},
          {"epoch_loss", m.epoch_loss}};
}

LstmModel lstm_from_json(const json& j) {
  LstmModel m;
  m.history = j.at("history").get<std::size_t>();
  m.config = lstm_config_from_json(j.at("config"));
  const auto F = j.at("inputs").get<std::size_t>();
  const auto H = j.at("hidden").get<std::size_t>();
  m.weights = LstmWeights(F, H);
  const auto& ws = j.at("weights");
  unshape(ws.at("wx"), m.weights.params, m.weights.wx_offset(), F, 4 * H);
  unshape(ws.at("wh"), m.weights.params, m.weights.wh_offset(), H, 4 * H);
  unshape(ws.at("b"), m.weights.params, m.weights.b_offset(), 1, 4 * H);
  unshape(ws.at("wy"), m.weights.params, m.weights.wy_offset(), F, H);
  unshape(ws.at("by"), m.weights.params, m.weights.by_offset(), 1, F);
  m.epoch_loss = j.value("epoch_loss", std::vector<double>{});
  if (!m.weights.all_finite()) throw InputError("LSTM weights contain nonfinite values");
  return m;
}

json to_json(const EvalReport& r) {
  json pd_all = json::array(), pd_dyn = json::array();
  for (const auto& op : r.pd_all) pd_all.push_back(op_to_json(op));
  for (const auto& op : r.pd_dynamic) pd_dyn.push_back(op_to_json(op));
  std::vector<int> dynamic_mask;
  for (auto c : r.classes) dynamic_mask.push_back(c == DynamicsClass::dynamic_bin ? 1 : 0);
  json fit = nullptr;
  if (r.fit) fit = {{"slope", r.fit->slope}, {"intercept", r.fit->intercept}, {"pearson_r", r.fit->pearson_r}};
  return {{"method", r.method},
          {"history", r.history},
          {"rows", r.rows},
          {"bins", r.bins},
          {"average_accuracy", r.average_accuracy},
          {"balanced_accuracy", r.balanced.mean},
          {"balanced_accuracy_per_bin", r.balanced.per_bin},
          {"single_class_bins", r.balanced.single_class_bins},
          {"pd_at_pfa", pd_all},
          {"dynamic_only",
           {{"average_accuracy", r.average_accuracy_dynamic ? json(*r.average_accuracy_dynamic) : json(nullptr)},
            {"balanced_accuracy", r.balanced_accuracy_dynamic ? json(*r.balanced_accuracy_dynamic) : json(nullptr)},
            {"pd_at_pfa", pd_dyn}}},
          {"per_bin_accuracy", r.per_bin_accuracy},
          {"transition_rate", r.transition_rate},
          {"accuracy_vs_dynamics", fit},
          {"dynamic_mask", dynamic_mask}};
}

}  // namespace specpred::io
