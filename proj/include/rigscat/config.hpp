#pragma once
// Run configuration: flat key=value text files.
//
// Keys:
//   scenario         = friedrichs | lattice | chain | timecheck | custom
//   model.kind       = quadrature | lattice
//   model.interval   = <lo> <hi>            (spectral units; quadrature only)
//   model.N          = <nodes>              (quadrature only)
//   model.L          = <half-width>         (lattice only)
//   rigging.weight   = quadrature: polynomial coefficients, constant first
//                      lattice:    <power> <scale>
//   rigging.m        = <tracked dimension>
//   perturbation.J   = row-major complex pairs (2*m*m reals)
//   grid.points      = <spectral grid size>
//   window.<k>       = <lo> <hi>            (overlapping spectral windows)
//   chain.second.J   = row-major complex pairs for the second coupling step
//   time.radius / time.horizon / time.sigma / time.center / time.theta0
//   seed             = <unsigned>
//
// A preset named by `scenario` fills defaults; explicit keys override them.
// Parsing failures throw ConfigError (the CLI maps these to exit code 2).

#include <rigscat/common.hpp>
#include <rigscat/model.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rigscat {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

using KeyMap = std::map<std::string, std::string>;

inline std::string trim_copy(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// key = value lines; '#' starts a comment; blank lines ignored.
inline KeyMap parse_key_values(const std::string& text) {
  KeyMap out;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim_copy(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineNo) + ": expected key = value");
    std::string key = trim_copy(line.substr(0, eq));
    std::string val = trim_copy(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineNo) + ": empty key");
    out[key] = val;
  }
  return out;
}

inline std::vector<double> parse_number_list(const std::string& key, const std::string& val) {
  std::vector<double> out;
  std::istringstream in(val);
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(key + ": '" + tok + "' is not a number");
    }
  }
  return out;
}

inline double parse_one_number(const std::string& key, const std::string& val) {
  auto v = parse_number_list(key, val);
  if (v.size() != 1) throw ConfigError(key + ": expected a single number");
  return v[0];
}

inline int parse_int(const std::string& key, const std::string& val) {
  double v = parse_one_number(key, val);
  int i = static_cast<int>(v);
  if (double(i) != v) throw ConfigError(key + ": expected an integer");
  return i;
}

// Row-major complex matrix from re/im pairs.
inline Mat parse_complex_matrix(const std::string& key, const std::string& val, int m) {
  auto nums = parse_number_list(key, val);
  if (static_cast<int>(nums.size()) != 2 * m * m)
    throw ConfigError(key + ": expected " + std::to_string(2 * m * m) +
                      " numbers (row-major complex pairs) but got " +
                      std::to_string(nums.size()));
  Mat J(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      J(i, j) = cplx(nums[2 * (i * m + j)], nums[2 * (i * m + j) + 1]);
  return J;
}

struct TimeSettings {
  int radius = 2000;
  double horizon = 150.0;
  double sigma = 20.0;
  double center = 100.0;
  double theta0 = 0.5 * pi;
};

struct RunConfig {
  std::string scenario = "custom";
  ModelKind kind = ModelKind::quadrature;
  Interval interval{0.0, 1.0};
  int N = 40;
  int L = 400;
  WeightSpec weight{{1.0}, 1.5, 1.0};
  int m = 6;
  Mat J;        // first (or only) coupling
  Mat chainJ;   // second coupling step, when the scenario layers two
  bool hasChain = false;
  int gridPoints = 25;
  std::vector<Interval> windows;
  TimeSettings time;
  std::uint64_t seed = 20260815u;
  std::uint64_t configHash = 0;
  KeyMap echo;  // canonical key/value echo for the manifest
};

inline Mat rank_one_matrix(int m, double v, int index = 0) {
  Mat J = Mat::Zero(m, m);
  J(index, index) = v;
  return J;
}

inline void apply_preset(RunConfig& c, const std::string& name) {
  if (name == "friedrichs") {
    c.kind = ModelKind::quadrature;
    c.interval = Interval{0.0, 1.0};
    c.N = 40;
    c.m = 6;
    c.weight.poly = {1.0};
    c.J = rank_one_matrix(c.m, 0.3);
    c.gridPoints = 25;
    c.windows = {Interval{0.2, 0.6}, Interval{0.4, 0.8}, Interval{0.3, 0.7}};
  } else if (name == "lattice") {
    c.kind = ModelKind::lattice;
    c.L = 400;
    c.m = 9;
    c.weight.power = 1.5;
    c.weight.scale = 1.0;
    c.J = rank_one_matrix(c.m, 0.5);
    c.gridPoints = 25;
    c.windows = {Interval{-1.2, 0.2}, Interval{-0.4, 1.0}, Interval{-0.8, 0.6}};
  } else if (name == "chain") {
    c.kind = ModelKind::quadrature;
    c.interval = Interval{0.0, 1.0};
    c.N = 40;
    c.m = 6;
    c.weight.poly = {1.0};
    c.J = rank_one_matrix(c.m, 0.3);
    c.chainJ = rank_one_matrix(c.m, 0.4);
    c.hasChain = true;
    c.gridPoints = 25;
    c.windows = {Interval{0.2, 0.6}, Interval{0.4, 0.8}, Interval{0.3, 0.7}};
  } else if (name == "timecheck") {
    c.kind = ModelKind::lattice;
    c.L = 400;
    c.m = 201;  // tracked sites cover the packet
    c.weight.power = 1.5;
    c.weight.scale = 1.0;
    c.J = rank_one_matrix(c.m, 0.5);
    c.gridPoints = 9;
    c.time = TimeSettings{1200, 120.0, 15.0, 60.0, 0.5 * pi};
  } else if (name == "custom") {
    // keep defaults; explicit keys must describe the run
  } else {
    throw ConfigError("unknown scenario preset '" + name + "'");
  }
}

inline RunConfig config_from_keys(const KeyMap& keys) {
  RunConfig c;
  auto it = keys.find("scenario");
  c.scenario = (it != keys.end()) ? it->second : "custom";
  apply_preset(c, c.scenario);

  // Explicit windows replace the preset list rather than extending it.
  for (const auto& [key, val] : keys)
    if (key.rfind("window.", 0) == 0) {
      c.windows.clear();
      break;
    }

  // Coupling matrices are parsed after the loop: their dimension follows the
  // final rigging.m regardless of key order.
  std::string jText, chainText;
  bool haveJ = false, haveChain = false;

  for (const auto& [key, val] : keys) {
    if (key == "scenario") {
    } else if (key == "model.kind") {
      if (val == "quadrature") c.kind = ModelKind::quadrature;
      else if (val == "lattice") c.kind = ModelKind::lattice;
      else throw ConfigError("model.kind: expected quadrature or lattice");
    } else if (key == "model.interval") {
      auto v = parse_number_list(key, val);
      if (v.size() != 2 || !(v[0] < v[1]))
        throw ConfigError("model.interval: expected <lo> <hi> with lo < hi");
      c.interval = Interval{v[0], v[1]};
    } else if (key == "model.N") {
      c.N = parse_int(key, val);
    } else if (key == "model.L") {
      c.L = parse_int(key, val);
    } else if (key == "rigging.weight") {
      auto v = parse_number_list(key, val);
      if (v.empty()) throw ConfigError("rigging.weight: expected numbers");
      if (c.kind == ModelKind::quadrature) {
        c.weight.poly = v;
      } else {
        if (v.size() != 2) throw ConfigError("rigging.weight: lattice form is <power> <scale>");
        c.weight.power = v[0];
        c.weight.scale = v[1];
      }
    } else if (key == "rigging.m") {
      c.m = parse_int(key, val);
    } else if (key == "perturbation.J") {
      jText = val;
      haveJ = true;
    } else if (key == "chain.second.J") {
      chainText = val;
      haveChain = true;
    } else if (key == "grid.points") {
      c.gridPoints = parse_int(key, val);
      if (c.gridPoints < 2) throw ConfigError("grid.points: need at least 2");
    } else if (key.rfind("window.", 0) == 0) {
      auto v = parse_number_list(key, val);
      if (v.size() != 2 || !(v[0] < v[1]))
        throw ConfigError(key + ": expected <lo> <hi> with lo < hi");
      c.windows.push_back(Interval{v[0], v[1]});
    } else if (key == "time.radius") {
      c.time.radius = parse_int(key, val);
    } else if (key == "time.horizon") {
      c.time.horizon = parse_one_number(key, val);
    } else if (key == "time.sigma") {
      c.time.sigma = parse_one_number(key, val);
    } else if (key == "time.center") {
      c.time.center = parse_one_number(key, val);
    } else if (key == "time.theta0") {
      c.time.theta0 = parse_one_number(key, val);
    } else if (key == "seed") {
      double v = parse_one_number(key, val);
      if (v < 0) throw ConfigError("seed: must be nonnegative");
      c.seed = static_cast<std::uint64_t>(v);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }

  if (haveJ) c.J = parse_complex_matrix("perturbation.J", jText, c.m);
  if (haveChain) {
    c.chainJ = parse_complex_matrix("chain.second.J", chainText, c.m);
    c.hasChain = true;
  }
  // Preset couplings are rank one at the first tracked slot; they follow an
  // overridden truncation size when no explicit matrix was given.
  auto followM = [&](Mat& j) {
    if (j.rows() > 0 && j.rows() != c.m &&
        max_abs(Mat(j - rank_one_matrix(static_cast<int>(j.rows()),
                                        j(0, 0).real()))) == 0.0)
      j = rank_one_matrix(c.m, j(0, 0).real());
  };
  if (!haveJ) followM(c.J);
  if (!haveChain && c.hasChain) followM(c.chainJ);
  if (c.J.rows() == 0)
    throw ConfigError("perturbation.J: a coupling must be specified");
  if (c.J.rows() != c.m)
    throw ConfigError("perturbation.J: dimension does not match rigging.m");
  if (c.hasChain && c.chainJ.rows() != c.m)
    throw ConfigError("chain.second.J: dimension does not match rigging.m");

  // Canonical echo (sorted keys) and content hash.
  c.echo = keys;
  std::string canon;
  for (const auto& [k, v] : keys) canon += k + "=" + v + "\n";
  c.configHash = fnv1a(canon);
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_keys(parse_key_values(buf.str()));
}

// Model/rigging/coupling construction from a parsed config.
inline SpectralModel model_from_config(const RunConfig& c) {
  return (c.kind == ModelKind::quadrature) ? build_quadrature_model(c.interval, c.N)
                                           : build_lattice_model(c.L);
}

inline Rigging rigging_from_config(const SpectralModel& model, const RunConfig& c) {
  return build_rigging(model, c.weight, c.m);
}

}  // namespace rigscat
