#pragma once

// Run configuration (JSON) and CSV/JSON artifact writers.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "structured_harvest/grid.hpp"
#include "structured_harvest/model.hpp"
#include "structured_harvest/transport.hpp"

namespace structured_harvest {

using json = nlohmann::json;

/// 17 significant digits so outputs round-trip and compare byte-wise.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json number_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Configuration

enum class InitialCondition { kNoHarvestSteady, kZero, kCustomFile };

struct SweepSpec {
  std::optional<double> lo;  // defaults to l0
  std::optional<double> hi;  // defaults to lm
  double spacing = 1.0;
};

struct RunConfig {
  ModelParams params;
  std::size_t n_cells = 400;
  double cfl_safety = 0.8;
  InitialCondition initial_condition = InitialCondition::kNoHarvestSteady;
  std::string initial_file;
  SweepSpec sweep;
  std::string output_dir = "out";
  ThresholdMapping threshold_mapping = ThresholdMapping::kCellAverage;
  double convergence_tolerance = 0.01;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline const char* to_string(InitialCondition ic) {
  switch (ic) {
    case InitialCondition::kNoHarvestSteady: return "no-harvest-steady";
    case InitialCondition::kZero: return "zero";
    case InitialCondition::kCustomFile: return "custom-file";
  }
  return "";
}

inline const char* to_string(ThresholdMapping m) {
  return m == ThresholdMapping::kCellAverage ? "cell-average" : "cell-center";
}

#define SH_PARAM_FIELDS(X) \
  X(l0) X(lm) X(L_inf) X(K) X(alpha) X(mu0) X(mu1) X(chi) X(c0) X(m0) X(l_mat) X(p) X(r) X(u_max) X(T)

}  // namespace detail

inline json to_json(const ModelParams& p) {
  json j;
#define SH_WRITE(name) j[#name] = p.name;
  SH_PARAM_FIELDS(SH_WRITE)
#undef SH_WRITE
  return j;
}

inline json to_json(const RunConfig& c) {
  json j = to_json(c.params);
  j["n_cells"] = c.n_cells;
  j["cfl_safety"] = c.cfl_safety;
  j["initial_condition"] = detail::to_string(c.initial_condition);
  j["initial_file"] = c.initial_file;
  j["sweep"] = {{"lo", number_or_null(c.sweep.lo)}, {"hi", number_or_null(c.sweep.hi)},
                {"spacing", c.sweep.spacing}};
  j["output_dir"] = c.output_dir;
  j["threshold_mapping"] = detail::to_string(c.threshold_mapping);
  j["convergence_tolerance"] = c.convergence_tolerance;
  return j;
}

/// Reads a config object. Missing keys keep their defaults; unknown keys are
/// rejected so typos do not silently fall back to the defaults.
inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      bool known = false;
#define SH_READ(name)                  \
  if (key == #name) {                  \
    c.params.name = value.get<double>(); \
    known = true;                      \
  }
      SH_PARAM_FIELDS(SH_READ)
#undef SH_READ
      if (known) continue;
      if (key == "n_cells") {
        c.n_cells = value.get<std::size_t>();
      } else if (key == "cfl_safety") {
        c.cfl_safety = value.get<double>();
      } else if (key == "initial_condition") {
        const auto s = value.get<std::string>();
        if (s == "no-harvest-steady") c.initial_condition = InitialCondition::kNoHarvestSteady;
        else if (s == "zero") c.initial_condition = InitialCondition::kZero;
        else if (s == "custom-file") c.initial_condition = InitialCondition::kCustomFile;
        else throw ConfigError("unknown initial_condition '" + s + "'");
      } else if (key == "initial_file") {
        c.initial_file = value.get<std::string>();
      } else if (key == "sweep") {
        if (value.contains("lo") && !value["lo"].is_null()) c.sweep.lo = value["lo"].get<double>();
        if (value.contains("hi") && !value["hi"].is_null()) c.sweep.hi = value["hi"].get<double>();
        if (value.contains("spacing")) c.sweep.spacing = value["spacing"].get<double>();
      } else if (key == "output_dir") {
        c.output_dir = value.get<std::string>();
      } else if (key == "threshold_mapping") {
        const auto s = value.get<std::string>();
        if (s == "cell-average") c.threshold_mapping = ThresholdMapping::kCellAverage;
        else if (s == "cell-center") c.threshold_mapping = ThresholdMapping::kCellCenter;
        else throw ConfigError("unknown threshold_mapping '" + s + "'");
      } else if (key == "convergence_tolerance") {
        c.convergence_tolerance = value.get<double>();
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

/// FNV-1a over the canonical JSON dump, as 16 hex digits. The output
/// directory is not part of the hash.
inline std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  j.erase("output_dir");
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// CSV

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  CsvWriter& cell(double v) { return raw(format_number(v)); }
  CsvWriter& cell(const std::optional<double>& v) { return raw(v ? format_number(*v) : std::string()); }
  CsvWriter& cell(bool v) { return raw(v ? "true" : "false"); }
  CsvWriter& raw(const std::string& s) {
    out_ << (first_ ? "" : ",") << s;
    first_ = false;
    return *this;
  }
  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  std::ofstream out_;
  bool first_ = true;
};

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// Writes the trajectory table `t,E,N,harvest_value_rate`.
inline void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& rec) {
  CsvWriter w(path, {"t", "E", "N", "harvest_value_rate"});
  for (std::size_t k = 0; k < rec.times.size(); ++k) {
    w.cell(rec.times[k]).cell(rec.E_series[k]).cell(rec.N_series[k]).cell(rec.harvest_value_rate[k]);
    w.end_row();
  }
}

/// `l,x` rows for a profile sampled at arbitrary points.
inline void write_profile_csv(const std::filesystem::path& path, const std::vector<double>& l,
                              const std::vector<double>& x) {
  CsvWriter w(path, {"l", "x"});
  for (std::size_t i = 0; i < l.size(); ++i) {
    w.cell(l[i]).cell(x[i]);
    w.end_row();
  }
}

/// Reads an `l,x` CSV and interpolates it linearly onto the cell centers;
/// outside the sampled range the end values are held.
inline PopulationState read_initial_profile(const std::filesystem::path& path, const SizeGrid& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open initial profile " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<double> ls;
  std::vector<double> xs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a;
    std::string b;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',')) {
      throw ConfigError("malformed row in " + path.string() + ": " + line);
    }
    ls.push_back(std::stod(a));
    xs.push_back(std::stod(b));
  }
  if (ls.empty()) throw ConfigError("initial profile " + path.string() + " has no rows");
  for (std::size_t i = 1; i < ls.size(); ++i) {
    if (!(ls[i] > ls[i - 1])) throw ConfigError("initial profile lengths must increase");
  }
  PopulationState s{0.0, std::vector<double>(grid.n_cells)};
  for (std::size_t i = 0; i < grid.n_cells; ++i) {
    const double l = grid.centers[i];
    double v;
    if (l <= ls.front()) {
      v = xs.front();
    } else if (l >= ls.back()) {
      v = xs.back();
    } else {
      const auto it = std::upper_bound(ls.begin(), ls.end(), l);
      const std::size_t k = static_cast<std::size_t>(it - ls.begin());
      const double w = (l - ls[k - 1]) / (ls[k] - ls[k - 1]);
      v = (1.0 - w) * xs[k - 1] + w * xs[k];
    }
    if (v < 0.0) throw ConfigError("initial profile must be non-negative");
    s.density[i] = v;
  }
  return s;
}

}  // namespace structured_harvest

#undef SH_PARAM_FIELDS
