#pragma once

// Typed run configuration shared by all subcommands. Load order: built-in
// defaults, then a JSON file, then --key value overrides. Unknown keys and
// out-of-range values are rejected with ConfigError.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kfspec/errors.hpp"
#include "kfspec/kf_spectral.hpp"
#include "kfspec/measure.hpp"
#include "kfspec/measure_json.hpp"

namespace kfspec::cli {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class ValueType { integer, unsigned_integer, real, string, real_list, measure };

struct KeyInfo {
  std::string_view key;
  ValueType type;
  std::string_view help;
};

inline constexpr KeyInfo kKeys[] = {
    {"measure", ValueType::measure, "measure JSON or preset name"},
    {"resolution", ValueType::integer, "node count for lebesgue/density measures"},
    {"depth", ValueType::integer, "cylinder depth for IFS measures"},
    {"anchor", ValueType::string, "IFS atom placement: origin|barycenter"},
    {"bc", ValueType::string, "dirichlet|neumann|mixed"},
    {"theta", ValueType::real, "first-order boundary phase"},
    {"n_max", ValueType::integer, "first-order modes |n| <= n_max"},
    {"n_eigs", ValueType::integer, "number of K_F modes"},
    {"lebesgue_grid", ValueType::integer, "neumann Lebesgue grid size (0 = auto)"},
    {"grid_n", ValueType::integer, "uniform CDF sample count"},
    {"n_iter", ValueType::integer, "CDF iterations (0 = auto)"},
    {"gap_level", ValueType::integer, "IFS gap endpoint level in CDF output"},
    {"times", ValueType::real_list, "heat output times"},
    {"initial", ValueType::string, "heat datum: sin:k|cos:k|const|mode:m|poly:c0,c1,..."},
    {"t_grid", ValueType::real_list, "simulation time grid in [0,1]"},
    {"n_paths", ValueType::integer, "Monte Carlo path count"},
    {"seed", ValueType::unsigned_integer, "random seed"},
    {"x0", ValueType::real, "path start point"},
    {"threads", ValueType::integer, "worker threads (0 = hardware)"},
    {"t1", ValueType::real, "verify: first time of the mu-heat bracket"},
    {"t2", ValueType::real, "verify: second time of the mu-heat bracket"},
    {"h", ValueType::real, "verify: x-grid spacing"},
    {"x_lo", ValueType::real, "verify: x-grid start"},
    {"x_hi", ValueType::real, "verify: x-grid end"},
    {"self_similarity_depth", ValueType::integer, "verify: quadrature depth"},
    {"gram_tol", ValueType::real, "verify: max |G - I|"},
    {"self_similarity_tol", ValueType::real, "verify: self-similarity residual"},
    {"spectrum_tol", ValueType::real, "verify: relative error vs Lebesgue eigenvalues"},
    {"eigen_residual_tol", ValueType::real, "verify: Nystrom eigen-residual"},
    {"format", ValueType::string, "csv|json"},
    {"out", ValueType::string, "output path (empty = stdout)"},
    {"eigenfunctions_out", ValueType::string, "spectrum: eigenfunction CSV path"},
    {"paths_out", ValueType::string, "simulate: raw path CSV path"},
};

inline const KeyInfo* find_key(std::string_view key) {
  for (const auto& k : kKeys)
    if (k.key == key) return &k;
  return nullptr;
}

struct RunConfig {
  MeasureSpec measure = MeasureSpec::lebesgue();
  std::int64_t resolution = 512;
  std::int64_t depth = 12;
  std::string anchor = "origin";
  std::string bc = "dirichlet";
  double theta = 0.0;
  std::int64_t n_max = 8;
  std::int64_t n_eigs = 10;
  std::int64_t lebesgue_grid = 0;
  std::int64_t grid_n = 257;
  std::int64_t n_iter = 0;
  std::int64_t gap_level = 8;
  std::vector<double> times{0.0, 0.01, 0.1, 0.5};
  std::string initial = "sin:1";
  std::vector<double> t_grid{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::int64_t n_paths = 100000;
  std::uint64_t seed = 1234;
  double x0 = 0.0;
  std::int64_t threads = 0;
  double t1 = 0.2;
  double t2 = 0.8;
  double h = 0.05;
  double x_lo = -1.0;
  double x_hi = 1.0;
  std::int64_t self_similarity_depth = 14;
  double gram_tol = 1e-5;
  double self_similarity_tol = 1e-8;
  double spectrum_tol = 1e-3;
  double eigen_residual_tol = 1e-10;
  std::string format = "csv";
  std::string out;
  std::string eigenfunctions_out;
  std::string paths_out;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  /// Depth for IFS measures, node count otherwise.
  std::size_t effective_resolution() const {
    return static_cast<std::size_t>(measure.as_ifs() ? depth : resolution);
  }
  BoundaryCondition boundary() const { return parse_boundary_condition(bc); }
  Anchor anchor_kind() const { return anchor == "barycenter" ? Anchor::barycenter : Anchor::origin; }
};

inline nlohmann::json to_json(const RunConfig& c) {
  return {
      {"measure", measure_to_json(c.measure)},
      {"resolution", c.resolution},
      {"depth", c.depth},
      {"anchor", c.anchor},
      {"bc", c.bc},
      {"theta", c.theta},
      {"n_max", c.n_max},
      {"n_eigs", c.n_eigs},
      {"lebesgue_grid", c.lebesgue_grid},
      {"grid_n", c.grid_n},
      {"n_iter", c.n_iter},
      {"gap_level", c.gap_level},
      {"times", c.times},
      {"initial", c.initial},
      {"t_grid", c.t_grid},
      {"n_paths", c.n_paths},
      {"seed", c.seed},
      {"x0", c.x0},
      {"threads", c.threads},
      {"t1", c.t1},
      {"t2", c.t2},
      {"h", c.h},
      {"x_lo", c.x_lo},
      {"x_hi", c.x_hi},
      {"self_similarity_depth", c.self_similarity_depth},
      {"gram_tol", c.gram_tol},
      {"self_similarity_tol", c.self_similarity_tol},
      {"spectrum_tol", c.spectrum_tol},
      {"eigen_residual_tol", c.eigen_residual_tol},
      {"format", c.format},
      {"out", c.out},
      {"eigenfunctions_out", c.eigenfunctions_out},
      {"paths_out", c.paths_out},
  };
}

namespace detail {

inline MeasureSpec measure_preset(std::string_view name) {
  if (name == "lebesgue") return measures::lebesgue();
  if (name == "dyadic_lebesgue") return measures::dyadic_lebesgue();
  if (name == "cantor3") return measures::cantor3();
  if (name == "cantor4") return measures::cantor4();
  if (name == "biased_dyadic") return measures::biased_dyadic();
  if (name == "biased_cantor3") return measures::biased_cantor3();
  throw ConfigError("unknown measure preset '" + std::string(name) + "'");
}

template <class T>
T get_checked(const nlohmann::json& v, std::string_view key, ValueType type) {
  const std::string k(key);
  switch (type) {
    case ValueType::integer:
      if (!v.is_number_integer()) throw ConfigError(k + ": expected an integer");
      break;
    case ValueType::unsigned_integer:
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError(k + ": expected a nonnegative integer");
      break;
    case ValueType::real:
      if (!v.is_number()) throw ConfigError(k + ": expected a number");
      break;
    case ValueType::string:
      if (!v.is_string()) throw ConfigError(k + ": expected a string");
      break;
    case ValueType::real_list:
      if (!v.is_array()) throw ConfigError(k + ": expected an array of numbers");
      for (const auto& e : v)
        if (!e.is_number()) throw ConfigError(k + ": expected an array of numbers");
      break;
    case ValueType::measure:
      break;
  }
  return v.get<T>();
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace detail

/// Range checks for every field.
inline void validate(const RunConfig& c) {
  using detail::require;
  require(c.resolution >= 1 && c.resolution <= (1 << 22), "resolution must be in [1, 4194304]");
  require(c.depth >= 1 && c.depth <= 40, "depth must be in [1, 40]");
  require(c.anchor == "origin" || c.anchor == "barycenter", "anchor must be origin or barycenter");
  require(c.bc == "dirichlet" || c.bc == "neumann" || c.bc == "mixed",
          "bc must be dirichlet, neumann or mixed");
  require(std::isfinite(c.theta), "theta must be finite");
  require(c.n_max >= 0 && c.n_max <= 100000, "n_max must be in [0, 100000]");
  require(c.n_eigs >= 1 && c.n_eigs <= 100000, "n_eigs must be in [1, 100000]");
  require(c.lebesgue_grid >= 0 && c.lebesgue_grid <= (1 << 22), "lebesgue_grid must be in [0, 4194304]");
  require(c.grid_n >= 1 && c.grid_n <= (1 << 24), "grid_n must be in [1, 16777216]");
  require(c.n_iter >= 0 && c.n_iter <= 1000, "n_iter must be in [0, 1000]");
  require(c.gap_level >= 0 && c.gap_level <= 24, "gap_level must be in [0, 24]");
  require(!c.times.empty(), "times must be nonempty");
  for (double t : c.times) require(std::isfinite(t) && t >= 0.0, "times must be finite and >= 0");
  require(c.t_grid.size() >= 1, "t_grid must be nonempty");
  for (std::size_t k = 0; k < c.t_grid.size(); ++k) {
    require(c.t_grid[k] >= 0.0 && c.t_grid[k] <= 1.0, "t_grid values must lie in [0,1]");
    require(k == 0 || c.t_grid[k] > c.t_grid[k - 1], "t_grid must be strictly increasing");
  }
  require(c.n_paths >= 2 && c.n_paths <= 100000000, "n_paths must be in [2, 1e8]");
  require(std::isfinite(c.x0), "x0 must be finite");
  require(c.threads >= 0 && c.threads <= 1024, "threads must be in [0, 1024]");
  require(c.t1 >= 0.0 && c.t1 < c.t2 && c.t2 <= 1.0, "need 0 <= t1 < t2 <= 1");
  require(c.h > 0.0 && c.h <= 1.0, "h must be in (0, 1]");
  require(std::isfinite(c.x_lo) && std::isfinite(c.x_hi) && c.x_hi - c.x_lo >= 2.0 * c.h,
          "x-grid needs x_hi - x_lo >= 2h");
  require(c.self_similarity_depth >= 1 && c.self_similarity_depth <= 40,
          "self_similarity_depth must be in [1, 40]");
  for (double tol : {c.gram_tol, c.self_similarity_tol, c.spectrum_tol, c.eigen_residual_tol})
    require(tol > 0.0 && std::isfinite(tol), "tolerances must be positive");
  require(c.format == "csv" || c.format == "json", "format must be csv or json");
}

/// Assigns keys of a JSON object onto `c`; unknown keys are rejected.
inline void apply_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  using detail::get_checked;
  for (const auto& [key, v] : j.items()) {
    const KeyInfo* info = find_key(key);
    if (!info) throw ConfigError("config: unknown key '" + key + "'");
    const auto t = info->type;
    try {
      if (key == "measure") {
        c.measure = v.is_string() ? detail::measure_preset(v.get<std::string>()) : measure_from_json(v);
      }
      else if (key == "resolution") c.resolution = get_checked<std::int64_t>(v, key, t);
      else if (key == "depth") c.depth = get_checked<std::int64_t>(v, key, t);
      else if (key == "anchor") c.anchor = get_checked<std::string>(v, key, t);
      else if (key == "bc") c.bc = get_checked<std::string>(v, key, t);
      else if (key == "theta") c.theta = get_checked<double>(v, key, t);
      else if (key == "n_max") c.n_max = get_checked<std::int64_t>(v, key, t);
      else if (key == "n_eigs") c.n_eigs = get_checked<std::int64_t>(v, key, t);
      else if (key == "lebesgue_grid") c.lebesgue_grid = get_checked<std::int64_t>(v, key, t);
      else if (key == "grid_n") c.grid_n = get_checked<std::int64_t>(v, key, t);
      else if (key == "n_iter") c.n_iter = get_checked<std::int64_t>(v, key, t);
      else if (key == "gap_level") c.gap_level = get_checked<std::int64_t>(v, key, t);
      else if (key == "times") c.times = get_checked<std::vector<double>>(v, key, t);
      else if (key == "initial") c.initial = get_checked<std::string>(v, key, t);
      else if (key == "t_grid") c.t_grid = get_checked<std::vector<double>>(v, key, t);
      else if (key == "n_paths") c.n_paths = get_checked<std::int64_t>(v, key, t);
      else if (key == "seed") c.seed = get_checked<std::uint64_t>(v, key, t);
      else if (key == "x0") c.x0 = get_checked<double>(v, key, t);
      else if (key == "threads") c.threads = get_checked<std::int64_t>(v, key, t);
      else if (key == "t1") c.t1 = get_checked<double>(v, key, t);
      else if (key == "t2") c.t2 = get_checked<double>(v, key, t);
      else if (key == "h") c.h = get_checked<double>(v, key, t);
      else if (key == "x_lo") c.x_lo = get_checked<double>(v, key, t);
      else if (key == "x_hi") c.x_hi = get_checked<double>(v, key, t);
      else if (key == "self_similarity_depth") c.self_similarity_depth = get_checked<std::int64_t>(v, key, t);
      else if (key == "gram_tol") c.gram_tol = get_checked<double>(v, key, t);
      else if (key == "self_similarity_tol") c.self_similarity_tol = get_checked<double>(v, key, t);
      else if (key == "spectrum_tol") c.spectrum_tol = get_checked<double>(v, key, t);
      else if (key == "eigen_residual_tol") c.eigen_residual_tol = get_checked<double>(v, key, t);
      else if (key == "format") c.format = get_checked<std::string>(v, key, t);
      else if (key == "out") c.out = get_checked<std::string>(v, key, t);
      else if (key == "eigenfunctions_out") c.eigenfunctions_out = get_checked<std::string>(v, key, t);
      else if (key == "paths_out") c.paths_out = get_checked<std::string>(v, key, t);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(key + ": " + e.what());
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ConfigError(key + ": " + e.what());
    } catch (const UnsupportedSpec& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }
}

/// Converts a command-line override into the JSON value for `key`.
inline nlohmann::json parse_override(std::string_view key, const std::string& text) {
  const KeyInfo* info = find_key(key);
  if (!info) throw ConfigError("unknown option --" + std::string(key));
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw ConfigError("");
      return v;
    } catch (...) {
      throw ConfigError("--" + std::string(key) + ": '" + s + "' is not a number");
    }
  };
  switch (info->type) {
    case ValueType::integer:
    case ValueType::unsigned_integer: {
      try {
        std::size_t used = 0;
        if (info->type == ValueType::unsigned_integer) {
          if (!text.empty() && text[0] == '-') throw ConfigError("");
          const unsigned long long v = std::stoull(text, &used, 10);
          if (used != text.size()) throw ConfigError("");
          return nlohmann::json(static_cast<std::uint64_t>(v));
        }
        const long long v = std::stoll(text, &used, 10);
        if (used != text.size()) throw ConfigError("");
        return nlohmann::json(static_cast<std::int64_t>(v));
      } catch (...) {
        throw ConfigError("--" + std::string(key) + ": '" + text + "' is not an integer");
      }
    }
    case ValueType::real:
      return number(text);
    case ValueType::string:
      return text;
    case ValueType::real_list: {
      nlohmann::json arr = nlohmann::json::array();
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) arr.push_back(number(item));
      return arr;
    }
    case ValueType::measure: {
      if (!text.empty() && text.front() == '{') {
        try {
          return nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
          throw ConfigError(std::string("--measure: ") + e.what());
        }
      }
      return text;
    }
  }
  return nullptr;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

inline RunConfig from_json(const nlohmann::json& j) {
  RunConfig c;
  apply_json(c, j);
  validate(c);
  return c;
}

}  // namespace kfspec::cli
