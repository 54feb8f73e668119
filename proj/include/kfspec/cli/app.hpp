#pragma once

// kfspec command-line front end. Subcommands write their artifact to
// `out` (or the --out file); diagnostics go to `err`.
//
// Exit codes: 0 success, 1 verification failure, 2 usage, config or input
// error.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kfspec/cli/run_config.hpp"
#include "kfspec/csv.hpp"
#include "kfspec/diffusion.hpp"
#include "kfspec/kf_spectral.hpp"
#include "kfspec/measure.hpp"
#include "kfspec/measure_json.hpp"
#include "kfspec/mu_calculus.hpp"

namespace kfspec::cli {

enum ExitCode : int { kSuccess = 0, kVerificationFailed = 1, kUsageError = 2 };

namespace detail {

inline int cdf_iterations(const RunConfig& c) {
  return c.n_iter > 0 ? static_cast<int>(c.n_iter) : cdf_iterations_for(c.measure);
}

inline DiscretizeOptions discretize_options(const RunConfig& c) {
  DiscretizeOptions o;
  o.anchor = c.anchor_kind();
  return o;
}

inline SpectrumOptions spectrum_options(const RunConfig& c) {
  SpectrumOptions o;
  o.resolution = c.effective_resolution();
  o.n_eigs = static_cast<std::size_t>(c.n_eigs);
  o.lebesgue_grid = static_cast<std::size_t>(c.lebesgue_grid);
  o.cdf_iterations = static_cast<int>(c.n_iter);
  o.discretize = discretize_options(c);
  return o;
}

/// Runs `body` against the --out file when one is given, else `out`.
inline void with_output(const std::string& path, std::ostream& out,
                        const std::function<void(std::ostream&)>& body) {
  if (path.empty()) {
    body(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot open output file '" + path + "'");
  body(file);
  if (!file) throw Error("write failed for '" + path + "'");
}

/// Mode label: Neumann counts from the constant mode 0, the others from 1.
inline int mode_label(BoundaryCondition bc, std::size_t m) {
  return static_cast<int>(m) + (bc == BoundaryCondition::neumann ? 0 : 1);
}

inline std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (...) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ConfigError("initial: bad number '" + item + "'");
    v.push_back(x);
  }
  return v;
}

/// Initial datum at the nodes of `sd` from its text description.
inline std::vector<double> initial_datum(const std::string& spec, const SpectralDecomposition& sd) {
  const auto x = sd.measure->nodes();
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  std::vector<double> v(x.size());
  auto fill = [&](auto&& f) {
    for (std::size_t j = 0; j < x.size(); ++j) v[j] = f(x[j]);
  };
  if (kind == "const" && arg.empty()) {
    fill([](double) { return 1.0; });
  } else if (kind == "sin" || kind == "cos") {
    const auto k = parse_number_list(arg);
    if (k.size() != 1) throw ConfigError("initial: expected " + kind + ":k");
    const double w = k[0] * std::numbers::pi;
    if (kind == "sin")
      fill([w](double t) { return std::sin(w * t); });
    else
      fill([w](double t) { return std::cos(w * t); });
  } else if (kind == "poly") {
    const auto c = parse_number_list(arg);
    if (c.empty()) throw ConfigError("initial: poly needs coefficients");
    fill([&c](double t) {
      double s = 0.0;
      for (std::size_t i = c.size(); i-- > 0;) s = s * t + c[i];
      return s;
    });
  } else if (kind == "mode") {
    const auto m = parse_number_list(arg);
    if (m.size() != 1 || m[0] < 0 || m[0] != std::floor(m[0]))
      throw ConfigError("initial: expected mode:m with integer m >= 0");
    const auto idx = static_cast<std::size_t>(m[0]);
    if (idx >= sd.size()) throw ConfigError("initial: mode index beyond computed modes");
    v = sd.eigenfunctions[idx];
  } else {
    throw ConfigError("initial: unknown datum '" + spec + "'");
  }
  return v;
}

inline nlohmann::json json_number(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline int cmd_measure_cdf(const RunConfig& c, std::ostream& out) {
  const int n_iter = detail::cdf_iterations(c);
  const auto table = cdf(c.measure, n_iter, static_cast<std::size_t>(c.grid_n),
                         static_cast<std::size_t>(c.gap_level));
  detail::with_output(c.out, out, [&](std::ostream& os) {
    if (c.format == "json") {
      nlohmann::json j{{"measure", measure_to_json(c.measure)},
                       {"n_iter", n_iter},
                       {"error_bound", table.error_bound()},
                       {"x", table.breakpoints()},
                       {"g", table.values()}};
      os << j.dump() << '\n';
      return;
    }
    CsvWriter w(os, {"x", "g"});
    const auto x = table.breakpoints();
    const auto g = table.values();
    for (std::size_t i = 0; i < x.size(); ++i) w.row(x[i], g[i]);
  });
  return kSuccess;
}

inline int cmd_spectrum(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto bc = c.boundary();
  const auto sd = spectrum(bc, c.measure, detail::spectrum_options(c));
  for (const auto& w : sd.warnings) err << "warning: " << w << '\n';
  const auto hash = measure_hash(c.measure);
  detail::with_output(c.out, out, [&](std::ostream& os) {
    if (c.format == "json") {
      nlohmann::json modes = nlohmann::json::array();
      for (std::size_t m = 0; m < sd.size(); ++m)
        modes.push_back({{"m", detail::mode_label(bc, m)},
                         {"c", sd.c[m]},
                         {"nu", detail::json_number(sd.nu[m])},
                         {"residual", sd.residuals[m]}});
      nlohmann::json j{{"bc", to_string(bc)},
                       {"measure", measure_to_json(c.measure)},
                       {"measure_hash", hash},
                       {"resolution", c.effective_resolution()},
                       {"nodes", sd.measure->size()},
                       {"modes", modes},
                       {"warnings", sd.warnings}};
      if (c.measure.as_ifs()) j["depth"] = c.depth;
      os << j.dump() << '\n';
      return;
    }
    csv_comment(os, "bc", to_string(bc));
    csv_comment(os, "measure", measure_to_json(c.measure).dump());
    csv_comment(os, "measure_hash", std::to_string(hash));
    csv_comment(os, "resolution", std::to_string(c.effective_resolution()));
    CsvWriter w(os, {"m", "c", "nu"});
    for (std::size_t m = 0; m < sd.size(); ++m) w.row(detail::mode_label(bc, m), sd.c[m], sd.nu[m]);
  });
  if (!c.eigenfunctions_out.empty()) {
    detail::with_output(c.eigenfunctions_out, out, [&](std::ostream& os) {
      std::vector<std::string> header;
      for (std::size_t j = 0; j < sd.measure->size(); ++j) header.push_back("x_" + std::to_string(j));
      CsvWriter w(os, std::span<const std::string>(header));
      for (const auto& k : sd.eigenfunctions) w.row(std::span<const double>(k));
    });
  }
  return kSuccess;
}

inline int cmd_eigensystem(const RunConfig& c, std::ostream& out) {
  auto dm = std::make_shared<const DiscreteMeasure>(
      discretize(c.measure, c.effective_resolution(), detail::discretize_options(c)));
  const CdfTable g(c.measure, detail::cdf_iterations(c), {});
  const auto es = first_order_eigensystem(dm, g, c.theta, static_cast<int>(c.n_max));
  const double dev = es.gram_deviation(static_cast<int>(c.n_max));
  detail::with_output(c.out, out, [&](std::ostream& os) {
    if (c.format == "json") {
      std::vector<int> n;
      for (std::size_t k = 0; k < es.size(); ++k) n.push_back(es.index(k));
      nlohmann::json j{{"theta", c.theta},
                       {"mass", es.mass()},
                       {"n", n},
                       {"lambda", std::vector<double>(es.eigenvalues().begin(), es.eigenvalues().end())},
                       {"gram_deviation", dev}};
      os << j.dump() << '\n';
      return;
    }
    csv_comment(os, "theta", format_number(c.theta));
    csv_comment(os, "gram_deviation", format_number(dev));
    const std::size_t nodes = es.measure().size();
    std::vector<std::string> header{"n", "lambda"};
    for (std::size_t j = 0; j < nodes; ++j) header.push_back("re_phi_" + std::to_string(j));
    for (std::size_t j = 0; j < nodes; ++j) header.push_back("im_phi_" + std::to_string(j));
    CsvWriter w(os, std::span<const std::string>(header));
    std::vector<double> row(2 + 2 * nodes);
    for (std::size_t k = 0; k < es.size(); ++k) {
      const auto phi = es.phi(es.index(k));
      row[0] = es.index(k);
      row[1] = es.eigenvalues()[k];
      for (std::size_t j = 0; j < nodes; ++j) {
        row[2 + j] = phi[j].real();
        row[2 + nodes + j] = phi[j].imag();
      }
      w.row(std::span<const double>(row));
    }
  });
  return kSuccess;
}

inline int cmd_heat(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto sd = spectrum(c.boundary(), c.measure, detail::spectrum_options(c));
  for (const auto& w : sd.warnings) err << "warning: " << w << '\n';
  const auto phi0 = detail::initial_datum(c.initial, sd);
  const auto heat = heat_solve_spectral(sd, phi0, c.times);
  detail::with_output(c.out, out, [&](std::ostream& os) {
    if (c.format == "json") {
      nlohmann::json j{{"bc", to_string(heat.bc)},
                       {"modes_used", heat.modes_used},
                       {"times", heat.times},
                       {"x", heat.nodes},
                       {"u", heat.u}};
      os << j.dump() << '\n';
      return;
    }
    CsvWriter w(os, {"t", "x", "u"});
    for (std::size_t k = 0; k < heat.times.size(); ++k)
      for (std::size_t j = 0; j < heat.nodes.size(); ++j) w.row(heat.times[k], heat.nodes[j], heat.u[k][j]);
  });
  return kSuccess;
}

inline int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const CdfTable g(c.measure, detail::cdf_iterations(c), c.t_grid);
  SimulationOptions sim;
  sim.threads = static_cast<unsigned>(c.threads);
  const auto e = simulate_paths(g, c.x0, c.t_grid, static_cast<std::size_t>(c.n_paths), c.seed, sim);
  std::vector<double> means, variances;
  std::vector<double> col(e.n_paths);
  for (std::size_t k = 0; k < e.steps(); ++k) {
    for (std::size_t p = 0; p < e.n_paths; ++p) col[p] = e(p, k);
    const auto m = sample_mean(col);
    means.push_back(m.mean);
    variances.push_back(m.std_error * m.std_error * static_cast<double>(e.n_paths));
  }
  detail::with_output(c.out, out, [&](std::ostream& os) {
    if (c.format == "json") {
      nlohmann::json j{{"seed", c.seed},
                       {"n_paths", e.n_paths},
                       {"t_grid", e.t_grid},
                       {"means", means},
                       {"variances", variances}};
      os << j.dump() << '\n';
      return;
    }
    CsvWriter w(os, {"t", "mean", "variance"});
    for (std::size_t k = 0; k < e.steps(); ++k) w.row(e.t_grid[k], means[k], variances[k]);
  });
  if (!c.paths_out.empty()) {
    detail::with_output(c.paths_out, out, [&](std::ostream& os) {
      std::vector<std::string> header;
      for (std::size_t k = 0; k < e.steps(); ++k) header.push_back("t_" + std::to_string(k));
      CsvWriter w(os, std::span<const std::string>(header));
      for (std::size_t p = 0; p < e.n_paths; ++p) w.row(e.path(p));
    });
  }
  return kSuccess;
}

struct VerifyCheck {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
};

/// Analytic Lebesgue eigenvalue for mode label m.
inline double lebesgue_eigenvalue(BoundaryCondition bc, int m) {
  const double pi = std::numbers::pi;
  if (bc == BoundaryCondition::mixed) return -std::pow((2.0 * m - 1.0) * pi / 2.0, 2);
  return -static_cast<double>(m) * m * pi * pi;
}

inline std::vector<VerifyCheck> run_verify(const RunConfig& c) {
  std::vector<VerifyCheck> checks;
  auto add = [&](std::string name, double value, double limit) {
    checks.push_back({std::move(name), value, limit, value <= limit});
  };
  const auto bc = c.boundary();

  // Spectrum: residuals, ordering, Lebesgue oracle.
  const auto sd = spectrum(bc, c.measure, detail::spectrum_options(c));
  double worst_residual = 0.0;
  for (double r : sd.residuals) worst_residual = std::max(worst_residual, r);
  add("spectrum.eigen_residual", worst_residual, c.eigen_residual_tol);
  double order_violations = 0.0;
  for (std::size_t m = 0; m < sd.size(); ++m) {
    if (sd.c[m] > 0.0 || (bc != BoundaryCondition::neumann && sd.c[m] >= 0.0)) order_violations += 1.0;
    if (m > 0 && !(sd.c[m] < sd.c[m - 1])) order_violations += 1.0;
  }
  add("spectrum.sign_and_order_violations", order_violations, 0.0);
  if (c.measure.kind() == MeasureKind::lebesgue) {
    double rel = 0.0;
    for (std::size_t m = 0; m < std::min<std::size_t>(sd.size(), 5); ++m) {
      const int label = detail::mode_label(bc, m);
      if (label == 0) {
        rel = std::max(rel, std::abs(sd.c[m]));
        continue;
      }
      const double exact = lebesgue_eigenvalue(bc, label);
      rel = std::max(rel, std::abs(sd.c[m] - exact) / std::abs(exact));
    }
    add("spectrum.lebesgue_relative_error", rel, c.spectrum_tol);
  }

  // First-order eigensystem Gram matrix.
  const CdfTable g(c.measure, detail::cdf_iterations(c), c.t_grid);
  {
    auto dm = std::make_shared<const DiscreteMeasure>(
        discretize(c.measure, c.effective_resolution(), detail::discretize_options(c)));
    const auto es = first_order_eigensystem(dm, g, c.theta, static_cast<int>(c.n_max));
    add("first_order.gram_deviation", es.gram_deviation(static_cast<int>(c.n_max)), c.gram_tol);
  }

  // Self-similarity of the atom quadrature (barycentric atoms).
  if (c.measure.as_ifs()) {
    DiscretizeOptions o;
    o.anchor = Anchor::barycenter;
    double worst = 0.0;
    for (int d = 0; d <= 4; ++d)
      worst = std::max(worst, self_similarity_residual(c.measure,
                                                       static_cast<std::size_t>(c.self_similarity_depth),
                                                       [d](double x) { return std::pow(x, d); }, o));
    add("self_similarity.max_residual", worst, c.self_similarity_tol);
  }

  McConfig mc;
  mc.n_paths = static_cast<std::size_t>(c.n_paths);
  mc.seed = c.seed;
  mc.sim.threads = static_cast<unsigned>(c.threads);

  // Time-measure heat equation, phi = x^2.
  {
    const auto xs = uniform_grid(c.x_lo, c.x_hi, c.h);
    const auto r = mu_heat_residual(g, xs, [](double x) { return x * x; }, c.t1, c.t2, mc);
    add("mu_heat.max_residual", r.max_residual, r.tolerance);
  }

  // Covariance law and increment variances on t_grid (started at 0).
  {
    std::vector<double> grid = c.t_grid;
    if (grid.front() != 0.0) grid.insert(grid.begin(), 0.0);
    const CdfTable gt(c.measure, detail::cdf_iterations(c), grid);
    const auto e = simulate_paths(gt, 0.0, grid, mc.n_paths, c.seed, mc.sim);
    std::vector<std::size_t> idx;
    for (std::size_t k = 1; k < grid.size(); ++k) idx.push_back(k);
    if (!idx.empty()) {
      const auto cov = covariance_check(e, gt, idx);
      add("covariance.max_z", cov.max_z, cov.z_threshold);
    }
    const auto inc = increment_check(e);
    add("increments.max_relative_variance_error", inc.max_relative_deviation,
        4.0 / std::sqrt(static_cast<double>(mc.n_paths)));
    add("increments.null_step_motion", inc.frozen_on_null_steps ? 0.0 : 1.0, 0.0);
  }
  return checks;
}

inline int cmd_verify(const RunConfig& c, std::ostream& out) {
  const auto checks = run_verify(c);
  bool all = true;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& ch : checks) {
    all = all && ch.pass;
    arr.push_back({{"name", ch.name},
                   {"value", detail::json_number(ch.value)},
                   {"limit", ch.limit},
                   {"pass", ch.pass}});
  }
  nlohmann::json report{{"measure", measure_to_json(c.measure)}, {"checks", arr}, {"pass", all}};
  detail::with_output(c.out, out, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  return all ? kSuccess : kVerificationFailed;
}

// ---------------------------------------------------------------------------
// Argument handling
// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Krein-Feller spectra, heat semigroups and time-changed Brownian motion", "kfspec"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"measure-cdf", "cumulative distribution g as x,g CSV"},
      {"spectrum", "Krein-Feller eigenvalues as m,c,nu CSV"},
      {"eigensystem", "first-order eigenvalues and eigenfunctions (wide CSV)"},
      {"heat", "spectral heat solution as t,x,u CSV"},
      {"simulate", "path ensemble summary"},
      {"verify", "cross-validation report (exit 1 on failure)"},
  };

  std::string config_path;
  bool echo = false;
  std::map<std::string, std::string> overrides;
  std::vector<CLI::App*> subs;
  for (const auto& cmd : commands) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->set_help_flag("--help", "print this help and exit");
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_flag("--echo-config", echo, "print the effective config as JSON and exit");
    for (const auto& k : kKeys) {
      std::string key(k.key);
      std::string names = "--" + key;
      if (key.find('_') != std::string::npos) {
        std::string dashed = key;
        std::replace(dashed.begin(), dashed.end(), '_', '-');
        names += ",--" + dashed;
      }
      sub->add_option_function<std::string>(
          names, [&overrides, key](const std::string& v) { overrides[key] = v; },
          std::string(k.help));
    }
    subs.push_back(sub);
  }

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  std::string which;
  for (auto* s : subs)
    if (s->parsed()) which = s->get_name();

  try {
    RunConfig cfg;
    if (!config_path.empty()) apply_json(cfg, read_json_file(config_path));
    for (const auto& [key, text] : overrides) {
      nlohmann::json j;
      j[key] = parse_override(key, text);
      apply_json(cfg, j);
    }
    validate(cfg);

    if (echo) {
      out << to_json(cfg).dump(2) << '\n';
      return kSuccess;
    }
    if (which == "measure-cdf") return cmd_measure_cdf(cfg, out);
    if (which == "spectrum") return cmd_spectrum(cfg, out, err);
    if (which == "eigensystem") return cmd_eigensystem(cfg, out);
    if (which == "heat") return cmd_heat(cfg, out, err);
    if (which == "simulate") return cmd_simulate(cfg, out);
    if (which == "verify") return cmd_verify(cfg, out);
    err << "error: no subcommand\n";
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args), out, err);
}

}  // namespace kfspec::cli
