#pragma once

// Heat semigroups by eigen-expansion and Monte Carlo for the generalized
// Brownian motion W_t = W^0_{g(t)}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include "kfspec/errors.hpp"
#include "kfspec/kf_spectral.hpp"
#include "kfspec/measure.hpp"
#include "kfspec/rng.hpp"

namespace kfspec {

// ---------------------------------------------------------------------------
// Spectral heat solver: du/dt = K_F u
// ---------------------------------------------------------------------------

struct HeatSolution {
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  std::vector<double> times;
  std::vector<double> nodes;
  std::vector<double> weights;
  /// u[k][j] = u(times[k], nodes[j]).
  std::vector<std::vector<double>> u;
  std::size_t modes_used = 0;

  double l2_norm(std::size_t k) const {
    double s = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) s += weights[j] * u[k][j] * u[k][j];
    return std::sqrt(s);
  }
};

/// L^2(mu) coefficients of phi0 against the computed eigenfunctions.
inline std::vector<double> project(const SpectralDecomposition& sd, std::span<const double> phi0) {
  const auto w = sd.measure->weights();
  if (phi0.size() != w.size())
    throw DimensionMismatch("project: initial datum has " + std::to_string(phi0.size()) +
                            " values, measure has " + std::to_string(w.size()) + " nodes");
  std::vector<double> coef(sd.size(), 0.0);
  for (std::size_t m = 0; m < sd.size(); ++m) {
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * sd.eigenfunctions[m][j] * phi0[j];
    coef[m] = s;
  }
  return coef;
}

inline HeatSolution heat_solve_spectral(const SpectralDecomposition& sd,
                                        std::span<const double> phi0,
                                        std::span<const double> times) {
  for (double t : times)
    if (!(t >= 0.0)) throw InvalidArgument("heat_solve_spectral: times must be >= 0");
  const auto coef = project(sd, phi0);
  HeatSolution h;
  h.bc = sd.bc;
  h.times.assign(times.begin(), times.end());
  const auto x = sd.measure->nodes();
  const auto w = sd.measure->weights();
  h.nodes.assign(x.begin(), x.end());
  h.weights.assign(w.begin(), w.end());
  h.modes_used = sd.size();
  for (double t : times) {
    std::vector<double> row(x.size(), 0.0);
    for (std::size_t m = 0; m < sd.size(); ++m) {
      const double decay = std::exp(t * sd.c[m]);
      if (decay < 1e-300) continue;
      const double a = decay * coef[m];
      for (std::size_t j = 0; j < x.size(); ++j) row[j] += a * sd.eigenfunctions[m][j];
    }
    h.u.push_back(std::move(row));
  }
  return h;
}

// ---------------------------------------------------------------------------
// Path ensembles
// ---------------------------------------------------------------------------

struct PathEnsemble {
  std::vector<double> t_grid;
  /// g(t_{k+1}) - g(t_k).
  std::vector<double> dg;
  /// Common start point, NaN when paths start from individual states.
  double x0 = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  /// Row-major n_paths x t_grid.size().
  std::vector<double> values;

  std::size_t steps() const { return t_grid.size(); }
  double operator()(std::size_t path, std::size_t k) const { return values[path * steps() + k]; }
  std::span<const double> path(std::size_t p) const {
    return {values.data() + p * steps(), steps()};
  }
};

struct SimulationOptions {
  /// 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
};

namespace detail {

inline std::vector<double> g_increments(const CdfTable& g, std::span<const double> t_grid) {
  if (t_grid.empty()) throw InvalidArgument("simulate_paths: empty time grid");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!(t_grid[k] >= 0.0 && t_grid[k] <= 1.0))
      throw InvalidArgument("simulate_paths: time grid must lie in [0,1]");
    if (k > 0 && !(t_grid[k] > t_grid[k - 1]))
      throw InvalidArgument("simulate_paths: time grid must be strictly increasing");
  }
  std::vector<double> dg;
  for (std::size_t k = 0; k + 1 < t_grid.size(); ++k) {
    const double d = g(t_grid[k + 1]) - g(t_grid[k]);
    if (d < 0.0) throw InternalConsistency("simulate_paths: negative g increment");
    dg.push_back(d);
  }
  return dg;
}

template <class Start>
PathEnsemble simulate(const CdfTable& g, Start&& start, std::span<const double> t_grid,
                      std::size_t n_paths, std::uint64_t seed, const SimulationOptions& opts) {
  PathEnsemble e;
  e.t_grid.assign(t_grid.begin(), t_grid.end());
  e.dg = g_increments(g, t_grid);
  e.seed = seed;
  e.n_paths = n_paths;
  const std::size_t K = t_grid.size();
  e.values.assign(n_paths * K, 0.0);

  std::vector<double> sd(e.dg.size());
  for (std::size_t k = 0; k < sd.size(); ++k) sd[k] = std::sqrt(e.dg[k]);

  auto run_block = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      NormalStream z(seed, p);
      double* row = e.values.data() + p * K;
      row[0] = start(p);
      // A draw is consumed on every step, including dg = 0, so the stream
      // position depends on the step index only.
      for (std::size_t k = 0; k + 1 < K; ++k) row[k + 1] = row[k] + sd[k] * z();
    }
  };

  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n_paths, 1)));
  if (threads <= 1) {
    run_block(0, n_paths);
    return e;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n_paths + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = std::min(n_paths, t * chunk), hi = std::min(n_paths, lo + chunk);
    if (lo < hi) pool.emplace_back(run_block, lo, hi);
  }
  for (auto& th : pool) th.join();
  return e;
}

}  // namespace detail

/// W[p][0] = x0, W[p][k+1] = W[p][k] + sqrt(dg_k) Z with Z from the stream
/// of (seed, p). Output does not depend on the thread count.
inline PathEnsemble simulate_paths(const CdfTable& g, double x0, std::span<const double> t_grid,
                                   std::size_t n_paths, std::uint64_t seed,
                                   const SimulationOptions& opts = {}) {
  auto e = detail::simulate(g, [x0](std::size_t) { return x0; }, t_grid, n_paths, seed, opts);
  e.x0 = x0;
  return e;
}

/// Same, with path p starting from starts[p] at t_grid[0].
inline PathEnsemble simulate_paths_from(const CdfTable& g, std::span<const double> starts,
                                        std::span<const double> t_grid, std::uint64_t seed,
                                        const SimulationOptions& opts = {}) {
  auto e = detail::simulate(g, [starts](std::size_t p) { return starts[p]; }, t_grid,
                            starts.size(), seed, opts);
  e.x0 = std::numeric_limits<double>::quiet_NaN();
  return e;
}

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Mean and standard error of a sample, accumulated in index order.
inline MeanEstimate sample_mean(std::span<const double> v) {
  MeanEstimate r;
  const std::size_t n = v.size();
  if (n == 0) return r;
  double s = 0.0;
  for (double x : v) s += x;
  r.mean = s / static_cast<double>(n);
  if (n < 2) return r;
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return r;
}

/// Estimate of (S_t phi)(x0) = E_x0 phi(W_{t_k}).
template <class Phi>
MeanEstimate semigroup_mc(const PathEnsemble& e, Phi&& phi, std::size_t k) {
  if (k >= e.steps()) throw InvalidArgument("semigroup_mc: time index out of range");
  std::vector<double> v(e.n_paths);
  for (std::size_t p = 0; p < e.n_paths; ++p) v[p] = phi(e(p, k));
  return sample_mean(v);
}

/// Sample variance of each increment against dg_k.
struct IncrementReport {
  std::vector<double> sample_variance;
  double max_relative_deviation = 0.0;  ///< over steps with dg > 0
  bool frozen_on_null_steps = true;     ///< every path constant where dg = 0
};

inline IncrementReport increment_check(const PathEnsemble& e) {
  IncrementReport r;
  std::vector<double> d(e.n_paths);
  for (std::size_t k = 0; k + 1 < e.steps(); ++k) {
    for (std::size_t p = 0; p < e.n_paths; ++p) d[p] = e(p, k + 1) - e(p, k);
    double ss = 0.0;
    for (double x : d) ss += x * x;
    const double var = ss / static_cast<double>(e.n_paths);
    r.sample_variance.push_back(var);
    if (e.dg[k] > 0.0) {
      r.max_relative_deviation = std::max(r.max_relative_deviation, std::abs(var / e.dg[k] - 1.0));
    } else {
      for (double x : d) r.frozen_on_null_steps = r.frozen_on_null_steps && x == 0.0;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Monte Carlo checks of the time-measure heat equation
// ---------------------------------------------------------------------------

struct McConfig {
  std::size_t n_paths = 200000;
  std::uint64_t seed = 1234;
  SimulationOptions sim{};
};

struct MuHeatResidualReport {
  std::vector<double> x;  ///< interior grid points
  std::vector<double> lhs;
  std::vector<double> rhs;
  double max_residual = 0.0;
  double noise_floor = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// u(t,x) = E phi(x + W_t) with the same paths at every x. Compares the
/// mu-divided difference in time with half the second x-difference at the
/// midpoint value (u(t1,x)+u(t2,x))/2.
template <class Phi>
MuHeatResidualReport mu_heat_residual(const CdfTable& g, std::span<const double> x_grid, Phi&& phi,
                                      double t1, double t2, const McConfig& mc = {}) {
  if (x_grid.size() < 3) throw InvalidArgument("mu_heat_residual: need at least 3 grid points");
  const double h = x_grid[1] - x_grid[0];
  for (std::size_t i = 1; i < x_grid.size(); ++i)
    if (!(std::abs(x_grid[i] - x_grid[i - 1] - h) <= 1e-9 * std::max(1.0, std::abs(h))) || !(h > 0.0))
      throw InvalidArgument("mu_heat_residual: x grid must be uniform and increasing");
  if (!(t1 < t2)) throw InvalidArgument("mu_heat_residual: need t1 < t2");
  const double dg = g(t2) - g(t1);
  if (!(dg > 0.0)) throw NullBracket(t1, t2);

  const std::vector<double> t_grid =
      t1 > 0.0 ? std::vector<double>{0.0, t1, t2} : std::vector<double>{t1, t2};
  const std::size_t k1 = t_grid.size() - 2, k2 = t_grid.size() - 1;
  const auto e = simulate_paths(g, 0.0, t_grid, mc.n_paths, mc.seed, mc.sim);

  const std::size_t nx = x_grid.size();
  std::vector<double> u1(nx), u2(nx);
  double max_se = 0.0;
  std::vector<double> v1(e.n_paths), v2(e.n_paths);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t p = 0; p < e.n_paths; ++p) {
      v1[p] = phi(x_grid[i] + e(p, k1));
      v2[p] = phi(x_grid[i] + e(p, k2));
    }
    const auto a = sample_mean(v1), b = sample_mean(v2);
    u1[i] = a.mean;
    u2[i] = b.mean;
    max_se = std::max({max_se, a.std_error, b.std_error});
  }

  MuHeatResidualReport r;
  r.noise_floor = 3.0 * max_se / dg;
  r.tolerance = std::max(0.05, 5.0 * r.noise_floor);
  for (std::size_t i = 1; i + 1 < nx; ++i) {
    auto mid = [&](std::size_t j) { return 0.5 * (u1[j] + u2[j]); };
    const double lhs = (u2[i] - u1[i]) / dg;
    const double rhs = 0.5 * (mid(i + 1) - 2.0 * mid(i) + mid(i - 1)) / (h * h);
    r.x.push_back(x_grid[i]);
    r.lhs.push_back(lhs);
    r.rhs.push_back(rhs);
    r.max_residual = std::max(r.max_residual, std::abs(lhs - rhs));
  }
  r.pass = r.max_residual <= r.tolerance;
  return r;
}

/// Uniform grid lo, lo+h, ..., hi.
inline std::vector<double> uniform_grid(double lo, double hi, double h) {
  if (!(h > 0.0) || !(hi >= lo)) throw InvalidArgument("uniform_grid: bad range");
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / h));
  std::vector<double> x(n + 1);
  for (std::size_t i = 0; i <= n; ++i) x[i] = lo + static_cast<double>(i) * h;
  return x;
}

struct CovarianceEntry {
  std::size_t a = 0, b = 0;
  double sample = 0.0;
  double expected = 0.0;
  double std_error = 0.0;
};

struct CovarianceReport {
  std::vector<CovarianceEntry> entries;
  double max_deviation = 0.0;
  /// Largest deviation in units of its standard error.
  double max_z = 0.0;
  /// Threshold in standard errors applied by `pass`.
  double z_threshold = 3.0;
  bool pass = false;
};

/// Sample Cov(W_{t_a}, W_{t_b}) against g(min(t_a, t_b)) over all pairs of
/// the given time indices. Requires paths started at 0 from t = 0.
inline CovarianceReport covariance_check(const PathEnsemble& e, const CdfTable& g,
                                         std::span<const std::size_t> indices,
                                         double z_threshold = 3.0) {
  if (!(e.x0 == 0.0)) throw InvalidArgument("covariance_check: paths must start at x0 = 0");
  if (e.t_grid.front() != 0.0) throw InvalidArgument("covariance_check: time grid must start at 0");
  if (e.n_paths < 2) throw InvalidArgument("covariance_check: need at least 2 paths");
  for (auto k : indices)
    if (k >= e.steps()) throw InvalidArgument("covariance_check: time index out of range");

  const std::size_t n = e.n_paths;
  std::vector<double> mean(e.steps(), 0.0);
  for (auto k : indices) {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p) s += e(p, k);
    mean[k] = s / static_cast<double>(n);
  }
  CovarianceReport r;
  r.z_threshold = z_threshold;
  std::vector<double> prod(n);
  for (auto a : indices) {
    for (auto b : indices) {
      for (std::size_t p = 0; p < n; ++p) prod[p] = (e(p, a) - mean[a]) * (e(p, b) - mean[b]);
      const auto est = sample_mean(prod);
      CovarianceEntry c;
      c.a = a;
      c.b = b;
      c.sample = est.mean * static_cast<double>(n) / static_cast<double>(n - 1);
      c.expected = g(std::min(e.t_grid[a], e.t_grid[b]));
      c.std_error = est.std_error;
      const double dev = std::abs(c.sample - c.expected);
      r.max_deviation = std::max(r.max_deviation, dev);
      if (c.std_error > 0.0)
        r.max_z = std::max(r.max_z, dev / c.std_error);
      else if (dev > 0.0)
        r.max_z = std::numeric_limits<double>::infinity();
      r.entries.push_back(c);
    }
  }
  r.pass = r.max_z <= z_threshold;
  return r;
}

}  // namespace kfspec
