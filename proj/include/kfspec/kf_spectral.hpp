#pragma once

// Spectral resolution of K_F = (d/dmu)(d/dx) on [0,1] through Nystrom
// discretization of its Green's kernels.
//
// Dirichlet and mixed kernels are the Green's functions of d^2/dx^2. Their
// restriction to a node set y_1 < ... < y_n is exactly the inverse of the
// piecewise-linear stiffness matrix L on those nodes, so the symmetrized
// Nystrom matrix B = W^{1/2} K W^{1/2} satisfies B^{-1} = W^{-1/2} L W^{-1/2},
// a tridiagonal matrix. Eigenpairs are located on that tridiagonal matrix and
// then refined by Rayleigh-Ritz against B itself until the residual
// ||B v - nu v|| meets tolerance. The Neumann kernel H(x,t) is the Dirichlet
// kernel in the variable g, so it reduces to the same solver on the distinct
// values of g over the Lebesgue grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "kfspec/errors.hpp"
#include "kfspec/measure.hpp"
#include "kfspec/tridiagonal.hpp"

namespace kfspec {

enum class BoundaryCondition { dirichlet, neumann, mixed };

inline std::string_view to_string(BoundaryCondition bc) {
  switch (bc) {
    case BoundaryCondition::dirichlet: return "dirichlet";
    case BoundaryCondition::neumann: return "neumann";
    case BoundaryCondition::mixed: return "mixed";
  }
  return "?";
}

inline BoundaryCondition parse_boundary_condition(std::string_view s) {
  if (s == "dirichlet") return BoundaryCondition::dirichlet;
  if (s == "neumann") return BoundaryCondition::neumann;
  if (s == "mixed") return BoundaryCondition::mixed;
  throw InvalidArgument("unknown boundary condition '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Kernels. Each is written in terms of (lo, hi) = (min, max) of its
// arguments so that k(x,s) == k(s,x) bit for bit.
// ---------------------------------------------------------------------------

/// (x-1)s for s <= x, x(s-1) for s >= x.
inline double dirichlet_kernel(double x, double s) {
  const double lo = std::min(x, s), hi = std::max(x, s);
  return (hi - 1.0) * lo;
}

/// -min(x,s): f(0) = f'(1) = 0.
inline double mixed_kernel(double x, double s) { return -std::min(x, s); }

/// H(x,t) = (g(x)-1) g(t) for t <= x; requires g(1) = 1.
inline double neumann_kernel(const CdfTable& g, double x, double t) {
  if (std::abs(g.total_mass() - 1.0) > 1e-12)
    throw NormalizationError("neumann kernel: total mass must be 1");
  const double lo = std::min(x, t), hi = std::max(x, t);
  return (g(hi) - 1.0) * g(lo);
}

inline double greens_kernel(BoundaryCondition bc, const CdfTable* g, double x, double s) {
  if (!(x >= 0.0 && x <= 1.0 && s >= 0.0 && s <= 1.0))
    throw InvalidArgument("greens_kernel: arguments must lie in [0,1]");
  switch (bc) {
    case BoundaryCondition::dirichlet: return dirichlet_kernel(x, s);
    case BoundaryCondition::mixed: return mixed_kernel(x, s);
    case BoundaryCondition::neumann:
      if (!g) throw InvalidArgument("greens_kernel: neumann kernel needs a CDF table");
      return neumann_kernel(*g, x, s);
  }
  return 0.0;
}

inline double greens_kernel(BoundaryCondition bc, const CdfTable& g, double x, double s) {
  return greens_kernel(bc, &g, x, s);
}

// ---------------------------------------------------------------------------
// Spectral decomposition
// ---------------------------------------------------------------------------

struct SpectrumOptions {
  /// Cylinder depth for IFS measures, node count otherwise.
  std::size_t resolution = 512;
  std::size_t n_eigs = 10;
  /// Neumann only: size of the Lebesgue midpoint grid. 0 selects
  /// `resolution` for Lebesgue/density measures and 2048 for IFS measures.
  std::size_t lebesgue_grid = 0;
  /// CDF iterations for the Neumann kernel; 0 selects an error bound of 1e-15.
  int cdf_iterations = 0;
  DiscretizeOptions discretize{};
  /// Extra Ritz vectors carried to accelerate the trailing requested modes.
  std::size_t guard = 8;
  int max_refinements = 60;
  /// Refinement stops once every residual ||Bv - nu v|| is below this.
  double residual_target = 1e-13;
  /// Non-convergence is an error above this.
  double residual_limit = 1e-10;
};

struct SpectralDecomposition {
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  /// Quadrature defining the discrete L^2(mu) inner product.
  std::shared_ptr<const DiscreteMeasure> measure;
  /// K_F eigenvalues, descending (closest to zero first), all <= 0.
  std::vector<double> c;
  /// Integral-operator eigenvalues nu = 1/c; NaN for the Neumann constant mode.
  std::vector<double> nu;
  /// k_m at the nodes of `measure`, orthonormal in the discrete inner product.
  std::vector<std::vector<double>> eigenfunctions;
  /// ||B v - nu v|| / ||v|| of the Nystrom eigenvector (0 for analytic modes).
  std::vector<double> residuals;
  int refinement_steps = 0;
  /// Neumann only: Lebesgue grid and the derivative profiles k_m' on it.
  std::vector<double> profile_grid;
  std::vector<std::vector<double>> derivative_profiles;
  std::vector<std::string> warnings;

  std::size_t size() const { return c.size(); }
};

namespace detail {

/// Green's-kernel Nystrom problem on interior nodes y (strictly increasing,
/// inside (0,1), or (0,1] when the right end is free) with positive weights.
struct GreenSystem {
  std::vector<double> y;
  std::vector<double> w;
  bool free_right = false;  ///< mixed kernel -min(x,s) instead of Dirichlet

  double kernel(double a, double b) const {
    return free_right ? mixed_kernel(a, b) : dirichlet_kernel(a, b);
  }

  SymTridiagonal inverse_tridiagonal() const {
    const std::size_t n = y.size();
    std::vector<double> inv_h(n + 1, 0.0);
    inv_h[0] = 1.0 / y[0];
    for (std::size_t k = 1; k < n; ++k) inv_h[k] = 1.0 / (y[k] - y[k - 1]);
    inv_h[n] = free_right ? 0.0 : 1.0 / (1.0 - y[n - 1]);
    SymTridiagonal t;
    t.diag.resize(n);
    t.off.resize(n > 0 ? n - 1 : 0);
    for (std::size_t k = 0; k < n; ++k) t.diag[k] = -(inv_h[k] + inv_h[k + 1]) / w[k];
    for (std::size_t k = 0; k + 1 < n; ++k) t.off[k] = inv_h[k + 1] / std::sqrt(w[k] * w[k + 1]);
    return t;
  }

  /// Y = B V for the dense symmetric Nystrom matrix, assembled on the fly.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& V) const {
    const auto n = static_cast<Eigen::Index>(y.size());
    Eigen::VectorXd sw(n);
    for (Eigen::Index k = 0; k < n; ++k) sw[k] = std::sqrt(w[static_cast<std::size_t>(k)]);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, V.cols());
    Eigen::VectorXd row(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double yi = y[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < n; ++j) row[j] = sw[i] * sw[j] * kernel(yi, y[static_cast<std::size_t>(j)]);
      out.row(i) = row.transpose() * V;
    }
    return out;
  }
};

struct GreenEigen {
  std::vector<double> nu;  ///< ascending (most negative first)
  Eigen::MatrixXd vectors;  ///< columns, unit 2-norm
  std::vector<double> residuals;
  int steps = 0;
};

inline void orthonormalize_columns(Eigen::MatrixXd& V) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) V.col(j) -= V.col(i).dot(V.col(j)) * V.col(i);
      const double nrm = V.col(j).norm();
      if (!(nrm > 0.0)) throw NumericError("orthonormalization: rank-deficient basis");
      V.col(j) /= nrm;
    }
  }
}

inline GreenEigen solve_green_system(const GreenSystem& sys, std::size_t n_eigs,
                                     const SpectrumOptions& opts) {
  const std::size_t n = sys.y.size();
  const std::size_t want = std::min(n_eigs, n);
  const std::size_t block = std::min(n, want + opts.guard);

  // T = B^{-1} is negative definite; its largest eigenvalues c are the
  // eigenvalues of K_F closest to zero.
  const SymTridiagonal t = sys.inverse_tridiagonal();
  const auto start = largest_eigenpairs(t, block);
  const auto m = static_cast<Eigen::Index>(block);
  Eigen::MatrixXd V(static_cast<Eigen::Index>(n), m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < V.rows(); ++i)
      V(i, j) = start.vectors[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  orthonormalize_columns(V);

  GreenEigen out;
  for (int step = 0;; ++step) {
    Eigen::MatrixXd BV = sys.apply(V);
    Eigen::MatrixXd H = V.transpose() * BV;
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(H);
    if (ritz.info() != Eigen::Success) throw NumericError("Rayleigh-Ritz eigensolve failed");
    // Eigen returns ascending Ritz values: most negative nu first, which is
    // K_F eigenvalue c = 1/nu closest to zero first.
    V = (V * ritz.eigenvectors()).eval();
    BV = (BV * ritz.eigenvectors()).eval();
    out.nu.assign(ritz.eigenvalues().data(), ritz.eigenvalues().data() + m);
    out.residuals.assign(static_cast<std::size_t>(m), 0.0);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double r = (BV.col(j) - out.nu[static_cast<std::size_t>(j)] * V.col(j)).norm();
      out.residuals[static_cast<std::size_t>(j)] = r;
      if (static_cast<std::size_t>(j) < want) worst = std::max(worst, r);
    }
    out.steps = step;
    if (worst <= opts.residual_target || step >= opts.max_refinements) {
      if (worst > opts.residual_limit)
        throw NumericError("Nystrom eigensolver did not converge: residual " +
                           std::to_string(worst) + " after " + std::to_string(step) +
                           " refinement steps (n = " + std::to_string(n) + ")");
      break;
    }
    V = BV;
    orthonormalize_columns(V);
  }
  out.vectors = V.leftCols(static_cast<Eigen::Index>(want));
  out.nu.resize(want);
  out.residuals.resize(want);
  return out;
}

/// Flip so the first entry of significant magnitude is positive.
inline void fix_sign(std::vector<double>& v) {
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, std::abs(x));
  for (double x : v) {
    if (std::abs(x) > 1e-8 * peak) {
      if (x < 0.0)
        for (double& y : v) y = -y;
      return;
    }
  }
}

inline void append_mode(SpectralDecomposition& sd, double nu, double residual,
                        std::vector<double> k) {
  sd.nu.push_back(nu);
  sd.c.push_back(1.0 / nu);
  sd.residuals.push_back(residual);
  sd.eigenfunctions.push_back(std::move(k));
}

inline SpectralDecomposition spectrum_dirichlet_mixed(BoundaryCondition bc,
                                                      std::shared_ptr<const DiscreteMeasure> dm,
                                                      std::size_t n_eigs,
                                                      const SpectrumOptions& opts) {
  SpectralDecomposition sd;
  sd.bc = bc;
  sd.measure = dm;
  const auto x = dm->nodes();
  const auto w = dm->weights();

  // Nodes where the kernel row vanishes (x = 0; x = 1 for Dirichlet) only
  // contribute nu = 0 modes.
  GreenSystem sys;
  sys.free_right = bc == BoundaryCondition::mixed;
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const bool null_row = x[j] <= 0.0 || (!sys.free_right && x[j] >= 1.0);
    if (null_row) continue;
    active.push_back(j);
    sys.y.push_back(x[j]);
    sys.w.push_back(w[j]);
  }
  if (active.size() < x.size())
    sd.warnings.push_back(std::to_string(x.size() - active.size()) +
                          " null mode(s) from boundary nodes discarded");
  if (active.empty()) throw NumericError("spectrum: no interior nodes");
  if (n_eigs > active.size())
    sd.warnings.push_back("only " + std::to_string(active.size()) + " modes available");

  const auto eig = solve_green_system(sys, n_eigs, opts);
  sd.refinement_steps = eig.steps;
  for (std::size_t m = 0; m < eig.nu.size(); ++m) {
    if (std::abs(eig.nu[m]) <= 1e-14) {
      sd.warnings.push_back("mode with |nu| <= 1e-14 discarded");
      continue;
    }
    std::vector<double> k(x.size(), 0.0);
    for (std::size_t a = 0; a < active.size(); ++a)
      k[active[a]] = eig.vectors(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(m)) /
                     std::sqrt(w[active[a]]);
    fix_sign(k);
    append_mode(sd, eig.nu[m], eig.residuals[m], std::move(k));
  }
  return sd;
}

/// Cumulative integral of the piecewise-linear interpolant through
/// (0,0), (t_i, p_i), (1,0), evaluated at x.
class ProfileIntegral {
 public:
  ProfileIntegral(std::span<const double> t, std::span<const double> p) {
    knots_.push_back(0.0);
    vals_.push_back(0.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
      knots_.push_back(t[i]);
      vals_.push_back(p[i]);
    }
    knots_.push_back(1.0);
    vals_.push_back(0.0);
    cum_.assign(knots_.size(), 0.0);
    for (std::size_t i = 1; i < knots_.size(); ++i)
      cum_[i] = cum_[i - 1] + 0.5 * (knots_[i] - knots_[i - 1]) * (vals_[i] + vals_[i - 1]);
  }

  double operator()(double x) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    if (it == knots_.begin()) return 0.0;
    if (it == knots_.end()) return cum_.back();
    const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
    const double dx = x - knots_[i];
    const double slope = (vals_[i + 1] - vals_[i]) / (knots_[i + 1] - knots_[i]);
    return cum_[i] + dx * (vals_[i] + 0.5 * slope * dx);
  }

 private:
  std::vector<double> knots_, vals_, cum_;
};

inline SpectralDecomposition spectrum_neumann(const MeasureSpec& spec,
                                              std::shared_ptr<const DiscreteMeasure> dm,
                                              std::size_t n_eigs, const SpectrumOptions& opts) {
  if (std::abs(spec.total_mass() - 1.0) > 1e-12)
    throw NormalizationError("neumann spectrum: total mass must be 1");
  SpectralDecomposition sd;
  sd.bc = BoundaryCondition::neumann;
  sd.measure = dm;

  std::size_t grid_n = opts.lebesgue_grid;
  if (grid_n == 0) grid_n = spec.as_ifs() ? 2048 : opts.resolution;
  if (grid_n > opts.discretize.atom_cap) throw ResourceLimit("neumann: Lebesgue grid exceeds atom cap");
  const int iters = opts.cdf_iterations > 0 ? opts.cdf_iterations : cdf_iterations_for(spec);
  const CdfTable g(spec, iters, {});

  const double dn = static_cast<double>(grid_n);
  sd.profile_grid.resize(grid_n);
  std::vector<double> gv(grid_n);
  for (std::size_t i = 0; i < grid_n; ++i) {
    sd.profile_grid[i] = (static_cast<double>(i) + 0.5) / dn;
    gv[i] = g(sd.profile_grid[i]);
  }

  // Group grid points by their g value; H(., t) depends on t through g(t)
  // only. Groups at g = 0 or g = 1 have vanishing kernel rows.
  GreenSystem sys;
  std::vector<std::ptrdiff_t> group_of(grid_n, -1);
  for (std::size_t i = 0; i < grid_n; ++i) {
    if (gv[i] <= 0.0 || gv[i] >= 1.0) continue;
    if (!sys.y.empty() && gv[i] - sys.y.back() < 1e-14) {
      sys.w.back() += 1.0 / dn;
    } else {
      sys.y.push_back(gv[i]);
      sys.w.push_back(1.0 / dn);
    }
    group_of[i] = static_cast<std::ptrdiff_t>(sys.y.size()) - 1;
  }
  if (sys.y.empty()) throw NumericError("neumann spectrum: g is constant on the grid");
  if (sys.y.size() < grid_n)
    sd.warnings.push_back(std::to_string(grid_n - sys.y.size()) +
                          " grid point(s) share g values or sit at g in {0,1}; null modes discarded");

  const std::size_t nonzero = n_eigs > 0 ? n_eigs - 1 : 0;
  const auto eig = nonzero > 0 ? solve_green_system(sys, nonzero, opts) : GreenEigen{};
  sd.refinement_steps = eig.steps;

  const auto x = dm->nodes();
  const auto w = dm->weights();
  const double mass = dm->total_weight();

  std::vector<std::vector<double>> raw;
  std::vector<double> raw_nu, raw_res;
  for (std::size_t m = 0; m < eig.nu.size(); ++m) {
    if (std::abs(eig.nu[m]) <= 1e-14) {
      sd.warnings.push_back("mode with |nu| <= 1e-14 discarded");
      continue;
    }
    std::vector<double> profile(grid_n, 0.0);
    for (std::size_t i = 0; i < grid_n; ++i) {
      if (group_of[i] < 0) continue;
      const auto k = static_cast<std::size_t>(group_of[i]);
      profile[i] = eig.vectors(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) /
                   std::sqrt(sys.w[k]);
    }
    fix_sign(profile);
    const ProfileIntegral integral(sd.profile_grid, profile);
    std::vector<double> k(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) k[j] = integral(x[j]);
    sd.derivative_profiles.push_back(std::move(profile));
    raw.push_back(std::move(k));
    raw_nu.push_back(eig.nu[m]);
    raw_res.push_back(eig.residuals[m]);
  }

  // Constant mode first, then Gram-Schmidt in the discrete L^2(mu) product.
  std::vector<std::vector<double>> basis;
  basis.emplace_back(x.size(), 1.0 / std::sqrt(mass));
  sd.nu.push_back(std::numeric_limits<double>::quiet_NaN());
  sd.c.push_back(0.0);
  sd.residuals.push_back(0.0);
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += w[j] * a[j] * b[j];
    return s;
  };
  for (std::size_t m = 0; m < raw.size(); ++m) {
    auto v = raw[m];
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) {
        const double d = dot(b, v);
        for (std::size_t j = 0; j < v.size(); ++j) v[j] -= d * b[j];
      }
    const double nrm = std::sqrt(dot(v, v));
    if (!(nrm > 1e-12)) {
      sd.warnings.push_back("neumann mode unresolved by the mu-quadrature; dropped");
      continue;
    }
    for (double& e : v) e /= nrm;
    basis.push_back(v);
    append_mode(sd, raw_nu[m], raw_res[m], std::move(v));
  }
  sd.eigenfunctions.insert(sd.eigenfunctions.begin(), basis.front());
  return sd;
}

}  // namespace detail

/// Eigenvalues c (descending, <= 0) and eigenfunctions of K_F under `bc`.
inline SpectralDecomposition spectrum(BoundaryCondition bc, const MeasureSpec& spec,
                                      const SpectrumOptions& opts = {}) {
  auto dm = std::make_shared<const DiscreteMeasure>(
      discretize(spec, opts.resolution, opts.discretize));
  if (bc == BoundaryCondition::neumann)
    return detail::spectrum_neumann(spec, std::move(dm), opts.n_eigs, opts);
  return detail::spectrum_dirichlet_mixed(bc, std::move(dm), opts.n_eigs, opts);
}

inline SpectralDecomposition spectrum(BoundaryCondition bc, const MeasureSpec& spec,
                                      std::size_t resolution, std::size_t n_eigs) {
  SpectrumOptions opts;
  opts.resolution = resolution;
  opts.n_eigs = n_eigs;
  return spectrum(bc, spec, opts);
}

/// int |k'|^2 dx for the piecewise-linear interpolant of node values with
/// k(0) = 0 and, for Dirichlet, k(1) = 0 (free right end otherwise).
inline double dirichlet_energy(const DiscreteMeasure& dm, std::span<const double> k,
                               bool pinned_right) {
  const auto x = dm.nodes();
  double prev_x = 0.0, prev_k = 0.0, e = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] > prev_x) {
      const double d = (k[j] - prev_k) / (x[j] - prev_x);
      e += d * d * (x[j] - prev_x);
    }
    prev_x = x[j];
    prev_k = k[j];
  }
  if (pinned_right && prev_x < 1.0) e += prev_k * prev_k / (1.0 - prev_x);
  return e;
}

// ---------------------------------------------------------------------------
// Integral operators
// ---------------------------------------------------------------------------

/// (K_F^{-1} phi)(x_i) = sum_j K(x_i, x_j) phi_j w_j for Dirichlet or mixed.
inline std::vector<double> apply_inverse(BoundaryCondition bc, const DiscreteMeasure& dm,
                                         std::span<const double> phi) {
  if (bc == BoundaryCondition::neumann)
    throw UnsupportedBoundary("apply_inverse: the Neumann inverse exists only on mean-zero data");
  if (phi.size() != dm.size()) throw DimensionMismatch("apply_inverse: phi size != node count");
  const auto x = dm.nodes();
  const auto w = dm.weights();
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double k = bc == BoundaryCondition::dirichlet ? dirichlet_kernel(x[i], x[j])
                                                          : mixed_kernel(x[i], x[j]);
      s += k * phi[j] * w[j];
    }
    out[i] = s;
  }
  return out;
}

/// (A phi)(x) = int_0^x int_0^y phi dmu dy = sum_j w_j max(0, x - x_j) phi_j.
inline double apply_A(const DiscreteMeasure& dm, std::span<const double> phi, double x) {
  if (phi.size() != dm.size()) throw DimensionMismatch("apply_A: phi size != node count");
  const auto nodes = dm.nodes();
  const auto w = dm.weights();
  double s = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) s += w[j] * std::max(0.0, x - nodes[j]) * phi[j];
  return s;
}

struct InverseIdentityOptions {
  double h = 1e-4;                        ///< central-difference step
  double min_bracket_width = 1.0 / 256;   ///< coarsening of bracket endpoints
};

struct InverseIdentityReport {
  double residual = 0.0;
  std::size_t charged_brackets = 0;
  std::size_t null_brackets = 0;
};

/// Checks K_F A phi = phi: u = A phi, u' by central differences at bracket
/// endpoints, then the mu-derivative of u' as a divided difference in g over
/// each charged bracket, compared with phi at the bracket's mu-barycenter.
/// Bracket endpoints sit in node gaps wider than 2h so the difference
/// stencils never straddle an atom; 0 and 1 are used when the outermost
/// gaps qualify.
template <class Phi>
InverseIdentityReport inverse_identity_check(const DiscreteMeasure& dm, const CdfTable& g,
                                             Phi&& phi, const InverseIdentityOptions& opts = {}) {
  const auto x = dm.nodes();
  const auto w = dm.weights();
  std::vector<double> values(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) values[j] = phi(x[j]);

  std::vector<double> candidates;
  const double need = 2.0 * opts.h * (1.0 + 1e-9);
  if (x.front() > need) candidates.push_back(0.0);
  for (std::size_t j = 0; j + 1 < x.size(); ++j)
    if (x[j + 1] - x[j] > need) candidates.push_back(0.5 * (x[j] + x[j + 1]));
  if (1.0 - x.back() > need) candidates.push_back(1.0);

  std::vector<double> ends;
  for (double e : candidates)
    if (ends.empty() || e - ends.back() >= opts.min_bracket_width) ends.push_back(e);

  auto du = [&](double e) {
    return (apply_A(dm, values, e + opts.h) - apply_A(dm, values, e - opts.h)) / (2.0 * opts.h);
  };

  InverseIdentityReport r;
  for (std::size_t k = 0; k + 1 < ends.size(); ++k) {
    const double a = ends[k], b = ends[k + 1];
    const double dg = g(b) - g(a);
    if (!(dg > 0.0)) {
      ++r.null_brackets;
      continue;
    }
    double mass = 0.0, first = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] > a && x[j] < b) {
        mass += w[j];
        first += w[j] * x[j];
      }
    }
    const double quotient = (du(b) - du(a)) / dg;
    const double target = mass > 0.0 ? phi(first / mass) : phi(0.5 * (a + b));
    r.residual = std::max(r.residual, std::abs(quotient - target));
    ++r.charged_brackets;
  }
  return r;
}

}  // namespace kfspec
