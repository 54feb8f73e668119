#pragma once

// Calculus of the mu-derivative on functions f(x) = f(0) + int_0^x h dmu,
// the first-order operator with twisted boundary f(1) = e^{i theta} f(0),
// the time change psi -> psi o g and the associated Hilbert norms.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "kfspec/errors.hpp"
#include "kfspec/measure.hpp"
#include "kfspec/quadrature.hpp"

namespace kfspec {

/// f(x) = f0 + sum_{x_j <= x} w_j h_j over a shared DiscreteMeasure.
/// h is the mu-density of df.
class MuPrimitive {
 public:
  MuPrimitive(std::shared_ptr<const DiscreteMeasure> dm, double f0, std::vector<double> h)
      : dm_(std::move(dm)), f0_(f0), h_(std::move(h)) {
    if (!dm_) throw InvalidArgument("primitive: null measure");
    if (h_.size() != dm_->size()) throw DimensionMismatch("primitive: h size != node count");
    cumulative_.resize(h_.size());
    double acc = f0_;
    const auto w = dm_->weights();
    for (std::size_t j = 0; j < h_.size(); ++j) {
      acc += w[j] * h_[j];
      cumulative_[j] = acc;
    }
  }

  /// Samples h at the nodes of `dm`.
  template <class H>
  static MuPrimitive from_density(std::shared_ptr<const DiscreteMeasure> dm, double f0, H&& h) {
    std::vector<double> values;
    values.reserve(dm->size());
    for (double x : dm->nodes()) values.push_back(h(x));
    return MuPrimitive(std::move(dm), f0, std::move(values));
  }

  double f0() const { return f0_; }
  std::span<const double> density() const { return h_; }
  const DiscreteMeasure& measure() const { return *dm_; }
  const std::shared_ptr<const DiscreteMeasure>& measure_ptr() const { return dm_; }

  /// f at node j (right limit: includes the atom at x_j).
  std::span<const double> node_values() const { return cumulative_; }

  /// f just before node j (left limit).
  double left_value(std::size_t j) const { return j == 0 ? f0_ : cumulative_[j - 1]; }

  /// Value at the right end of [0,1] (all atoms included).
  double end_value() const { return cumulative_.back(); }

  double operator()(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("primitive: x outside [0,1]");
    const auto nodes = dm_->nodes();
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    const auto k = static_cast<std::size_t>(it - nodes.begin());
    return k == 0 ? f0_ : cumulative_[k - 1];
  }

 private:
  std::shared_ptr<const DiscreteMeasure> dm_;
  double f0_;
  std::vector<double> h_;
  std::vector<double> cumulative_;
};

inline double eval_primitive(const MuPrimitive& f, double x) { return f(x); }

/// (f(y) - f(x)) / (g(y) - g(x)); throws NullBracket when the bracket
/// carries no mu-mass.
template <class F>
double nabla_mu_divided_difference(F&& f, const CdfTable& g, double x, double y) {
  const double gx = g(x), gy = g(y);
  if (!(gy > gx)) throw NullBracket(x, y);
  return (f(y) - f(x)) / (gy - gx);
}

/// Same quotient with the convention nabla_mu f = 0 on mu-null brackets.
template <class F>
double nabla_mu_or_zero(F&& f, const CdfTable& g, double x, double y) {
  try {
    return nabla_mu_divided_difference(std::forward<F>(f), g, x, y);
  } catch (const NullBracket&) {
    return 0.0;
  }
}

struct ProductRuleReport {
  /// max_j |Delta(fg)_j / w_j - (f_j nabla g_j + nabla f_j g_j)| at node values.
  double pointwise = 0.0;
  /// |(fg)(1) - (fg)(0) - <nabla f, g> - <f, nabla g>|.
  double boundary = 0.0;
  double inner_df_g = 0.0;
  double inner_f_dg = 0.0;
};

/// Discrete Leibniz rule and the boundary identity.
/// The inner products evaluate f and g at an atom as the mean of their
/// one-sided limits there, the Stieltjes convention for a continuous
/// integrand against a measure that has been lumped into atoms.
inline ProductRuleReport product_rule_check(const MuPrimitive& f, const MuPrimitive& g) {
  if (!f.measure().same_nodes(g.measure()))
    throw DimensionMismatch("product rule: primitives live on different measures");
  const auto w = f.measure().weights();
  const auto hf = f.density();
  const auto hg = g.density();
  const auto F = f.node_values();
  const auto G = g.node_values();
  ProductRuleReport r;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double fl = f.left_value(j), gl = g.left_value(j);
    const double quotient = (F[j] * G[j] - fl * gl) / w[j];
    r.pointwise = std::max(r.pointwise, std::abs(quotient - (F[j] * hg[j] + hf[j] * G[j])));
    r.inner_df_g += w[j] * hf[j] * 0.5 * (gl + G[j]);
    r.inner_f_dg += w[j] * 0.5 * (fl + F[j]) * hg[j];
  }
  const double lhs = f.end_value() * g.end_value() - f.f0() * g.f0();
  r.boundary = std::abs(lhs - r.inner_df_g - r.inner_f_dg);
  return r;
}

// ---------------------------------------------------------------------------
// First-order operator with boundary f(1) = e^{i theta} f(0)
// ---------------------------------------------------------------------------

class FirstOrderEigensystem {
 public:
  using Complex = std::complex<double>;

  FirstOrderEigensystem(std::shared_ptr<const DiscreteMeasure> dm, double theta, double mass,
                        int n_max, std::vector<double> g_at_nodes)
      : dm_(std::move(dm)), theta_(theta), mass_(mass), n_max_(n_max) {
    const double scale = 1.0 / std::sqrt(mass_);
    for (int n = -n_max_; n <= n_max_; ++n) {
      const double lambda = (theta_ + 2.0 * n * std::numbers::pi) / mass_;
      std::vector<Complex> phi(g_at_nodes.size());
      for (std::size_t j = 0; j < phi.size(); ++j)
        phi[j] = scale * std::exp(Complex(0.0, lambda * g_at_nodes[j]));
      lambdas_.push_back(lambda);
      phis_.push_back(std::move(phi));
    }
  }

  double theta() const { return theta_; }
  double mass() const { return mass_; }
  int n_max() const { return n_max_; }
  std::size_t size() const { return lambdas_.size(); }
  /// Mode index n of position k in [-n_max, n_max].
  int index(std::size_t k) const { return static_cast<int>(k) - n_max_; }
  std::size_t position(int n) const { return static_cast<std::size_t>(n + n_max_); }
  std::span<const double> eigenvalues() const { return lambdas_; }
  double lambda(int n) const { return lambdas_.at(position(n)); }
  std::span<const Complex> phi(int n) const { return phis_.at(position(n)); }
  const DiscreteMeasure& measure() const { return *dm_; }

  /// Analytic value phi_n(0) = 1/sqrt(mu(J)).
  Complex phi_at_zero(int /*n*/) const { return Complex(1.0 / std::sqrt(mass_), 0.0); }

  /// <phi_m, phi_n>_{L^2(mu)} for m, n in [-n_lim, n_lim], row-major.
  std::vector<Complex> gram(int n_lim) const {
    n_lim = std::min(n_lim, n_max_);
    const std::size_t dim = static_cast<std::size_t>(2 * n_lim + 1);
    std::vector<Complex> G(dim * dim);
    const auto w = dm_->weights();
    for (std::size_t a = 0; a < dim; ++a) {
      const auto pm = phi(static_cast<int>(a) - n_lim);
      for (std::size_t b = 0; b < dim; ++b) {
        const auto pn = phi(static_cast<int>(b) - n_lim);
        Complex acc{};
        for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * std::conj(pm[j]) * pn[j];
        G[a * dim + b] = acc;
      }
    }
    return G;
  }

  /// max |G - I| over |m|, |n| <= n_lim.
  double gram_deviation(int n_lim) const {
    n_lim = std::min(n_lim, n_max_);
    const auto G = gram(n_lim);
    const std::size_t dim = static_cast<std::size_t>(2 * n_lim + 1);
    double dev = 0.0;
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = 0; b < dim; ++b)
        dev = std::max(dev, std::abs(G[a * dim + b] - (a == b ? 1.0 : 0.0)));
    return dev;
  }

  /// max_k |phi(x_k) - phi(0) - i lambda sum_{j<=k} w_j phi(x_j)|.
  double eigen_identity_residual(int n) const {
    const auto p = phi(n);
    const auto w = dm_->weights();
    const Complex il(0.0, lambda(n));
    Complex running{};
    double worst = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      running += w[k] * p[k];
      worst = std::max(worst, std::abs(p[k] - phi_at_zero(n) - il * running));
    }
    return worst;
  }

 private:
  std::shared_ptr<const DiscreteMeasure> dm_;
  double theta_;
  double mass_;
  int n_max_;
  std::vector<double> lambdas_;
  std::vector<std::vector<Complex>> phis_;
};

/// lambda_n = (theta + 2 n pi)/mu(J), phi_n(x) = e^{i lambda_n g(x)}/sqrt(mu(J)),
/// sampled at the nodes of `dm`.
inline FirstOrderEigensystem first_order_eigensystem(std::shared_ptr<const DiscreteMeasure> dm,
                                                     const CdfTable& g, double theta,
                                                     int n_max = 16) {
  if (!dm) throw InvalidArgument("eigensystem: null measure");
  if (n_max < 0) throw InvalidArgument("eigensystem: n_max must be nonnegative");
  const double mass = g.total_mass();
  if (!(mass > 0.0)) throw InvalidArgument("eigensystem: total mass must be positive");
  std::vector<double> gn;
  gn.reserve(dm->size());
  for (double x : dm->nodes()) gn.push_back(g(x));
  return FirstOrderEigensystem(std::move(dm), theta, mass, n_max, std::move(gn));
}

// ---------------------------------------------------------------------------
// Time change psi -> psi o g
// ---------------------------------------------------------------------------

namespace detail {
inline void require_unit_mass(const CdfTable& g, const char* what) {
  if (std::abs(g.total_mass() - 1.0) > 1e-12)
    throw UnsupportedSpec(std::string(what) + ": requires total mass 1");
}
}  // namespace detail

/// (psi o g)(x_j) at the nodes of `dm`. psi may be real or complex valued.
template <class Psi>
auto time_change_pullback(Psi&& psi, const CdfTable& g, const DiscreteMeasure& dm) {
  detail::require_unit_mass(g, "time change");
  using R = std::decay_t<decltype(psi(0.0))>;
  std::vector<R> out;
  out.reserve(dm.size());
  for (double x : dm.nodes()) out.push_back(psi(g(x)));
  return out;
}

struct IsometryReport {
  double norm_mu = 0.0;        ///< ||psi o g||_{L^2(mu)} by atom quadrature
  double norm_lebesgue = 0.0;  ///< ||psi||_{L^2(0,1)} by Gauss-Legendre
};

template <class Psi>
IsometryReport time_change_isometry(Psi&& psi, const CdfTable& g, const DiscreteMeasure& dm,
                                    std::size_t quad_points = 20000) {
  const auto pulled = time_change_pullback(psi, g, dm);
  const auto w = dm.weights();
  double s = 0.0;
  for (std::size_t j = 0; j < pulled.size(); ++j) s += w[j] * std::norm(pulled[j]);
  const double lebesgue = gauss_legendre_points(
      [&](double u) { return static_cast<double>(std::norm(psi(u))); }, 0.0, 1.0, quad_points);
  return {std::sqrt(s), std::sqrt(lebesgue)};
}

// ---------------------------------------------------------------------------
// Hilbert norms
// ---------------------------------------------------------------------------

/// ||df||_{H(K_mu)} = ||df/dmu||_{L^2(mu)}.
inline double rkhs_norm(const MuPrimitive& f) {
  const auto w = f.measure().weights();
  const auto h = f.density();
  double s = 0.0;
  for (std::size_t j = 0; j < h.size(); ++j) s += w[j] * h[j] * h[j];
  return std::sqrt(s);
}

inline double rkhs_inner(const MuPrimitive& f, const MuPrimitive& g) {
  if (!f.measure().same_nodes(g.measure()))
    throw DimensionMismatch("rkhs: primitives live on different measures");
  const auto w = f.measure().weights();
  const auto hf = f.density();
  const auto hg = g.density();
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * hf[j] * hg[j];
  return s;
}

/// The kernel section mu(. cap [0,x]) as a primitive: h = indicator of [0,x].
inline MuPrimitive kernel_section(std::shared_ptr<const DiscreteMeasure> dm, double x) {
  return MuPrimitive::from_density(std::move(dm), 0.0,
                                   [x](double s) { return s <= x ? 1.0 : 0.0; });
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct ClassNormResult {
  std::vector<double> terms;
  double sum = 0.0;
};

/// Terms int_{I_k} |f'|^2 dx for mutually singular restricted-Lebesgue
/// components I_k, and their partial sum.
template <class Deriv>
ClassNormResult class_norm_partial(Deriv&& fprime, std::span<const Interval> components,
                                   std::size_t points_per_component = 10000) {
  std::vector<Interval> sorted(components.begin(), components.end());
  for (const auto& c : sorted)
    if (!(c.hi > c.lo)) throw InvalidArgument("class norm: empty component interval");
  std::sort(sorted.begin(), sorted.end(), [](auto a, auto b) { return a.lo < b.lo; });
  for (std::size_t k = 1; k < sorted.size(); ++k)
    if (sorted[k].lo < sorted[k - 1].hi) throw InvalidArgument("class norm: overlapping components");

  ClassNormResult r;
  for (const auto& c : components) {
    const double term = gauss_legendre_points(
        [&](double x) {
          const double d = fprime(x);
          return d * d;
        },
        c.lo, c.hi, points_per_component);
    r.terms.push_back(term);
    r.sum += term;
  }
  return r;
}

}  // namespace kfspec
