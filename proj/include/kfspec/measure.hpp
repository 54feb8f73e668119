#pragma once

// Non-atomic measures on [0,1]: symbolic specs, atom quadratures and
// cumulative distribution tables.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "kfspec/errors.hpp"

namespace kfspec {

/// sigma(x) = a*x + b
struct AffineMap {
  double a = 1.0;
  double b = 0.0;

  constexpr double operator()(double x) const { return a * x + b; }
  constexpr double inverse(double y) const { return (y - b) / a; }

  friend bool operator==(const AffineMap&, const AffineMap&) = default;
};

struct LebesgueSpec {
  friend bool operator==(const LebesgueSpec&, const LebesgueSpec&) = default;
};

/// Piecewise-constant density: values[k] is the density on the cell
/// [k/n, (k+1)/n) of a uniform grid with n = values.size() cells.
struct DensitySpec {
  std::vector<double> values;
  friend bool operator==(const DensitySpec&, const DensitySpec&) = default;
};

/// Self-similar measure mu = sum_i p_i mu o sigma_i^{-1}.
struct IfsSpec {
  std::vector<AffineMap> maps;
  std::vector<double> weights;
  friend bool operator==(const IfsSpec&, const IfsSpec&) = default;
};

enum class MeasureKind { lebesgue, density, ifs };

class MeasureSpec {
 public:
  using Variant = std::variant<LebesgueSpec, DensitySpec, IfsSpec>;

  static constexpr double kWeightSumTolerance = 1e-12;

  static MeasureSpec lebesgue() { return MeasureSpec(LebesgueSpec{}); }

  static MeasureSpec density(std::vector<double> values) {
    if (values.empty()) throw InvalidArgument("density: empty value table");
    double mass = 0.0;
    for (double v : values) {
      if (!std::isfinite(v) || v < 0.0)
        throw InvalidArgument("density: values must be finite and nonnegative");
      mass += v;
    }
    if (!(mass > 0.0)) throw InvalidArgument("density: total mass must be positive");
    return MeasureSpec(DensitySpec{std::move(values)});
  }

  static MeasureSpec ifs(std::vector<AffineMap> maps, std::vector<double> weights) {
    if (maps.empty()) throw InvalidArgument("ifs: at least one map required");
    if (maps.size() != weights.size())
      throw DimensionMismatch("ifs: maps and weights differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < maps.size(); ++i) {
      const auto [a, b] = maps[i];
      if (!(a > 0.0 && a < 1.0)) throw InvalidArgument("ifs: map scale must lie in (0,1)");
      if (!(b >= 0.0 && a + b <= 1.0 + 1e-15))
        throw InvalidArgument("ifs: map image must lie inside [0,1]");
      if (!(weights[i] > 0.0)) throw InvalidArgument("ifs: weights must be positive");
      total += weights[i];
    }
    if (std::abs(total - 1.0) > kWeightSumTolerance)
      throw InvalidArgument("ifs: weights must sum to 1");
    return MeasureSpec(IfsSpec{std::move(maps), std::move(weights)});
  }

  MeasureKind kind() const { return static_cast<MeasureKind>(variant_.index()); }
  const Variant& variant() const { return variant_; }
  const IfsSpec* as_ifs() const { return std::get_if<IfsSpec>(&variant_); }
  const DensitySpec* as_density() const { return std::get_if<DensitySpec>(&variant_); }

  double total_mass() const {
    if (const auto* d = as_density()) {
      double mass = 0.0;
      for (double v : d->values) mass += v;
      return mass / static_cast<double>(d->values.size());
    }
    return 1.0;
  }

  friend bool operator==(const MeasureSpec&, const MeasureSpec&) = default;

 private:
  explicit MeasureSpec(Variant v) : variant_(std::move(v)) {}
  Variant variant_;
};

/// Measures used throughout the examples and tests.
namespace measures {

inline MeasureSpec lebesgue() { return MeasureSpec::lebesgue(); }

/// Lebesgue measure written as the fair dyadic IFS (x/2, (x+1)/2).
inline MeasureSpec dyadic_lebesgue() {
  return MeasureSpec::ifs({{0.5, 0.0}, {0.5, 0.5}}, {0.5, 0.5});
}

/// Middle-third Cantor measure.
inline MeasureSpec cantor3() {
  return MeasureSpec::ifs({{1.0 / 3.0, 0.0}, {1.0 / 3.0, 2.0 / 3.0}}, {0.5, 0.5});
}

/// Scale-4 Cantor measure (x/4, (x+2)/4).
inline MeasureSpec cantor4() {
  return MeasureSpec::ifs({{0.25, 0.0}, {0.25, 0.5}}, {0.5, 0.5});
}

/// Dyadic maps with biased weights {1/3, 2/3}.
inline MeasureSpec biased_dyadic() {
  return MeasureSpec::ifs({{0.5, 0.0}, {0.5, 0.5}}, {1.0 / 3.0, 2.0 / 3.0});
}

/// Middle-third maps with biased weights {1/3, 2/3}.
inline MeasureSpec biased_cantor3() {
  return MeasureSpec::ifs({{1.0 / 3.0, 0.0}, {1.0 / 3.0, 2.0 / 3.0}}, {1.0 / 3.0, 2.0 / 3.0});
}

}  // namespace measures

// ---------------------------------------------------------------------------
// Atom quadrature
// ---------------------------------------------------------------------------

/// Where a depth-k cylinder places its atom.
///  - origin: sigma_w(0), the image of the left fixed point.
///  - barycenter: sigma_w(m) with m the mean of mu, i.e. the centroid of the
///    cylinder's mass. Integrates affine functions exactly at every depth.
enum class Anchor { origin, barycenter };

struct DiscretizeOptions {
  std::size_t atom_cap = std::size_t{1} << 20;
  Anchor anchor = Anchor::origin;
  double merge_tolerance = 1e-14;
};

class DiscreteMeasure {
 public:
  /// Sorts atoms, merges nodes closer than `merge_tolerance`, drops
  /// zero-weight atoms.
  static DiscreteMeasure from_atoms(MeasureSpec spec, std::size_t resolution,
                                    std::vector<double> nodes, std::vector<double> weights,
                                    double merge_tolerance = 1e-14) {
    if (nodes.size() != weights.size())
      throw DimensionMismatch("atoms: nodes and weights differ in length");
    std::vector<std::size_t> order(nodes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return nodes[i] < nodes[j]; });
    DiscreteMeasure dm(std::move(spec), resolution);
    dm.nodes_.reserve(nodes.size());
    dm.weights_.reserve(nodes.size());
    for (std::size_t idx : order) {
      const double x = nodes[idx];
      const double w = weights[idx];
      if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("atoms: node outside [0,1]");
      if (w < 0.0 || !std::isfinite(w)) throw InvalidArgument("atoms: negative weight");
      if (w == 0.0) continue;
      if (!dm.nodes_.empty() && x - dm.nodes_.back() < merge_tolerance) {
        dm.weights_.back() += w;
      } else {
        dm.nodes_.push_back(x);
        dm.weights_.push_back(w);
      }
    }
    if (dm.nodes_.empty()) throw InvalidArgument("atoms: no positive weight");
    return dm;
  }

  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return nodes_.size(); }
  const MeasureSpec& spec() const { return spec_; }
  /// Depth for IFS measures, node count N for Lebesgue / density.
  std::size_t resolution() const { return resolution_; }

  double total_weight() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }

  double max_weight() const { return *std::max_element(weights_.begin(), weights_.end()); }

  /// Same node set (exact comparison).
  bool same_nodes(const DiscreteMeasure& other) const {
    return nodes_ == other.nodes_ && weights_ == other.weights_;
  }

 private:
  DiscreteMeasure(MeasureSpec spec, std::size_t resolution)
      : spec_(std::move(spec)), resolution_(resolution) {}

  MeasureSpec spec_;
  std::size_t resolution_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Mean of an IFS measure: m = sum p_i b_i / (1 - sum p_i a_i).
inline double ifs_mean(const IfsSpec& ifs) {
  double pb = 0.0, pa = 0.0;
  for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
    pb += ifs.weights[i] * ifs.maps[i].b;
    pa += ifs.weights[i] * ifs.maps[i].a;
  }
  return pb / (1.0 - pa);
}

namespace detail {

inline DiscreteMeasure discretize_ifs(const MeasureSpec& spec, const IfsSpec& ifs,
                                      std::size_t depth, const DiscretizeOptions& opts) {
  const std::size_t n_maps = ifs.maps.size();
  std::size_t count = 1;
  for (std::size_t k = 0; k < depth; ++k) {
    if (count > opts.atom_cap / n_maps)
      throw ResourceLimit("discretize: " + std::to_string(n_maps) + "^" + std::to_string(depth) +
                          " atoms exceed cap " + std::to_string(opts.atom_cap));
    count *= n_maps;
  }
  if (count > opts.atom_cap) throw ResourceLimit("discretize: atom cap exceeded");

  std::vector<double> nodes{opts.anchor == Anchor::origin ? 0.0 : ifs_mean(ifs)};
  std::vector<double> weights{1.0};
  for (std::size_t k = 0; k < depth; ++k) {
    std::vector<double> next_nodes;
    std::vector<double> next_weights;
    next_nodes.reserve(nodes.size() * n_maps);
    next_weights.reserve(nodes.size() * n_maps);
    for (std::size_t i = 0; i < n_maps; ++i) {
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        next_nodes.push_back(ifs.maps[i](nodes[j]));
        next_weights.push_back(ifs.weights[i] * weights[j]);
      }
    }
    nodes = std::move(next_nodes);
    weights = std::move(next_weights);
  }
  return DiscreteMeasure::from_atoms(spec, depth, std::move(nodes), std::move(weights),
                                     opts.merge_tolerance);
}

/// Integral of the piecewise-constant density over [lo, hi].
inline double density_mass(const DensitySpec& d, double lo, double hi) {
  const auto n = d.values.size();
  const double dn = static_cast<double>(n);
  lo = std::clamp(lo, 0.0, 1.0);
  hi = std::clamp(hi, 0.0, 1.0);
  if (hi <= lo) return 0.0;
  auto cell_of = [&](double x) {
    return std::min(static_cast<std::size_t>(x * dn), n - 1);
  };
  const std::size_t c0 = cell_of(lo), c1 = cell_of(hi);
  if (c0 == c1) return d.values[c0] * (hi - lo);
  double m = d.values[c0] * (static_cast<double>(c0 + 1) / dn - lo);
  for (std::size_t c = c0 + 1; c < c1; ++c) m += d.values[c] / dn;
  m += d.values[c1] * (hi - static_cast<double>(c1) / dn);
  return m;
}

}  // namespace detail

/// Atom quadrature of `spec`: IFS at cylinder depth `resolution`, otherwise
/// `resolution` midpoint nodes with cell-exact weights.
inline DiscreteMeasure discretize(const MeasureSpec& spec, std::size_t resolution,
                                  const DiscretizeOptions& opts = {}) {
  if (resolution == 0) throw InvalidArgument("discretize: resolution must be positive");
  if (const auto* ifs = spec.as_ifs()) return detail::discretize_ifs(spec, *ifs, resolution, opts);
  if (resolution > opts.atom_cap) throw ResourceLimit("discretize: node count exceeds atom cap");

  const double n = static_cast<double>(resolution);
  std::vector<double> nodes(resolution);
  std::vector<double> weights(resolution);
  const auto* dens = spec.as_density();
  for (std::size_t j = 0; j < resolution; ++j) {
    const double lo = static_cast<double>(j) / n;
    const double hi = static_cast<double>(j + 1) / n;
    nodes[j] = (static_cast<double>(j) + 0.5) / n;
    weights[j] = dens ? detail::density_mass(*dens, lo, hi) : 1.0 / n;
  }
  return DiscreteMeasure::from_atoms(spec, resolution, std::move(nodes), std::move(weights),
                                     opts.merge_tolerance);
}

/// sum_j w_j phi(x_j). Works for real- and complex-valued phi.
template <class F>
auto integrate(const DiscreteMeasure& dm, F&& phi) {
  using R = std::decay_t<decltype(phi(0.0))>;
  R acc{};
  const auto x = dm.nodes();
  const auto w = dm.weights();
  for (std::size_t j = 0; j < x.size(); ++j) acc += w[j] * phi(x[j]);
  return acc;
}

/// sum_j w_j v_j for a node-value vector.
inline double integrate_values(const DiscreteMeasure& dm, std::span<const double> v) {
  if (v.size() != dm.size()) throw DimensionMismatch("integrate: value vector size mismatch");
  double acc = 0.0;
  const auto w = dm.weights();
  for (std::size_t j = 0; j < v.size(); ++j) acc += w[j] * v[j];
  return acc;
}

/// |Q(phi) - sum_i p_i Q(phi o sigma_i)| for the depth-`depth` quadrature Q
/// of an IFS measure.
template <class F>
double self_similarity_residual(const MeasureSpec& spec, std::size_t depth, F&& phi,
                                const DiscretizeOptions& opts = {}) {
  const auto* ifs = spec.as_ifs();
  if (!ifs) throw UnsupportedSpec("self_similarity_residual: IFS measure required");
  const auto dm = discretize(spec, depth, opts);
  const double whole = integrate(dm, phi);
  double parts = 0.0;
  for (std::size_t i = 0; i < ifs->maps.size(); ++i) {
    const auto& s = ifs->maps[i];
    parts += ifs->weights[i] * integrate(dm, [&](double x) { return phi(s(x)); });
  }
  return std::abs(whole - parts);
}

// ---------------------------------------------------------------------------
// Cumulative distribution
// ---------------------------------------------------------------------------

/// Throws UnsupportedSpec when two IFS images share interior points.
inline void require_nonoverlapping(const IfsSpec& ifs) {
  std::vector<std::pair<double, double>> images;
  for (const auto& m : ifs.maps) images.emplace_back(m.b, m.a + m.b);
  std::sort(images.begin(), images.end());
  for (std::size_t i = 1; i < images.size(); ++i) {
    if (images[i].first < images[i - 1].second - 1e-15)
      throw UnsupportedSpec("cdf: IFS images overlap in their interiors");
  }
}

namespace detail {

// f_n(x) = sum_i p_i f_{n-1}(sigma_i^{-1}(x)), f_0(x) = x on [0,1] clamped
// to 0 below and 1 above. Every f_n is 0 on (-inf,0] and 1 on [1,inf), so
// only branches landing strictly inside (0,1) recurse.
inline double ifs_cdf(const IfsSpec& ifs, int n, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (n == 0) return x;
  double acc = 0.0;
  for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
    const double y = ifs.maps[i].inverse(x);
    if (y >= 1.0) {
      acc += ifs.weights[i];
    } else if (y > 0.0) {
      acc += ifs.weights[i] * ifs_cdf(ifs, n - 1, y);
    }
  }
  return acc;
}

}  // namespace detail

/// g(x) = mu([0,x]) with breakpoint table and error bound.
class CdfTable {
 public:
  CdfTable(MeasureSpec spec, int n_iter, std::vector<double> breakpoints)
      : spec_(std::move(spec)), n_iter_(n_iter) {
    if (n_iter < 1) throw InvalidArgument("cdf: n_iter must be positive");
    if (const auto* ifs = spec_.as_ifs()) {
      require_nonoverlapping(*ifs);
      double pmax = *std::max_element(ifs->weights.begin(), ifs->weights.end());
      error_bound_ = std::pow(pmax, n_iter) * spec_.total_mass();
    }
    breakpoints.push_back(0.0);
    breakpoints.push_back(1.0);
    for (double x : breakpoints)
      if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("cdf: breakpoint outside [0,1]");
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
    x_ = std::move(breakpoints);
    g_.resize(x_.size());
    double running = 0.0;
    for (std::size_t k = 0; k < x_.size(); ++k) {
      running = std::max(running, evaluate(x_[k]));
      g_[k] = running;
    }
  }

  /// g at any x in [0,1]; exact table value on breakpoints.
  double operator()(double x) const {
    auto it = std::lower_bound(x_.begin(), x_.end(), x);
    if (it != x_.end() && *it == x) return g_[static_cast<std::size_t>(it - x_.begin())];
    return evaluate(x);
  }

  std::span<const double> breakpoints() const { return x_; }
  std::span<const double> values() const { return g_; }
  double error_bound() const { return error_bound_; }
  double total_mass() const { return spec_.total_mass(); }
  int iterations() const { return n_iter_; }
  const MeasureSpec& spec() const { return spec_; }

 private:
  double evaluate(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("cdf: x outside [0,1]");
    return std::visit(
        [&](const auto& v) -> double {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, LebesgueSpec>) {
            return x;
          } else if constexpr (std::is_same_v<T, DensitySpec>) {
            return detail::density_mass(v, 0.0, x);
          } else {
            return detail::ifs_cdf(v, n_iter_, x);
          }
        },
        spec_.variant());
  }

  MeasureSpec spec_;
  int n_iter_;
  double error_bound_ = 0.0;
  std::vector<double> x_;
  std::vector<double> g_;
};

/// Uniform grid of `grid_n` points on [0,1] plus, for IFS measures, the
/// endpoints of every cylinder image up to `gap_level` (which contain all
/// gap endpoints of those levels).
inline std::vector<double> default_cdf_grid(const MeasureSpec& spec, std::size_t grid_n,
                                            int gap_level = 8,
                                            std::size_t max_endpoints = std::size_t{1} << 16) {
  std::vector<double> xs;
  if (grid_n >= 2) {
    for (std::size_t k = 0; k < grid_n; ++k)
      xs.push_back(static_cast<double>(k) / static_cast<double>(grid_n - 1));
  }
  if (const auto* ifs = spec.as_ifs()) {
    std::vector<std::pair<double, double>> cyl{{0.0, 1.0}};
    for (int level = 1; level <= gap_level; ++level) {
      if (cyl.size() * ifs->maps.size() * 2 > max_endpoints) break;
      std::vector<std::pair<double, double>> next;
      for (const auto& m : ifs->maps)
        for (const auto& [lo, hi] : cyl) next.emplace_back(m(lo), m(hi));
      for (const auto& [lo, hi] : next) {
        xs.push_back(std::clamp(lo, 0.0, 1.0));
        xs.push_back(std::clamp(hi, 0.0, 1.0));
      }
      cyl = std::move(next);
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

/// CDF table at the default grid (`grid_n` uniform points + cylinder endpoints).
inline CdfTable cdf(const MeasureSpec& spec, int n_iter, std::size_t grid_n = 257,
                    int gap_level = 8) {
  return CdfTable(spec, n_iter, default_cdf_grid(spec, grid_n, gap_level));
}

/// Iteration count giving error bound below `tol` (at least 1).
inline int cdf_iterations_for(const MeasureSpec& spec, double tol = 1e-15) {
  const auto* ifs = spec.as_ifs();
  if (!ifs) return 1;
  const double pmax = *std::max_element(ifs->weights.begin(), ifs->weights.end());
  return std::max(1, static_cast<int>(std::ceil(std::log(tol) / std::log(pmax))));
}

// ---------------------------------------------------------------------------
// Kakutani dichotomy
// ---------------------------------------------------------------------------

struct HellingerResult {
  double rho = 0.0;
  bool singular = false;
};

/// rho = sum_i sqrt(p_i q_i); the infinite product measures (and hence the
/// IFS measures built from p and q on the same maps) are mutually singular
/// iff rho < 1.
inline HellingerResult hellinger_affinity(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimensionMismatch("hellinger: weight vectors differ in length");
  if (p.empty()) throw InvalidArgument("hellinger: empty weight vectors");
  auto check = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
      if (!(x > 0.0)) throw InvalidArgument("hellinger: weights must be positive");
      s += x;
    }
    if (std::abs(s - 1.0) > MeasureSpec::kWeightSumTolerance)
      throw InvalidArgument("hellinger: weights must sum to 1");
  };
  check(p);
  check(q);
  double rho = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) rho += std::sqrt(p[i] * q[i]);
  return {rho, rho < 1.0 - 1e-12};
}

}  // namespace kfspec
