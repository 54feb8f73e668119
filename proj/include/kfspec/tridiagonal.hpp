#pragma once

// Selected eigenpairs of a real symmetric tridiagonal matrix by Sturm
// bisection and inverse iteration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "kfspec/errors.hpp"

namespace kfspec {

struct SymTridiagonal {
  std::vector<double> diag;  ///< n entries
  std::vector<double> off;   ///< n-1 entries, off[i] = T(i, i+1)

  std::size_t size() const { return diag.size(); }

  void multiply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = diag.size();
    for (std::size_t i = 0; i < n; ++i) {
      double s = diag[i] * x[i];
      if (i > 0) s += off[i - 1] * x[i - 1];
      if (i + 1 < n) s += off[i] * x[i + 1];
      y[i] = s;
    }
  }

  double max_abs_entry() const {
    double m = 0.0;
    for (double d : diag) m = std::max(m, std::abs(d));
    for (double e : off) m = std::max(m, std::abs(e));
    return m;
  }
};

namespace detail {

inline double tridiagonal_pivmin(const SymTridiagonal& t) {
  double m = 1.0;
  for (double e : t.off) m = std::max(m, e * e);
  return m * std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
}

}  // namespace detail

/// Number of eigenvalues strictly below sigma (Sturm sequence).
inline std::size_t sturm_count(const SymTridiagonal& t, double sigma) {
  const double pivmin = detail::tridiagonal_pivmin(t);
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double e2 = i == 0 ? 0.0 : t.off[i - 1] * t.off[i - 1];
    q = t.diag[i] - sigma - (i == 0 ? 0.0 : e2 / q);
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
  }
  return count;
}

/// Gershgorin enclosure of the spectrum.
inline std::pair<double, double> gershgorin_bounds(const SymTridiagonal& t) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(t.off[i - 1]);
    if (i + 1 < n) r += std::abs(t.off[i]);
    lo = std::min(lo, t.diag[i] - r);
    hi = std::max(hi, t.diag[i] + r);
  }
  return {lo, hi};
}

/// Eigenvalue with ascending index k (0 = smallest) by bisection.
inline double bisect_eigenvalue(const SymTridiagonal& t, std::size_t k) {
  auto [lo, hi] = gershgorin_bounds(t);
  const double pad = 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi));
  lo -= pad;
  hi += pad;
  const double pivmin = detail::tridiagonal_pivmin(t);
  for (int it = 0; it < 256; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double tol =
        2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)) + pivmin;
    if (hi - lo <= tol || mid == lo || mid == hi) break;
    if (sturm_count(t, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// Solves (T - sigma I) x = rhs with partial pivoting; exactly singular
/// pivots are perturbed, which is what inverse iteration wants.
class ShiftedTridiagonalSolver {
 public:
  ShiftedTridiagonalSolver(const SymTridiagonal& t, double sigma) {
    const std::size_t n = t.size();
    d_.resize(n);
    for (std::size_t i = 0; i < n; ++i) d_[i] = t.diag[i] - sigma;
    dl_ = t.off;
    du_ = t.off;
    du2_.assign(n > 2 ? n - 2 : 0, 0.0);
    ipiv_.resize(n > 0 ? n - 1 : 0);
    for (std::size_t i = 0; i + 1 < n; ++i) ipiv_[i] = i;
    const double tiny = std::numeric_limits<double>::epsilon() * std::max(t.max_abs_entry(), 1e-300);

    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d_[i]) >= std::abs(dl_[i])) {
        if (d_[i] == 0.0) d_[i] = tiny;
        const double fact = dl_[i] / d_[i];
        dl_[i] = fact;
        d_[i + 1] -= fact * du_[i];
      } else {
        const double fact = d_[i] / dl_[i];
        d_[i] = dl_[i];
        dl_[i] = fact;
        const double temp = du_[i];
        du_[i] = d_[i + 1];
        d_[i + 1] = temp - fact * d_[i + 1];
        if (i + 2 < n) {
          du2_[i] = du_[i + 1];
          du_[i + 1] = -fact * du_[i + 1];
        }
        ipiv_[i] = i + 1;
      }
    }
    if (n > 0 && d_[n - 1] == 0.0) d_[n - 1] = tiny;
  }

  void solve(std::span<double> b) const {
    const std::size_t n = d_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (ipiv_[i] == i) {
        b[i + 1] -= dl_[i] * b[i];
      } else {
        const double temp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = temp - dl_[i] * b[i];
      }
    }
    if (n == 0) return;
    b[n - 1] /= d_[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
    if (n < 3) return;
    for (std::size_t ii = n - 2; ii-- > 0;) {
      b[ii] = (b[ii] - du_[ii] * b[ii + 1] - du2_[ii] * b[ii + 2]) / d_[ii];
    }
  }

 private:
  std::vector<double> d_, dl_, du_, du2_;
  std::vector<std::size_t> ipiv_;
};

struct TridiagonalEigenpairs {
  std::vector<double> values;                ///< descending
  std::vector<std::vector<double>> vectors;  ///< unit 2-norm
};

/// The `count` largest eigenpairs of t, in descending order of eigenvalue.
inline TridiagonalEigenpairs largest_eigenpairs(const SymTridiagonal& t, std::size_t count,
                                                int inverse_iterations = 4) {
  const std::size_t n = t.size();
  count = std::min(count, n);
  TridiagonalEigenpairs out;
  for (std::size_t r = 0; r < count; ++r) out.values.push_back(bisect_eigenvalue(t, n - 1 - r));

  // Deterministic start vector (splitmix-style hash of the index).
  auto start = [](std::size_t i, std::size_t r) {
    std::uint64_t z = 0x9E3779B97F4A7C15ull * (i + 1) + 0xBF58476D1CE4E5B9ull * (r + 7);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
  };

  for (std::size_t r = 0; r < count; ++r) {
    ShiftedTridiagonalSolver solver(t, out.values[r]);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = start(i, r);
    for (int it = 0; it < inverse_iterations; ++it) {
      solver.solve(v);
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& u : out.vectors) {
          double dot = 0.0;
          for (std::size_t i = 0; i < n; ++i) dot += u[i] * v[i];
          for (std::size_t i = 0; i < n; ++i) v[i] -= dot * u[i];
        }
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (!(norm > 0.0) || !std::isfinite(norm))
        throw NumericError("inverse iteration broke down at eigenvalue index " + std::to_string(r));
      for (double& x : v) x /= norm;
    }
    out.vectors.push_back(std::move(v));
  }
  return out;
}

}  // namespace kfspec
