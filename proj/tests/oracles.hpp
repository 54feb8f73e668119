#pragma once

// Reference computations that do not share code paths with the library.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "kfspec/kf_spectral.hpp"
#include "kfspec/measure.hpp"

namespace oracle {

inline constexpr double pi = std::numbers::pi;

/// Devil's staircase by ternary digit expansion.
inline double cantor_staircase(double x, int digits = 60) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double g = 0.0, scale = 0.5;
  for (int k = 0; k < digits; ++k) {
    x *= 3.0;
    const int d = static_cast<int>(std::floor(x));
    x -= d;
    if (d == 1) return g + scale;
    if (d == 2) g += scale;
    scale *= 0.5;
  }
  return g;
}

/// Moments int x^k dmu of an IFS measure from the fixed-point relation
/// M_k = sum_i p_i sum_l C(k,l) a_i^l b_i^{k-l} M_l.
inline std::vector<double> ifs_moments(const kfspec::IfsSpec& ifs, int kmax) {
  std::vector<double> m(static_cast<std::size_t>(kmax) + 1, 0.0);
  m[0] = 1.0;
  for (int k = 1; k <= kmax; ++k) {
    double rhs = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
      const double a = ifs.maps[i].a, b = ifs.maps[i].b, p = ifs.weights[i];
      double binom = 1.0;
      for (int l = 0; l < k; ++l) {
        rhs += p * binom * std::pow(a, l) * std::pow(b, k - l) * m[static_cast<std::size_t>(l)];
        binom = binom * (k - l) / (l + 1);
      }
      diag += p * std::pow(a, k);
    }
    m[static_cast<std::size_t>(k)] = rhs / (1.0 - diag);
  }
  return m;
}

struct DenseSpectrum {
  std::vector<double> c;                      ///< descending
  std::vector<std::vector<double>> k;         ///< node values, L^2(w)-normalized
};

/// Dense symmetric eigensolve of B_ij = sqrt(w_i w_j) K(x_i, x_j).
template <class Kernel>
DenseSpectrum dense_nystrom(const std::vector<double>& x, const std::vector<double>& w, Kernel&& kernel,
                            std::size_t count) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd B(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
      B(i, j) = std::sqrt(w[a] * w[b]) * kernel(x[a], x[b]);
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  DenseSpectrum out;
  // Most negative nu first gives c closest to zero first; skip nu ~ 0.
  for (Eigen::Index m = 0; m < n && out.c.size() < count; ++m) {
    const double nu = es.eigenvalues()[m];
    if (std::abs(nu) <= 1e-14) continue;
    out.c.push_back(1.0 / nu);
    std::vector<double> v(x.size());
    for (Eigen::Index j = 0; j < n; ++j)
      v[static_cast<std::size_t>(j)] = es.eigenvectors()(j, m) / std::sqrt(w[static_cast<std::size_t>(j)]);
    out.k.push_back(std::move(v));
  }
  return out;
}

inline DenseSpectrum dense_nystrom(kfspec::BoundaryCondition bc, const kfspec::DiscreteMeasure& dm,
                                   std::size_t count) {
  const std::vector<double> x(dm.nodes().begin(), dm.nodes().end());
  const std::vector<double> w(dm.weights().begin(), dm.weights().end());
  if (bc == kfspec::BoundaryCondition::mixed)
    return dense_nystrom(x, w, [](double a, double b) { return -std::min(a, b); }, count);
  return dense_nystrom(
      x, w, [](double a, double b) { return a <= b ? a * (b - 1.0) : b * (a - 1.0); }, count);
}

inline double lebesgue_dirichlet(int n) { return -n * n * pi * pi; }
inline double lebesgue_mixed(int n) { return -std::pow((2.0 * n - 1.0) * pi / 2.0, 2); }

}  // namespace oracle
