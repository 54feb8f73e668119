#pragma once

#include <array>
#include <cstddef>
#include <type_traits>

#include "kfspec/errors.hpp"

namespace kfspec {

/// Composite 5-point Gauss-Legendre rule on [lo, hi] using `panels` panels.
template <class F>
auto gauss_legendre(F&& f, double lo, double hi, std::size_t panels) {
  static constexpr std::array<double, 5> kNodes{
      0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
  static constexpr std::array<double, 5> kWeights{
      0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
      0.2369268850561891};
  if (panels == 0) throw InvalidArgument("gauss_legendre: panels must be positive");
  using R = std::decay_t<decltype(f(lo))>;
  R acc{};
  const double h = (hi - lo) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = lo + (static_cast<double>(p) + 0.5) * h;
    R panel{};
    for (std::size_t k = 0; k < kNodes.size(); ++k) panel += kWeights[k] * f(mid + 0.5 * h * kNodes[k]);
    acc += 0.5 * h * panel;
  }
  return acc;
}

/// Gauss-Legendre with roughly `points` evaluations in total.
template <class F>
auto gauss_legendre_points(F&& f, double lo, double hi, std::size_t points) {
  const std::size_t panels = points < 5 ? 1 : points / 5;
  return gauss_legendre(std::forward<F>(f), lo, hi, panels);
}

}  // namespace kfspec
