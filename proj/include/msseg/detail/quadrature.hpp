#pragma once

#include <array>
#include <cmath>

namespace msseg::detail {

// 5-point Gauss-Legendre rule on [a, b].
template <typename F>
double gauss_legendre5(const F& f, double a, double b) {
  static constexpr std::array<double, 5> nodes = {
      0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
  static constexpr std::array<double, 5> weights = {
      0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
      0.2369268850561891};
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) sum += weights[k] * f(mid + half * nodes[k]);
  return sum * half;
}

template <typename F>
double adaptive_gl5_step(const F& f, double a, double b, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = gauss_legendre5(f, a, m);
  const double right = gauss_legendre5(f, m, b);
  if (depth <= 0 || std::abs(left + right - whole) <= tol) return left + right;
  return adaptive_gl5_step(f, a, m, left, 0.5 * tol, depth - 1) +
         adaptive_gl5_step(f, m, b, right, 0.5 * tol, depth - 1);
}

// Bisection-refined Gauss-Legendre: the whole-interval estimate is compared with the
// two-half estimate and split until they agree to `tol` or `max_depth` is reached.
template <typename F>
double integrate(const F& f, double a, double b, double tol, int max_depth = 20) {
  if (!(b > a)) return 0.0;
  return adaptive_gl5_step(f, a, b, gauss_legendre5(f, a, b), tol, max_depth);
}

}  // namespace msseg::detail
