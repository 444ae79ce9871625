#pragma once

// Binary information-theoretic helpers. All logarithms are base 2.

#include <cmath>
#include <numbers>

#include "polarlab/error.hpp"

namespace polarlab {

/// -p log2 p with the 0 log 0 = 0 convention.
inline long double plogp(long double p) {
  return p > 0 ? -p * std::log2(p) : 0.0L;
}

/// Binary entropy h2(p) in bits.
inline double h2(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return static_cast<double>(plogp(p) + plogp(1.0L - p));
}

/// Inverse of h2 restricted to [0, 1/2], by bisection to 1e-12.
inline double h2_inverse(double h) {
  if (!(h >= 0.0 && h <= 1.0)) throw Error("h2_inverse: argument outside [0,1]");
  // h2 rounds to 1 within ~1e-8 of 1/2, so bisection cannot resolve the top end.
  if (h == 1.0) return 0.5;
  double lo = 0.0, hi = 0.5;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (h2(mid) < h) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Binary convolution a * b = a(1-b) + b(1-a).
inline double binary_convolution(double a, double b) { return a * (1 - b) + b * (1 - a); }

/// Entropy contribution of a two-point conditional slice with joint masses
/// (a, b): (a+b) h2(a/(a+b)), written as a sum of -p log(p/(a+b)).
inline long double slice_entropy(long double a, long double b) {
  const long double t = a + b;
  if (t <= 0) return 0.0L;
  long double h = 0;
  if (a > 0) h -= a * std::log2(a / t);
  if (b > 0) h -= b * std::log2(b / t);
  return h;
}

inline constexpr double kLn2 = std::numbers::ln2;

}  // namespace polarlab
