#pragma once

// Scalar bracketing root finder and golden-section maximizer.

#include <cmath>
#include <cstdint>
#include <utility>

#include <boost/math/tools/toms748_solve.hpp>

namespace structured_harvest {

struct RootResult {
  bool bracketed = false;  // false: f(lo) and f(hi) do not straddle zero
  double root = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double f_lo = 0.0;
  double f_hi = 0.0;
  std::uintmax_t iterations = 0;
};

/// Root of f on [lo, hi] to an absolute width of abs_tol. Uses TOMS 748
/// (inverse cubic / quadratic interpolation with bisection safeguards).
template <class F>
RootResult find_root(F&& f, double lo, double hi, double abs_tol) {
  RootResult res;
  res.lo = lo;
  res.hi = hi;
  res.f_lo = f(lo);
  res.f_hi = f(hi);
  if (res.f_lo == 0.0) {
    res.bracketed = true;
    res.root = lo;
    return res;
  }
  if (res.f_hi == 0.0) {
    res.bracketed = true;
    res.root = hi;
    return res;
  }
  if (std::signbit(res.f_lo) == std::signbit(res.f_hi)) return res;

  std::uintmax_t max_iter = 200;
  auto tol = [abs_tol](double a, double b) { return std::abs(b - a) <= abs_tol; };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, res.f_lo, res.f_hi, tol, max_iter);
  res.bracketed = true;
  res.root = 0.5 * (a + b);
  res.iterations = max_iter;
  return res;
}

enum class GoldenStatus { kConverged, kNonUnimodal, kFlat };

struct GoldenResult {
  GoldenStatus status = GoldenStatus::kConverged;
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Golden-section maximization of f on [a, b] until the bracket is narrower
/// than width_tol. If the first interior probe lies below both ends the
/// objective is not unimodal there and `fallback` is returned instead; a
/// constant objective returns the bracket midpoint.
template <class F>
GoldenResult golden_section_maximize(F&& f, double a, double b, double width_tol, double fallback) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  GoldenResult out;

  const double fa = f(a);
  const double fb = f(b);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  out.evaluations = 4;

  if (fa == fb && fb == fc && fc == fd) {
    out.status = GoldenStatus::kFlat;
    out.x = 0.5 * (a + b);
    out.value = f(out.x);
    ++out.evaluations;
    return out;
  }
  if ((fc < fa && fc < fb) || (fd < fa && fd < fb)) {
    out.status = GoldenStatus::kNonUnimodal;
    out.x = fallback;
    out.value = f(fallback);
    ++out.evaluations;
    return out;
  }

  while (b - a > width_tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++out.evaluations;
  }
  if (fc >= fd) {
    out.x = c;
    out.value = fc;
  } else {
    out.x = d;
    out.value = fd;
  }
  return out;
}

}  // namespace structured_harvest
