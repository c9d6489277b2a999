#pragma once

// Composite Simpson on a (possibly nonuniform) grid, plus the cumulative
// variant used for one-pass resolvent application.  Each interval is
// integrated with the quadratic through a local point triple, which reduces
// to classic Simpson on uniform grids.

#include <vector>

#include "weylkit/expr.hpp"

namespace weylkit {

namespace detail {

// Integral over [x1, x2] of the quadratic through (x0,f0),(x1,f1),(x2,f2).
template <class M>
M quad_piece(double x0, double x1, double x2, const M& f0, const M& f1, const M& f2) {
  const double h = x2 - x1, hp = x1 - x0;
  const double a = (2 * h * h + 3 * h * hp) / (6 * (h + hp));
  const double b = (h * h + 3 * h * hp) / (6 * hp);
  const double c = -h * h * h / (6 * hp * (h + hp));
  return a * f2 + b * f1 + c * f0;
}

}  // namespace detail

// Prefix integrals: out[i] = integral from x[0] to x[i].  Interior intervals
// average the two neighboring quadratics, cancelling the one-sided O(h^4)
// error term so the prefix sums stay globally fourth order.
template <class M>
std::vector<M> cumulative_simpson(const std::vector<double>& x, const std::vector<M>& f) {
  if (x.size() != f.size() || x.size() < 2)
    throw DimensionMismatch("cumulative_simpson: bad sample arrays");
  const size_t npts = x.size();
  std::vector<M> out(npts);
  out[0] = M::Zero(f[0].rows(), f[0].cols()).eval();
  if (npts == 2) {
    out[1] = (0.5 * (x[1] - x[0])) * (f[0] + f[1]);
    return out;
  }
  // integral over [x_{i}, x_{i+1}] of the quadratic through (i, i+1, i+2)
  auto lead_piece = [&](size_t i) -> M {
    return (-1.0) * detail::quad_piece(x[i + 2], x[i + 1], x[i], f[i + 2], f[i + 1], f[i]);
  };
  // integral over [x_{i}, x_{i+1}] of the quadratic through (i-1, i, i+1)
  auto lag_piece = [&](size_t i) -> M {
    return detail::quad_piece(x[i - 1], x[i], x[i + 1], f[i - 1], f[i], f[i + 1]);
  };
  out[1] = lead_piece(0);
  for (size_t i = 2; i + 1 < npts; ++i)
    out[i] = out[i - 1] + 0.5 * (lag_piece(i - 1) + lead_piece(i - 1));
  out[npts - 1] = out[npts - 2] + lag_piece(npts - 2);
  return out;
}

template <class M>
M simpson(const std::vector<double>& x, const std::vector<M>& f) {
  return cumulative_simpson(x, f).back();
}

// Tail estimate for a decaying integrand on [0, cutoff]: geometric
// extrapolation from the last two equal-length segments of |integrand|.
inline double decay_tail_estimate(const std::vector<double>& x,
                                  const std::vector<double>& absf) {
  if (x.size() < 8) return std::numeric_limits<double>::infinity();
  const double len = x.back() - x.front();
  const double seg = len / 8.0;
  auto seg_integral = [&](double a, double b) {
    double s = 0.0;
    for (size_t i = 1; i < x.size(); ++i) {
      if (x[i] <= a || x[i - 1] >= b) continue;
      const double lo = std::max(a, x[i - 1]), hi = std::min(b, x[i]);
      const double w = (hi - lo) / (x[i] - x[i - 1]);
      s += 0.5 * (absf[i - 1] + absf[i]) * (x[i] - x[i - 1]) * w;
    }
    return s;
  };
  const double total = seg_integral(x.front(), x.back());
  const double i_prev = seg_integral(x.back() - 2 * seg, x.back() - seg);
  const double i_last = seg_integral(x.back() - seg, x.back());
  if (i_last <= 1e-14 * std::max(total, 1e-300)) return i_last;  // fully decayed
  if (i_prev <= 0.0) return i_last;
  const double r = i_last / i_prev;
  if (r >= 1.0) return std::numeric_limits<double>::infinity();
  return i_last * r / (1.0 - r);
}

}  // namespace weylkit
