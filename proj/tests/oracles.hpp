#pragma once

// Closed-form references for the free expression l[y] = -y'' used by the unit
// and acceptance suites.  The principal branch with Im sqrt >= 0 lives here
// only; library code paths never take square roots of lambda.

#include "weylkit/resolvent.hpp"

namespace oracles {

using weylkit::cx;
using weylkit::MatC;

inline cx sqrt_up(cx lambda) {
  cx s = std::sqrt(lambda);
  if (s.imag() < 0.0) s = -s;
  return s;
}

// canonical solutions of -y'' = lambda y
inline cx free_c(double t, cx lambda) { return std::cos(sqrt_up(lambda) * t); }
inline cx free_s(double t, cx lambda) {
  const cx w = sqrt_up(lambda);
  if (std::abs(w) < 1e-12) return t;
  return std::sin(w * t) / w;
}
inline cx free_c_deriv(double t, cx lambda) {
  const cx w = sqrt_up(lambda);
  return -w * std::sin(w * t);
}
inline cx free_s_deriv(double t, cx lambda) { return std::cos(sqrt_up(lambda) * t); }

// regular interval [0, b]
inline cx free_m_regular(cx lambda, double b) {
  const cx w = sqrt_up(lambda);
  return std::cos(w * b) / (-w * std::sin(w * b));
}
inline cx free_m2_regular(cx lambda, double b) {
  const cx w = sqrt_up(lambda);
  return 1.0 / (w * std::sin(w * b));
}

// half line, limit point
inline cx free_m_halfline(cx lambda) { return cx(0, 1) / sqrt_up(lambda); }

}  // namespace oracles
