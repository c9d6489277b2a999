#pragma once

// Matrix solution frames of l[y] = lambda y.
//
// The complexified first-order system u' = F(t,lambda) u is integrated with an
// embedded Dormand-Prince 5(4) pair, adaptive in step size, with complex
// arithmetic throughout.  Frames store the plain quasi-derivative stack at the
// grid points together with the exact derivative F*u there; evaluation between
// grid points is cubic Hermite.
//
// In the upper half-plane solutions split into exponentially growing and
// decaying families.  Growing frames are integrated forward; decaying frames
// (the defect frame on the half-line) must be produced by backward runs, and
// Weyl-limit computations go through ratio_propagate, which keeps only the
// right-ratio of the frame and re-orthonormalizes columns periodically.  All
// downstream quantities are invariant under right factors, so nothing is lost.

#include <algorithm>
#include <cmath>
#include <vector>

#include "weylkit/expr.hpp"

namespace weylkit {

struct IntegratorConfig {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  double max_step = std::numeric_limits<double>::infinity();
  int renorm_every = 10;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

template <class Rhs>
class Stepper {
 public:
  Stepper(Rhs rhs, double rel_tol, double abs_tol, double max_step)
      : rhs_(std::move(rhs)), rtol_(rel_tol), atol_(abs_tol), hmax_(max_step) {
    if (!(rtol_ > 0.0) || !(atol_ > 0.0) || !(hmax_ > 0.0))
      throw Error("integrator tolerances and max step must be positive");
  }

  // One accepted step from (t,u,du) toward t+dir*h_try; updates all of them.
  // Returns the step actually taken (signed).
  double step(double& t, MatC& u, MatC& du, double h_signed) {
    using T = Dopri5;
    for (;;) {
      const double h = h_signed;
      if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t))) throw StepSizeUnderflow(t);
      MatC k1 = du;
      MatC k2 = rhs_(t + T::c2 * h, u + h * (T::a21 * k1));
      MatC k3 = rhs_(t + T::c3 * h, u + h * (T::a31 * k1 + T::a32 * k2));
      MatC k4 = rhs_(t + T::c4 * h, u + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
      MatC k5 = rhs_(t + T::c5 * h,
                     u + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
      MatC k6 = rhs_(t + h, u + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 +
                                     T::a64 * k4 + T::a65 * k5));
      MatC unew =
          u + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
      MatC k7 = rhs_(t + h, unew);
      MatC err = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 +
                      T::e7 * k7);

      double norm = 0.0;
      for (Index j = 0; j < u.cols(); ++j)
        for (Index i = 0; i < u.rows(); ++i) {
          double sc = atol_ + rtol_ * std::max(std::abs(u(i, j)), std::abs(unew(i, j)));
          norm = std::max(norm, std::abs(err(i, j)) / sc);
        }

      double factor = 0.9 * std::pow(std::max(norm, 1e-10), -0.2);
      factor = std::clamp(factor, 0.2, 5.0);
      if (norm <= 1.0) {
        t += h;
        u = std::move(unew);
        du = std::move(k7);
        next_h_ = std::copysign(std::min(std::abs(h) * factor, hmax_), h);
        return h;
      }
      h_signed = std::copysign(std::min(std::abs(h) * factor, hmax_), h);
    }
  }

  double suggest(double span) const {
    if (next_h_ != 0.0) return next_h_;
    return std::copysign(std::min(std::abs(span) / 100.0, hmax_), span);
  }
  void set_next(double h) { next_h_ = h; }

 private:
  Rhs rhs_;
  double rtol_, atol_, hmax_;
  double next_h_ = 0.0;
};

}  // namespace detail

// Grid-sampled matrix solution carrying the full quasi-derivative stack.
class SolutionFrame {
 public:
  cx lambda{};
  FrameLayout layout{};
  std::vector<double> grid;       // strictly increasing
  std::vector<MatC> frames;       // plain stacks u(t_i), 2nd x cols
  std::vector<MatC> derivatives;  // F(t_i) u(t_i)
  Index cols = 0;

  bool covers(double t) const {
    return !grid.empty() && t >= grid.front() - 1e-12 && t <= grid.back() + 1e-12;
  }

  // Cubic Hermite dense output.
  MatC eval(double t) const {
    if (!covers(t)) throw PointOutsideGrid(t);
    const auto it = std::lower_bound(grid.begin(), grid.end(), t);
    size_t i = static_cast<size_t>(std::distance(grid.begin(), it));
    if (i >= grid.size()) i = grid.size() - 1;
    if (i > 0 && (i == grid.size() || grid[i] > t)) --i;
    if (i + 1 >= grid.size()) return frames.back();
    const double h = grid[i + 1] - grid[i];
    if (h <= 0.0 || t <= grid[i]) return frames[i];
    const double th = (t - grid[i]) / h;
    const double h00 = (1 + 2 * th) * (1 - th) * (1 - th);
    const double h10 = th * (1 - th) * (1 - th);
    const double h01 = th * th * (3 - 2 * th);
    const double h11 = th * th * (th - 1);
    return h00 * frames[i] + (h10 * h) * derivatives[i] + h01 * frames[i + 1] +
           (h11 * h) * derivatives[i + 1];
  }

  MatC value(double t) const { return eval(t).topRows(layout.d); }

  std::pair<MatC, MatC> eval_split(double t) const { return layout.split(eval(t)); }

  MatC at_index(size_t i) const { return frames[i]; }

  // Frames are linear in their columns: F(t) X solves the same equation.
  SolutionFrame right_multiplied(const MatC& x) const {
    if (x.rows() != cols) throw DimensionMismatch("right_multiplied: factor rows != cols");
    SolutionFrame out;
    out.lambda = lambda;
    out.layout = layout;
    out.grid = grid;
    out.cols = x.cols();
    out.frames.reserve(frames.size());
    out.derivatives.reserve(derivatives.size());
    for (const auto& f : frames) out.frames.push_back(f * x);
    for (const auto& df : derivatives) out.derivatives.push_back(df * x);
    return out;
  }
};

// Integrate u' = F(t,lambda) u from init at t0 to t1 (either direction),
// recording at the integrator's accepted steps.
inline SolutionFrame integrate_frame(const DiffExpr& e, cx lambda, double t0, double t1,
                                     const MatC& init, const IntegratorConfig& cfg = {}) {
  if (init.rows() != e.rows())
    throw DimensionMismatch("integrate_frame: init must have 2nd rows");
  auto rhs = [&e, lambda](double t, const MatC& u) -> MatC {
    return system_matrix(e, t, lambda) * u;
  };
  detail::Stepper<decltype(rhs)> st(rhs, cfg.rel_tol, cfg.abs_tol, cfg.max_step);

  SolutionFrame fr;
  fr.lambda = lambda;
  fr.layout = e.layout();
  fr.cols = init.cols();

  double t = t0;
  MatC u = init;
  MatC du = rhs(t, u);
  fr.grid.push_back(t);
  fr.frames.push_back(u);
  fr.derivatives.push_back(du);

  if (t0 == t1) return fr;
  const double dir = (t1 > t0) ? 1.0 : -1.0;
  const double snap = 1e-13 * std::max({1.0, std::abs(t0), std::abs(t1)});
  double h = st.suggest(t1 - t0);
  while (dir * (t1 - t) > snap) {
    if (dir * (t + h - t1) > 0) h = t1 - t;
    st.step(t, u, du, h);
    fr.grid.push_back(t);
    fr.frames.push_back(u);
    fr.derivatives.push_back(du);
    h = st.suggest(t1 - t);
  }
  fr.grid.back() = t1;
  if (dir < 0) {
    std::reverse(fr.grid.begin(), fr.grid.end());
    std::reverse(fr.frames.begin(), fr.frames.end());
    std::reverse(fr.derivatives.begin(), fr.derivatives.end());
  }
  return fr;
}

// Same, but record exactly at the given ascending grid.  init_at_back selects
// a backward sweep starting from grid.back().
inline SolutionFrame integrate_on_grid(const DiffExpr& e, cx lambda,
                                       const std::vector<double>& grid, const MatC& init,
                                       bool init_at_back, const IntegratorConfig& cfg = {}) {
  if (grid.size() < 2) throw DimensionMismatch("integrate_on_grid: need at least 2 points");
  if (init.rows() != e.rows())
    throw DimensionMismatch("integrate_on_grid: init must have 2nd rows");
  auto rhs = [&e, lambda](double t, const MatC& u) -> MatC {
    return system_matrix(e, t, lambda) * u;
  };
  detail::Stepper<decltype(rhs)> st(rhs, cfg.rel_tol, cfg.abs_tol, cfg.max_step);

  const size_t npts = grid.size();
  std::vector<MatC> frames(npts), derivs(npts);
  const double span = grid.back() - grid.front();
  double t = init_at_back ? grid.back() : grid.front();
  MatC u = init;
  MatC du = rhs(t, u);

  auto record = [&](size_t i) {
    frames[i] = u;
    derivs[i] = du;
  };

  const double snap = 1e-13 * std::max({1.0, std::abs(grid.front()), std::abs(grid.back())});
  if (!init_at_back) {
    record(0);
    double h = st.suggest(span);
    for (size_t i = 1; i < npts; ++i) {
      const double target = grid[i];
      while (target - t > snap) {
        if (t + h > target) h = target - t;
        st.step(t, u, du, h);
        h = st.suggest(target - t + 1e-30);
      }
      t = target;
      record(i);
    }
  } else {
    record(npts - 1);
    double h = st.suggest(-span);
    for (size_t ii = npts - 1; ii-- > 0;) {
      const double target = grid[ii];
      while (t - target > snap) {
        if (t + h < target) h = target - t;
        st.step(t, u, du, h);
        h = st.suggest(target - t - 1e-30);
      }
      t = target;
      record(ii);
    }
  }

  SolutionFrame fr;
  fr.lambda = lambda;
  fr.layout = e.layout();
  fr.cols = init.cols();
  fr.grid = grid;
  fr.frames = std::move(frames);
  fr.derivatives = std::move(derivs);
  return fr;
}

// Backward sweep from grid.back() with periodic QR re-orthonormalization.
// Records an orthonormal running basis G_i at each grid point together with
// the index of the last absorbed triangular factor; the true frame is
// G_i R_k ... R_1 (factors in order of absorption).  Columns of the raw
// product can condition like e^{(mu_max - mu_min) cutoff}, far beyond double
// precision for higher-order expressions; the factored form never forms it.
struct FactoredBackwardFrame {
  cx lambda{};
  FrameLayout layout{};
  std::vector<double> grid;
  std::vector<MatC> basis, basis_deriv;  // orthonormal running basis at grid points
  std::vector<size_t> factors_applied;   // how many R factors precede each point
  std::vector<MatC> factors;             // R_1, R_2, ... in absorption order

  // frame * N with the factor chain replayed ascending: the i-th recorded
  // point carries right factor (R_m ... R_{k_i+1})^{-1} N relative to the
  // bottom of the run, each inverse well conditioned on its own.
  SolutionFrame assemble(const MatC& n) const {
    SolutionFrame fr;
    fr.lambda = lambda;
    fr.layout = layout;
    fr.grid = grid;
    fr.cols = n.cols();
    fr.frames.resize(grid.size());
    fr.derivatives.resize(grid.size());
    MatC t = n;
    size_t applied = factors.size();
    for (size_t i = 0; i < grid.size(); ++i) {
      while (applied > factors_applied[i]) {
        --applied;
        t = factors[applied].triangularView<Eigen::Upper>().solve(t);
      }
      fr.frames[i] = basis[i] * t;
      fr.derivatives[i] = basis_deriv[i] * t;
    }
    return fr;
  }
};

inline FactoredBackwardFrame integrate_backward_factored(const DiffExpr& e, cx lambda,
                                                         const std::vector<double>& grid,
                                                         const MatC& init,
                                                         const IntegratorConfig& cfg = {}) {
  if (grid.size() < 2) throw DimensionMismatch("integrate_backward_factored: short grid");
  if (init.rows() != e.rows())
    throw DimensionMismatch("integrate_backward_factored: init must have 2nd rows");
  auto rhs = [&e, lambda](double t, const MatC& u) -> MatC {
    return system_matrix(e, t, lambda) * u;
  };
  detail::Stepper<decltype(rhs)> st(rhs, cfg.rel_tol, cfg.abs_tol, cfg.max_step);

  FactoredBackwardFrame out;
  out.lambda = lambda;
  out.layout = e.layout();
  out.grid = grid;
  const size_t npts = grid.size();
  out.basis.resize(npts);
  out.basis_deriv.resize(npts);
  out.factors_applied.resize(npts);

  double t = grid.back();
  MatC u = init;
  MatC du = rhs(t, u);
  const double snap = 1e-13 * std::max(1.0, std::abs(grid.back()));
  double h = st.suggest(grid.front() - grid.back());
  int since_renorm = 0;

  auto renorm = [&]() {
    Eigen::HouseholderQR<MatC> qr(u);
    MatC r = qr.matrixQR().topRows(u.cols()).triangularView<Eigen::Upper>();
    const double dmin = r.diagonal().cwiseAbs().minCoeff();
    const double dmax = r.diagonal().cwiseAbs().maxCoeff();
    if (dmax <= 0.0 || dmin / dmax < 1e-13) throw RankCollapse(t);
    u = qr.householderQ() * MatC::Identity(u.rows(), u.cols());
    du = rhs(t, u);
    out.factors.push_back(std::move(r));
    since_renorm = 0;
    st.set_next(h);
  };

  out.basis[npts - 1] = u;
  out.basis_deriv[npts - 1] = du;
  out.factors_applied[npts - 1] = 0;
  for (size_t ii = npts - 1; ii-- > 0;) {
    const double target = grid[ii];
    while (t - target > snap) {
      if (t + h < target) h = target - t;
      st.step(t, u, du, h);
      if (++since_renorm >= std::max(cfg.renorm_every, 1) && t - target > snap) renorm();
      h = st.suggest(target - t - 1e-30);
    }
    t = target;
    out.basis[ii] = u;
    out.basis_deriv[ii] = du;
    out.factors_applied[ii] = out.factors.size();
  }
  return out;
}

// Canonical frame Y_0 = (c s): tilde-initial data is the identity on C^{2nd}.
inline SolutionFrame canonical_solutions(const DiffExpr& e, cx lambda,
                                         const std::vector<double>& grid,
                                         const IntegratorConfig& cfg = {}) {
  if (grid.empty() || grid.front() != 0.0)
    throw DimensionMismatch("canonical_solutions: grid must start at 0");
  const MatC init = e.layout().from_tilde(MatC::Identity(e.rows(), e.rows()));
  if (grid.size() == 1) {
    SolutionFrame fr;
    fr.lambda = lambda;
    fr.layout = e.layout();
    fr.cols = e.rows();
    fr.grid = grid;
    fr.frames = {init};
    fr.derivatives = {system_matrix(e, 0.0, lambda) * init};
    return fr;
  }
  return integrate_on_grid(e, lambda, grid, init, false, cfg);
}

// B(t) = Z^(2)(t)^* Y^(1)(t) - Z^(1)(t)^* Y^(2)(t); t-independent when the
// spectral parameters are conjugate.
inline MatC lagrange_bracket(const SolutionFrame& y, const SolutionFrame& z, double t) {
  if (y.layout.rows() != z.layout.rows())
    throw DimensionMismatch("lagrange_bracket: incompatible frames");
  auto [y1, y2] = y.eval_split(t);
  auto [z1, z2] = z.eval_split(t);
  return z2.adjoint() * y1 - z1.adjoint() * y2;
}

// Right-ratio of a propagated nd-column frame: y^(1) = A X, y^(2) = B X for an
// unknown invertible right factor X.
struct MobiusRatio {
  MatC a, b;
  MatC neg_ratio() const {  // -A B^{-1}, the m-iterate of the truncation scheme
    return -(b.adjoint().partialPivLu().solve(a.adjoint())).adjoint();
  }
};

inline MobiusRatio ratio_propagate(const DiffExpr& e, cx lambda, double from, double to,
                                   const MatC& bc_frame, const IntegratorConfig& cfg = {}) {
  if (bc_frame.rows() != e.rows() || bc_frame.cols() != e.nd())
    throw DimensionMismatch("ratio_propagate: bc_frame must be 2nd x nd");
  const FrameLayout lay = e.layout();
  if (from == to) {
    auto [a, b] = lay.split(bc_frame);
    return {a, b};
  }
  auto rhs = [&e, lambda](double t, const MatC& u) -> MatC {
    return system_matrix(e, t, lambda) * u;
  };
  detail::Stepper<decltype(rhs)> st(rhs, cfg.rel_tol, cfg.abs_tol, cfg.max_step);

  double t = from;
  MatC u = bc_frame;
  MatC du = rhs(t, u);
  double h = st.suggest(to - from);
  const double dir = (to > from) ? 1.0 : -1.0;
  const double snap = 1e-13 * std::max({1.0, std::abs(from), std::abs(to)});
  int since_renorm = 0;
  while (dir * (to - t) > snap) {
    if (dir * (t + h - to) > 0) h = to - t;
    st.step(t, u, du, h);
    if (++since_renorm >= std::max(cfg.renorm_every, 1) && dir * (to - t) > 0) {
      Eigen::HouseholderQR<MatC> qr(u);
      MatC r = qr.matrixQR().topRows(u.cols()).triangularView<Eigen::Upper>();
      double dmin = r.diagonal().cwiseAbs().minCoeff();
      double dmax = r.diagonal().cwiseAbs().maxCoeff();
      if (dmax <= 0.0 || dmin / dmax < 1e-13) throw RankCollapse(t);
      u = qr.householderQ() * MatC::Identity(u.rows(), u.cols());
      du = rhs(t, u);
      since_renorm = 0;
      st.set_next(h);
    }
    h = st.suggest(to - t);
  }
  auto [a, b] = lay.split(u);
  Eigen::JacobiSVD<MatC> svd(b);
  if (svd.singularValues().minCoeff() <
      1e-13 * std::max(1.0, svd.singularValues().maxCoeff()))
    throw RankCollapse(to);
  return {a, b};
}

inline std::vector<double> uniform_grid(double a, double b, size_t points) {
  std::vector<double> g(points);
  for (size_t i = 0; i < points; ++i)
    g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
  g.back() = b;
  return g;
}

}  // namespace weylkit
