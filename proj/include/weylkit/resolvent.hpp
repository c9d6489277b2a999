#pragma once

// Green kernels by both routes, generalized resolvents as integral operators,
// the Krein-type formula for constant self-adjoint pairs, and spectrum probes.
//
//   triplet route   G(x>t) = Z0(x,lambda) Ytau^*(t,conj lambda)
//                   G(x<t) = Ytau(x,lambda) Z0^*(t,conj lambda)
//   Shtraus route   G = Y0(x,lambda)(Omega_tau + sgn(t-x)/2 J) Y0^*(t,conj lambda)
//
// The triplet route is the production path: on a half-line its two factors are
// separately well-conditioned (Z0 decays, Ytau grows), while the Shtraus form
// cancels exponentially large products and is only evaluable while
// Im sqrt(lambda) (x+t) stays moderate.

#include "weylkit/charmat.hpp"

namespace weylkit {

struct Setting {
  DiffExpr e;
  TripletConfig triplet;
  IntegratorConfig ode;
  QuadratureConfig quad;

  static Setting regular(DiffExpr expr) {
    Setting s;
    s.e = std::move(expr);
    s.triplet = TripletConfig::regular();
    return s;
  }
  static Setting minimal_singular(DiffExpr expr, std::vector<double> sched = {},
                                  double tol = 1e-8) {
    Setting s;
    s.e = std::move(expr);
    if (sched.empty()) sched = default_schedule(s.e.endpoint_b.value);
    s.triplet = TripletConfig::minimal_singular(std::move(sched), tol);
    return s;
  }

  std::vector<double> solver_grid(double upto) const {
    const size_t pts =
        (static_cast<size_t>(std::max(quad.min_points, quad.points_per_unit * upto))) | 1u;
    return uniform_grid(0.0, upto, pts);
  }
};

inline WeylMatrix weyl_matrix(const Setting& s, cx lambda, bool allow_real = false) {
  return weyl_matrix(s.e, lambda, s.triplet, s.ode, allow_real);
}

// Initial tilde-data of Y_tau: (-C2^*(conj); C1^*(conj)) (C0^*(conj) - M C1^*(conj))^{-1}.
inline MatC y_tau_initial(const NevanlinnaPair& tau, const WeylMatrix& w) {
  if (tau.h != w.h()) throw DimensionMismatch("y_tau_initial: pair/triplet size mismatch");
  const Index nd = w.nd;
  auto [c0c, c1c] = tau.at(std::conj(w.lambda));
  const MatC a = c0c.adjoint() - w.full() * c1c.adjoint();
  Eigen::JacobiSVD<MatC> svd(a);
  if (svd.singularValues().minCoeff() <
      1e-12 * std::max(1.0, svd.singularValues().maxCoeff()))
    throw BoundaryResonance(w.lambda);
  const MatC ainv = a.partialPivLu().solve(MatC::Identity(a.rows(), a.cols()));
  const MatC hat_c2c = c0c.leftCols(nd), hat_c1c = c1c.leftCols(nd);
  MatC t(2 * nd, tau.h);
  t.topRows(nd) = -(hat_c2c.adjoint() * ainv);
  t.bottomRows(nd) = hat_c1c.adjoint() * ainv;
  return t;
}

inline SolutionFrame y_tau_frame(const Setting& s, const NevanlinnaPair& tau,
                                 const WeylMatrix& w, const std::vector<double>& grid) {
  const MatC tilde0 = y_tau_initial(tau, w);
  if (s.triplet.kind == TripletKind::Regular)
    return canonical_solutions(s.e, w.lambda, grid, s.ode).right_multiplied(tilde0);
  return integrate_on_grid(s.e, w.lambda, grid, s.e.layout().from_tilde(tilde0), false,
                           s.ode);
}

struct GreenKernel {
  cx lambda{};
  double cutoff = 0.0;
  FrameLayout layout{};
  TripletKind kind = TripletKind::Regular;
  CharMatrix omega;           // blocks route
  WeylMatrix w, w_conj;
  SolutionFrame z0, z0c;      // Z_0 at lambda and conj lambda
  SolutionFrame ytau, ytauc;  // Y_tau at lambda and conj lambda
  SolutionFrame y0, y0c;      // canonical frame at lambda and conj lambda
  MatC jmat;                  // J on C^{nd} (+) C^{nd}
};

inline GreenKernel make_green_kernel(const Setting& s, const NevanlinnaPair& tau,
                                     cx lambda) {
  GreenKernel k;
  k.lambda = lambda;
  k.layout = s.e.layout();
  k.kind = s.triplet.kind;
  k.jmat = symplectic_j(s.e.nd());
  k.w = weyl_matrix(s, lambda, /*allow_real=*/true);
  k.w_conj = weyl_matrix(s, std::conj(lambda), /*allow_real=*/true);
  k.cutoff = std::max(k.w.cutoff, k.w_conj.cutoff);
  const std::vector<double> grid = s.solver_grid(k.cutoff);
  k.y0 = canonical_solutions(s.e, lambda, grid, s.ode);
  k.y0c = canonical_solutions(s.e, std::conj(lambda), grid, s.ode);
  if (k.kind == TripletKind::Regular) {
    k.z0 = k.y0.right_multiplied(z0_initial(k.w));
    k.z0c = k.y0c.right_multiplied(z0_initial(k.w_conj));
    k.ytau = k.y0.right_multiplied(y_tau_initial(tau, k.w));
    k.ytauc = k.y0c.right_multiplied(y_tau_initial(tau, k.w_conj));
  } else {
    k.z0 = z0_frame(s.e, k.w, grid, s.ode);
    k.z0c = z0_frame(s.e, k.w_conj, grid, s.ode);
    align_weyl_with_frame(k.w, k.z0);
    align_weyl_with_frame(k.w_conj, k.z0c);
    k.ytau = integrate_on_grid(s.e, lambda, grid,
                               s.e.layout().from_tilde(y_tau_initial(tau, k.w)), false,
                               s.ode);
    k.ytauc = integrate_on_grid(s.e, std::conj(lambda), grid,
                                s.e.layout().from_tilde(y_tau_initial(tau, k.w_conj)),
                                false, s.ode);
  }
  k.omega = omega_tau_blocks(tau, k.w);
  return k;
}

inline MatC green_eval_triplet(const GreenKernel& k, double x, double t) {
  if (x == t) throw DiagonalPoint(x);
  if (x > t) return k.z0.value(x) * k.ytauc.value(t).adjoint();
  return k.ytau.value(x) * k.z0c.value(t).adjoint();
}

inline MatC green_eval_shtraus(const GreenKernel& k, double x, double t) {
  if (x == t) throw DiagonalPoint(x);
  const double sgn = (t > x) ? 1.0 : -1.0;
  const MatC mid = k.omega.omega + (0.5 * sgn) * k.jmat;
  return k.y0.value(x) * mid * k.y0c.value(t).adjoint();
}

struct ResolventResult {
  std::vector<double> grid;
  std::vector<VecC> y;         // solution samples
  std::vector<MatC> stack;     // full quasi-derivative stacks
  double ode_residual = 0.0;   // finite-difference ||l[y]-lambda y-f||_2 / ||f||_2
  double bc_residual = 0.0;    // tau boundary-condition defect
  double jump_residual = 0.0;  // kernel jump-identity defect on the grid
  double quadrature_tail = 0.0;
};

// y(x) = Z0(x) int_0^x Ytau^*(t,conj) f(t) dt + Ytau(x) int_x^b Z0^*(t,conj) f dt
// via cumulative Simpson prefix sums; single pass over the grid.
inline ResolventResult apply_resolvent(const Setting& s, const GreenKernel& k,
                                       const NevanlinnaPair& tau,
                                       const std::vector<VecC>& f_samples) {
  const std::vector<double>& xs = k.z0.grid;
  if (f_samples.size() != xs.size())
    throw DimensionMismatch("apply_resolvent: f must be sampled on the solver grid");
  const Index d = k.layout.d;
  const size_t npts = xs.size();

  std::vector<MatC> zf(npts), yf(npts);
  std::vector<double> fmag(npts);
  for (size_t i = 0; i < npts; ++i) {
    zf[i] = k.z0c.frames[i].topRows(d).adjoint() * f_samples[i];
    yf[i] = k.ytauc.frames[i].topRows(d).adjoint() * f_samples[i];
    fmag[i] = f_samples[i].norm();
  }
  const std::vector<MatC> zpre = cumulative_simpson(xs, zf);
  const std::vector<MatC> ypre = cumulative_simpson(xs, yf);
  const MatC ztotal = zpre.back();

  ResolventResult res;
  res.grid = xs;
  res.y.resize(npts);
  res.stack.resize(npts);
  double jump_max = 0.0;
  MatC jump_target = MatC::Zero(k.layout.rows(), d);
  jump_target.bottomRows(d) = -MatC::Identity(d, d);
  for (size_t i = 0; i < npts; ++i) {
    res.stack[i] = k.z0.frames[i] * ypre[i] + k.ytau.frames[i] * (ztotal - zpre[i]);
    res.y[i] = res.stack[i].topRows(d).col(0);
    const MatC jump = k.z0.frames[i] * k.ytauc.frames[i].topRows(d).adjoint() -
                      k.ytau.frames[i] * k.z0c.frames[i].topRows(d).adjoint();
    jump_max = std::max(jump_max, (jump - jump_target).norm());
  }
  res.jump_residual = jump_max;

  if (k.kind == TripletKind::MinimalSingular) {
    // truncation error of the infinite-interval integral is governed by the
    // decay of the defect-weighted source
    std::vector<double> mag(npts);
    for (size_t i = 0; i < npts; ++i) mag[i] = zf[i].norm();
    res.quadrature_tail = decay_tail_estimate(xs, mag);
    if (!std::isfinite(res.quadrature_tail) || res.quadrature_tail > s.quad.tail_tol)
      throw QuadratureNotConverged(res.quadrature_tail);
  }

  // finite-difference residual of l[y] - lambda y = f via the last stack row;
  // fourth-order stencil on uniform grids, second-order otherwise
  const double h0 = xs[1] - xs[0];
  bool uniform = true;
  for (size_t i = 1; i + 1 < npts && uniform; ++i)
    uniform = std::abs(xs[i + 1] - xs[i] - h0) < 1e-9 * std::max(1.0, h0);
  double num = 0.0, den = 0.0;
  for (size_t i = 1; i + 1 < npts; ++i) {
    MatC du;
    if (uniform && i >= 2 && i + 2 < npts)
      du = (-res.stack[i + 2] + 8.0 * res.stack[i + 1] - 8.0 * res.stack[i - 1] +
            res.stack[i - 2]) /
           (12.0 * h0);
    else
      du = (res.stack[i + 1] - res.stack[i - 1]) / (xs[i + 1] - xs[i - 1]);
    const MatC rhs = system_matrix(s.e, xs[i], k.lambda) * res.stack[i];
    VecC defect = (du - rhs).bottomRows(d).col(0) + f_samples[i];
    const double wq = 0.5 * (xs[i + 1] - xs[i - 1]);
    num += defect.squaredNorm() * wq;
    den += fmag[i] * fmag[i] * wq;
  }
  res.ode_residual = den > 0 ? std::sqrt(num / den) : std::sqrt(num);

  // tau boundary condition on the computed solution
  {
    const Index nd = s.e.nd();
    auto [c0, c1] = tau.at(k.lambda);
    const MatC hat_c2 = c0.leftCols(nd), hat_c1 = c1.leftCols(nd);
    auto front = k.layout.split(res.stack.front());
    VecC bc = hat_c1 * front.first.col(0) + hat_c2 * front.second.col(0);
    if (k.kind == TripletKind::Regular) {
      const MatC cp0 = c0.rightCols(nd), cp1 = c1.rightCols(nd);
      auto back = k.layout.split(res.stack.back());
      bc += cp0 * back.second.col(0) - cp1 * back.first.col(0);
    }
    res.bc_residual = bc.norm();
  }
  return res;
}

// Krein-type formula for a constant self-adjoint pair:
//   R_tau(lambda) f = R_0(lambda) f + Z0(.,lambda) (C0-C1M)^{-1} C1
//                     int_0^b Z0^*(t,conj lambda) f(t) dt,
// the stored normal form absorbing the sign flip of the extension convention.
inline ResolventResult krein_resolvent(const Setting& s, const NevanlinnaPair& tau,
                                       const GreenKernel& k0_kernel,
                                       const std::vector<VecC>& f_samples) {
  if (!tau.self_adjoint_constant())
    throw Error("krein_resolvent: pair must be constant self-adjoint");
  const NevanlinnaPair tau0 = NevanlinnaPair::tau0(tau.h);
  ResolventResult base = apply_resolvent(s, k0_kernel, tau0, f_samples);

  const WeylMatrix& w = k0_kernel.w;
  auto [c0, c1] = tau.at(w.lambda);
  const MatC inv = detail::resonance_inverse(c0, c1, w.full(), w.lambda);
  const MatC gain = inv * c1;

  const std::vector<double>& xs = k0_kernel.z0.grid;
  const Index d = s.e.d;
  std::vector<MatC> zf(xs.size());
  for (size_t i = 0; i < xs.size(); ++i)
    zf[i] = k0_kernel.z0c.frames[i].topRows(d).adjoint() * f_samples[i];
  const MatC g = simpson(xs, zf);

  const MatC corr = gain * g;
  for (size_t i = 0; i < xs.size(); ++i) {
    base.stack[i] += k0_kernel.z0.frames[i] * corr;
    base.y[i] = base.stack[i].topRows(d).col(0);
  }
  base.bc_residual = 0.0;  // recomputed below for the target pair
  {
    const Index nd = s.e.nd();
    const MatC hat_c2 = c0.leftCols(nd), hat_c1 = c1.leftCols(nd);
    auto front = s.e.layout().split(base.stack.front());
    VecC bc = hat_c1 * front.first.col(0) + hat_c2 * front.second.col(0);
    if (k0_kernel.kind == TripletKind::Regular) {
      const MatC cp0 = c0.rightCols(nd), cp1 = c1.rightCols(nd);
      auto back = s.e.layout().split(base.stack.back());
      bc += cp0 * back.second.col(0) - cp1 * back.first.col(0);
    }
    base.bc_residual = bc.norm();
  }
  return base;
}

struct SpectralProbe {
  cx lambda{};
  MatC t;
  double sigma_min = 0.0;
  double t_norm = 0.0;
};

// T(lambda) from the boundary form applied to a fundamental solution:
// Regular uses Z = Y_0; MinimalSingular uses the defect frame.
inline SpectralProbe spectral_probe(const Setting& s, const NevanlinnaPair& tau,
                                    cx lambda) {
  const Index nd = s.e.nd();
  auto [c0, c1] = tau.at(lambda);
  SpectralProbe probe;
  probe.lambda = lambda;
  if (s.triplet.kind == TripletKind::Regular) {
    const double b = regular_b(s.e);
    const SolutionFrame y0 = canonical_solutions(s.e, lambda, {0.0, b}, s.ode);
    auto [y1_0, y2_0] = y0.eval_split(0.0);
    auto [y1_b, y2_b] = y0.eval_split(b);
    const MatC hat_c2 = c0.leftCols(nd), hat_c1 = c1.leftCols(nd);
    const MatC cp0 = c0.rightCols(nd), cp1 = c1.rightCols(nd);
    probe.t = hat_c1 * y1_0 + hat_c2 * y2_0 + cp0 * y2_b - cp1 * y1_b;
  } else {
    const WeylMatrix w = weyl_matrix(s, lambda, /*allow_real=*/true);
    probe.t = c1 * (-w.m) + c0;  // boundary form on the v_0 frame
  }
  Eigen::JacobiSVD<MatC> svd(probe.t);
  probe.sigma_min = svd.singularValues().minCoeff();
  probe.t_norm = svd.singularValues().maxCoeff();
  return probe;
}

// Scan sigma_min(T(lambda)) over a real interval; refine local minima by
// golden section; accept as eigenvalue when sigma_min < floor * ||T||.
inline std::vector<double> eig_scan(const Setting& s, const NevanlinnaPair& tau,
                                    double lo, double hi, size_t grid_n = 0,
                                    double refine_tol = 1e-9,
                                    double accept_floor = 1e-8) {
  if (s.triplet.kind != TripletKind::Regular)
    throw Error("eig_scan: regular endpoint required");
  if (!tau.self_adjoint_constant())
    throw Error("eig_scan: pair must be constant self-adjoint");
  if (grid_n == 0) {
    // 8 points per free-case eigenvalue spacing, d-fold multiplicity included
    const double b = regular_b(s.e);
    const double spacing =
        2.0 * M_PI * std::sqrt(std::max(hi, 1.0)) / (std::max(b, 1e-3) * double(s.e.d));
    grid_n = static_cast<size_t>(std::max(64.0, 8.0 * (hi - lo) / std::max(spacing, 1e-6)));
  }
  auto sig = [&](double x) { return spectral_probe(s, tau, cx(x, 0.0)); };

  std::vector<double> xs = uniform_grid(lo, hi, grid_n + 1);
  std::vector<double> vals(xs.size()), norms(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    SpectralProbe p = sig(xs[i]);
    vals[i] = p.sigma_min;
    norms[i] = p.t_norm;
  }

  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  std::vector<double> out;
  for (size_t i = 1; i + 1 < xs.size(); ++i) {
    if (!(vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1])) continue;
    double a = xs[i - 1], b2 = xs[i + 1];
    double x1 = b2 - gr * (b2 - a), x2 = a + gr * (b2 - a);
    double f1 = sig(x1).sigma_min, f2 = sig(x2).sigma_min;
    while (b2 - a > refine_tol * std::max(1.0, std::abs(a))) {
      if (f1 < f2) {
        b2 = x2;
        x2 = x1;
        f2 = f1;
        x1 = b2 - gr * (b2 - a);
        f1 = sig(x1).sigma_min;
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b2 - a);
        f2 = sig(x2).sigma_min;
      }
    }
    const double xstar = 0.5 * (a + b2);
    SpectralProbe p = sig(xstar);
    if (p.sigma_min < accept_floor * std::max(p.t_norm, 1e-300)) out.push_back(xstar);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace weylkit
