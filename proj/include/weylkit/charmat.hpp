#pragma once

// Nevanlinna boundary pairs tau(lambda) = {(C0(lambda), C1(lambda))} and the
// characteristic matrix Omega_tau(lambda), computed by two independent routes:
//
//   blocks route   entries M(C0-C1M)^{-1}C0, -I/2 - M(C0-C1M)^{-1}C1,
//                  I/2 - (C0-C1M)^{-1}C0, (C0-C1M)^{-1}C1, compressed to the
//                  leading nd x nd corner of each block,
//   Krein route    Omega_0 - S (tau+M)^{-1} S^*(conj lambda), with
//                  (tau+M)^{-1} = -(C0-C1M)^{-1} C1.
//
// The stored boundary-condition normal form is
//   C1^ y^(1)(0) + C2^ y^(2)(0) + C0' G0' y - C1' G1' y = 0,
// with C0 = (C2^  C0') and C1 = (C1^  C1') against H = C^{nd} (+) H'.
//
// A constant pair is the upper-half-plane branch; the lower branch is the
// adjoint relation (identical matrices for self-adjoint pairs).

#include "weylkit/quadrature.hpp"
#include "weylkit/weyl.hpp"

namespace weylkit {

namespace detail {

inline MatC orthonormal_rows(const MatC& rows) {
  Eigen::HouseholderQR<MatC> qr(rows.adjoint());
  MatC q = qr.householderQ() * MatC::Identity(rows.cols(), rows.rows());
  MatC on = q.adjoint();
  // canonical phase: first significant entry of each row made positive real,
  // so equal relations produce identical representatives
  for (Index r = 0; r < on.rows(); ++r) {
    const double scale = on.row(r).norm();
    for (Index c = 0; c < on.cols(); ++c) {
      const cx v = on(r, c);
      if (std::abs(v) > 1e-10 * scale) {
        on.row(r) *= std::conj(v) / std::abs(v);
        break;
      }
    }
  }
  return on;
}

// Pair form of the adjoint relation tau^*: rows spanning the orthogonal
// complement of {(C1^H k, -C0^H k)}.
inline std::pair<MatC, MatC> adjoint_pair(const MatC& c0, const MatC& c1) {
  const Index h = c0.cols();
  MatC k(2 * h, h);
  k.topRows(h) = c1.adjoint();
  k.bottomRows(h) = -c0.adjoint();
  Eigen::HouseholderQR<MatC> qr(k);
  MatC qfull = qr.householderQ() * MatC::Identity(2 * h, 2 * h);
  MatC comp = qfull.rightCols(h).adjoint();  // h x 2h, annihilates range(k)
  return {comp.leftCols(h), comp.rightCols(h)};
}

}  // namespace detail

struct NevanlinnaPair {
  Index h = 0;
  MatC c0, c1;  // constant form, upper half-plane branch, rows orthonormal
  std::function<std::pair<MatC, MatC>(cx)> fn;  // holomorphic form, both planes
  bool is_constant = true;
  std::string name;

  static NevanlinnaPair constant(MatC c0_, MatC c1_, std::string name_ = "") {
    if (c0_.rows() != c1_.rows() || c0_.cols() != c1_.cols() || c0_.rows() != c0_.cols())
      throw DimensionMismatch("NevanlinnaPair: C0, C1 must be square and same shape");
    NevanlinnaPair p;
    p.h = c0_.cols();
    MatC joint(p.h, 2 * p.h);
    joint.leftCols(p.h) = c0_;
    joint.rightCols(p.h) = c1_;
    Eigen::JacobiSVD<MatC> svd(joint);
    if (svd.singularValues().minCoeff() <
        1e-12 * std::max(1.0, svd.singularValues().maxCoeff()))
      throw RankDeficientPair();
    MatC on = detail::orthonormal_rows(joint);
    p.c0 = on.leftCols(p.h);
    p.c1 = on.rightCols(p.h);
    p.name = std::move(name_);
    return p;
  }

  static NevanlinnaPair holomorphic(Index h_, std::function<std::pair<MatC, MatC>(cx)> fn_,
                                    std::string name_ = "") {
    NevanlinnaPair p;
    p.h = h_;
    p.fn = std::move(fn_);
    p.is_constant = false;
    p.name = std::move(name_);
    return p;
  }

  // tau_0 = (I, 0): the boundary condition Gamma_0 y = 0 of the reference
  // extension A_0.
  static NevanlinnaPair tau0(Index h_) {
    return constant(MatC::Identity(h_, h_), MatC::Zero(h_, h_), "tau0");
  }
  static NevanlinnaPair dirichlet(Index h_) {
    return constant(MatC::Zero(h_, h_), MatC::Identity(h_, h_), "dirichlet");
  }
  // graph of a Hermitian operator Theta: y-data pairs {h, Theta h}
  static NevanlinnaPair graph(const MatC& theta, std::string name_ = "graph") {
    return constant(theta, -MatC::Identity(theta.rows(), theta.cols()), std::move(name_));
  }

  bool self_adjoint_constant() const {
    if (!is_constant) return false;
    const MatC w = c1 * c0.adjoint();
    if ((w - w.adjoint()).norm() > 1e-10 * std::max(1.0, w.norm())) return false;
    const MatC ip = c0 + cx(0, 1) * c1, im = c0 - cx(0, 1) * c1;
    Eigen::JacobiSVD<MatC> sp(ip), sm(im);
    return sp.singularValues().minCoeff() > 1e-10 &&
           sm.singularValues().minCoeff() > 1e-10;
  }

  std::pair<MatC, MatC> at(cx lambda) const {
    if (!is_constant) return fn(lambda);
    if (lambda.imag() >= 0.0 || self_adjoint_constant()) return {c0, c1};
    auto [a0, a1] = detail::adjoint_pair(c0, c1);
    return {a0, a1};
  }

  // kernel (range) form at lambda: K0 = -C1^*(conj lambda), K1 = C0^*(conj lambda)
  std::pair<MatC, MatC> kernel_at(cx lambda) const {
    auto [c0c, c1c] = at(std::conj(lambda));
    return {-c1c.adjoint(), c0c.adjoint()};
  }
};

inline std::pair<MatC, MatC> pair_to_kernel_form(const NevanlinnaPair& tau, cx lambda) {
  return tau.kernel_at(lambda);
}

struct PairIssue {
  std::string which;
  cx lambda;
  double magnitude;
};

struct PairReport {
  bool valid = true;
  bool constant_self_adjoint = false;
  std::vector<PairIssue> issues;
};

inline PairReport validate_pair(const NevanlinnaPair& tau, const std::vector<cx>& probes) {
  PairReport rep;
  rep.constant_self_adjoint = tau.self_adjoint_constant();
  for (cx l : probes) {
    if (l.imag() == 0.0) continue;
    auto [c0, c1] = tau.at(l);
    MatC joint(c0.rows(), 2 * c0.cols());
    joint.leftCols(c0.cols()) = c0;
    joint.rightCols(c1.cols()) = c1;
    Eigen::JacobiSVD<MatC> svd(joint);
    if (svd.singularValues().minCoeff() <
        1e-12 * std::max(1.0, svd.singularValues().maxCoeff())) {
      rep.valid = false;
      rep.issues.push_back({"rank", l, svd.singularValues().minCoeff()});
      continue;
    }
    const double sgn = l.imag() > 0 ? 1.0 : -1.0;
    const MatC w = c1 * c0.adjoint();
    const MatC imw = (w - w.adjoint()) / cx(0, 2);
    Eigen::SelfAdjointEigenSolver<MatC> es(sgn * imw);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, imw.norm())) {
      rep.valid = false;
      rep.issues.push_back({"positivity", l, es.eigenvalues().minCoeff()});
    }
    Eigen::JacobiSVD<MatC> inv(MatC(c0 - cx(0, sgn) * c1));
    if (inv.singularValues().minCoeff() < 1e-10) {
      rep.valid = false;
      rep.issues.push_back({"invertibility", l, inv.singularValues().minCoeff()});
    }
    auto [d0, d1] = tau.at(std::conj(l));
    const MatC sym = c1 * d0.adjoint() - c0 * d1.adjoint();
    if (sym.norm() > 1e-9 * std::max(1.0, joint.norm())) {
      rep.valid = false;
      rep.issues.push_back({"symmetry", l, sym.norm()});
    }
  }
  return rep;
}

inline void ensure_valid_pair(const NevanlinnaPair& tau, const std::vector<cx>& probes) {
  PairReport rep = validate_pair(tau, probes);
  if (!rep.valid) {
    const auto& i = rep.issues.front();
    if (i.which == "rank") throw RankDeficientPair();
    throw NevanlinnaViolation(i.which, i.lambda);
  }
}

struct CharMatrix {
  cx lambda{};
  MatC omega;  // 2nd x 2nd
  enum class Route { ViaBlocks, ViaKrein } route = Route::ViaBlocks;
};

inline CharMatrix omega0(const WeylMatrix& w) {
  const Index nd = w.nd;
  MatC o = MatC::Zero(2 * nd, 2 * nd);
  o.topLeftCorner(nd, nd) = w.m;
  o.topRightCorner(nd, nd) = -0.5 * MatC::Identity(nd, nd);
  o.bottomLeftCorner(nd, nd) = -0.5 * MatC::Identity(nd, nd);
  return {w.lambda, std::move(o), CharMatrix::Route::ViaBlocks};
}

namespace detail {

// (C0 - C1 M)^{-1}, guarded.
inline MatC resonance_inverse(const MatC& c0, const MatC& c1, const MatC& m, cx lambda) {
  const MatC t = c0 - c1 * m;
  Eigen::JacobiSVD<MatC> svd(t);
  if (svd.singularValues().minCoeff() <
      1e-12 * std::max(1.0, svd.singularValues().maxCoeff()))
    throw BoundaryResonance(lambda);
  return t.partialPivLu().solve(MatC::Identity(t.rows(), t.cols()));
}

}  // namespace detail

inline CharMatrix omega_tau_blocks(const NevanlinnaPair& tau, const WeylMatrix& w) {
  if (tau.h != w.h()) throw DimensionMismatch("omega_tau_blocks: pair/triplet size mismatch");
  const Index nd = w.nd, h = w.h();
  auto [c0, c1] = tau.at(w.lambda);
  const MatC m = w.full();
  const MatC inv = detail::resonance_inverse(c0, c1, m, w.lambda);
  const MatC w1 = m * inv * c0;
  const MatC w2 = -0.5 * MatC::Identity(h, h) - m * inv * c1;
  const MatC w3 = 0.5 * MatC::Identity(h, h) - inv * c0;
  const MatC w4 = inv * c1;
  MatC o(2 * nd, 2 * nd);
  o.topLeftCorner(nd, nd) = w1.topLeftCorner(nd, nd);
  o.topRightCorner(nd, nd) = w2.topLeftCorner(nd, nd);
  o.bottomLeftCorner(nd, nd) = w3.topLeftCorner(nd, nd);
  o.bottomRightCorner(nd, nd) = w4.topLeftCorner(nd, nd);
  return {w.lambda, std::move(o), CharMatrix::Route::ViaBlocks};
}

// S(lambda): tilde-initial data of Z_0, also the defect-to-boundary map of the
// Krein-type formula.
inline MatC S_matrix(const WeylMatrix& w) {
  const Index nd = w.nd;
  if (w.kind == TripletKind::MinimalSingular) {
    MatC s(2 * nd, nd);
    s.topRows(nd) = -w.m;
    s.bottomRows(nd) = MatC::Identity(nd, nd);
    return s;
  }
  MatC s = MatC::Zero(2 * nd, 2 * nd);
  s.topLeftCorner(nd, nd) = -w.m;
  s.topRightCorner(nd, nd) = -w.m2;
  s.bottomLeftCorner(nd, nd) = MatC::Identity(nd, nd);
  return s;
}

// S^*(conj lambda), assembled from the symmetry M(conj lambda) = M^*(lambda).
inline MatC S_conj_adjoint(const WeylMatrix& w) {
  const Index nd = w.nd;
  if (w.kind == TripletKind::MinimalSingular) {
    MatC s(nd, 2 * nd);
    s.leftCols(nd) = -w.m;
    s.rightCols(nd) = MatC::Identity(nd, nd);
    return s;
  }
  MatC s = MatC::Zero(2 * nd, 2 * nd);
  s.topLeftCorner(nd, nd) = -w.m;
  s.topRightCorner(nd, nd) = MatC::Identity(nd, nd);
  s.bottomLeftCorner(nd, nd) = -w.m3;
  return s;
}

inline CharMatrix omega_tau_krein(const NevanlinnaPair& tau, const WeylMatrix& w) {
  if (tau.h != w.h()) throw DimensionMismatch("omega_tau_krein: pair/triplet size mismatch");
  auto [c0, c1] = tau.at(w.lambda);
  const MatC m = w.full();
  const MatC inv = detail::resonance_inverse(c0, c1, m, w.lambda);
  const MatC tau_plus_m_inv = -inv * c1;  // (tau + M)^{-1}
  MatC o = omega0(w).omega - S_matrix(w) * tau_plus_m_inv * S_conj_adjoint(w);
  return {w.lambda, std::move(o), CharMatrix::Route::ViaKrein};
}

// U_tau = (u_2tau  u_1tau) with u_jtau = (-1)^{j-1} Z_0 (C0-C1M)^{-1} Cj^.
inline SolutionFrame u_tau_solutions(const NevanlinnaPair& tau, const WeylMatrix& w,
                                     const SolutionFrame& z0) {
  if (tau.h != w.h()) throw DimensionMismatch("u_tau_solutions: pair/triplet size mismatch");
  const Index nd = w.nd;
  auto [c0, c1] = tau.at(w.lambda);
  const MatC inv = detail::resonance_inverse(c0, c1, w.full(), w.lambda);
  const MatC hat_c2 = c0.leftCols(nd), hat_c1 = c1.leftCols(nd);
  MatC x(w.h(), 2 * nd);
  x.leftCols(nd) = -(inv * hat_c2);  // u_2tau
  x.rightCols(nd) = inv * hat_c1;    // u_1tau
  return z0.right_multiplied(x);
}

// Boundary-condition residual of the defining conditions of u_jtau, evaluated
// from frame data at 0 (and at b in the regular case).
inline double u_tau_bc_residual(const NevanlinnaPair& tau, const WeylMatrix& w,
                                const SolutionFrame& u) {
  const Index nd = w.nd;
  auto [c0, c1] = tau.at(w.lambda);
  const MatC hat_c2 = c0.leftCols(nd), hat_c1 = c1.leftCols(nd);
  auto [u1_0, u2_0] = u.eval_split(u.grid.front());
  MatC lhs = hat_c1 * u1_0 + hat_c2 * u2_0;
  if (w.kind == TripletKind::Regular) {
    const MatC cp0 = c0.rightCols(nd), cp1 = c1.rightCols(nd);
    auto [u1_b, u2_b] = u.eval_split(u.grid.back());
    lhs += cp0 * u2_b - cp1 * u1_b;
  }
  MatC rhs(w.h(), 2 * nd);
  rhs.leftCols(nd) = -hat_c2;
  rhs.rightCols(nd) = hat_c1;
  return (lhs - rhs).norm();
}

struct QuadratureConfig {
  double points_per_unit = 50.0;
  double min_points = 401;
  double tail_tol = 1e-6;
};

// integral of U^*(t,lambda) U(t,mu) dt over the stored grid, with tail estimate.
struct FrameGram {
  MatC value;
  double tail = 0.0;
};

inline FrameGram frame_gram(const SolutionFrame& ul, const SolutionFrame& um) {
  if (ul.grid.size() != um.grid.size())
    throw DimensionMismatch("frame_gram: frames on different grids");
  const Index d = ul.layout.d;
  std::vector<MatC> samples(ul.grid.size());
  std::vector<double> mag(ul.grid.size());
  for (size_t i = 0; i < ul.grid.size(); ++i) {
    const MatC a = ul.frames[i].topRows(d), b = um.frames[i].topRows(d);
    samples[i] = a.adjoint() * b;
    mag[i] = samples[i].norm();
  }
  FrameGram g;
  g.value = simpson(ul.grid, samples);
  g.tail = decay_tail_estimate(ul.grid, mag);
  return g;
}

// beta(lambda) = ( -(K1+MK0)^{-1} M |_{C^nd}   (K1+MK0)^{-1} |_{C^nd} )
inline MatC beta_factor(const NevanlinnaPair& tau, const WeylMatrix& w) {
  const Index nd = w.nd;
  auto [k0, k1] = tau.kernel_at(w.lambda);
  const MatC m = w.full();
  const MatC t = k1 + m * k0;
  Eigen::JacobiSVD<MatC> svd(t);
  if (svd.singularValues().minCoeff() <
      1e-12 * std::max(1.0, svd.singularValues().maxCoeff()))
    throw BoundaryResonance(w.lambda);
  const MatC tinv = t.partialPivLu().solve(MatC::Identity(t.rows(), t.cols()));
  MatC b(tau.h, 2 * nd);
  b.leftCols(nd) = -(tinv * m).leftCols(nd);
  b.rightCols(nd) = tinv.leftCols(nd);
  return b;
}

struct IdentityResidual {
  double residual = 0.0;
  double quadrature_tail = 0.0;
  double k_term_norm = 0.0;
};

// || Omega(mu) - Omega^*(lambda) - (mu - conj lambda) int U^*(.,lambda) U(.,mu)
//    - beta^*(lambda) (K0^*(lambda) K1(mu) - K1^*(lambda) K0(mu)) beta(mu) ||
inline IdentityResidual omega_identity_residual(const NevanlinnaPair& tau,
                                                const WeylMatrix& wl, const WeylMatrix& wm,
                                                const SolutionFrame& ul,
                                                const SolutionFrame& um,
                                                double tail_tol = 1e-6) {
  if (wl.lambda.imag() == 0.0 || wm.lambda.imag() == 0.0) throw RealLambdaUnsupported();
  const CharMatrix ol = omega_tau_blocks(tau, wl);
  const CharMatrix om = omega_tau_blocks(tau, wm);
  const FrameGram gram = frame_gram(ul, um);
  // the tail matters only when the integral is a truncation of [0, infinity)
  if (wl.kind == TripletKind::MinimalSingular && gram.tail > tail_tol)
    throw QuadratureNotConverged(gram.tail);

  auto [k0l, k1l] = tau.kernel_at(wl.lambda);
  auto [k0m, k1m] = tau.kernel_at(wm.lambda);
  const MatC bl = beta_factor(tau, wl);
  const MatC bm = beta_factor(tau, wm);
  const MatC kterm =
      bl.adjoint() * (k0l.adjoint() * k1m - k1l.adjoint() * k0m) * bm;

  const cx factor = wm.lambda - std::conj(wl.lambda);
  const MatC lhs = om.omega - ol.omega.adjoint() - factor * gram.value - kterm;
  const double tail = wl.kind == TripletKind::MinimalSingular ? gram.tail : 0.0;
  return {lhs.norm(), tail, kterm.norm()};
}

struct GapResult {
  MatC gap;
  double min_eigenvalue = 0.0;
  double norm = 0.0;
  double quadrature_tail = 0.0;
};

// Im Omega(mu)/Im mu - int U^* U dt: positive semidefinite, zero exactly for
// constant self-adjoint pairs.
inline GapResult nevanlinna_gap(const NevanlinnaPair& tau, const WeylMatrix& w,
                                const SolutionFrame& u, double tail_tol = 1e-6) {
  if (w.lambda.imag() == 0.0) throw RealLambdaUnsupported();
  const CharMatrix o = omega_tau_blocks(tau, w);
  const FrameGram gram = frame_gram(u, u);
  if (w.kind == TripletKind::MinimalSingular && gram.tail > tail_tol)
    throw QuadratureNotConverged(gram.tail);
  const MatC im_omega = (o.omega - o.omega.adjoint()) / cx(0, 2);
  GapResult res;
  res.gap = im_omega / w.lambda.imag() - gram.value;
  res.gap = 0.5 * (res.gap + res.gap.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<MatC> es(res.gap);
  res.min_eigenvalue = es.eigenvalues().minCoeff();
  res.norm = res.gap.norm();
  res.quadrature_tail = w.kind == TripletKind::MinimalSingular ? gram.tail : 0.0;
  return res;
}

}  // namespace weylkit
