#pragma once

// Even-order formally self-adjoint differential expression
//
//   l[y] = sum_{k=1..n} (-1)^k (p_{n-k} y^(k))^(k) + p_n y
//
// on [0,b> with Hermitian matrix coefficients p_k(t) and invertible p_0(t),
// rewritten as the first-order system u' = F(t,lambda) u for the stacked
// quasi-derivatives u = (y^[0], ..., y^[2n-1]).  The quasi-derivatives follow
// the usual recurrence
//
//   y^[k]   = y^(k)                         k <= n-1
//   y^[n]   = p_0 y^(n)
//   y^[n+j] = p_j y^(n-j) - (y^[n+j-1])'    j = 1..n,
//
// so that l[y] = y^[2n].  Boundary data live in the two blocks
// y^(1) = (y^[0],...,y^[n-1]) and y^(2) = (y^[2n-1],...,y^[n]) (reversed tail).

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <complex>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "weylkit/errors.hpp"

namespace weylkit {

using cx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using Index = Eigen::Index;

using CoeffSampler = std::function<MatC(double)>;

inline MatC symplectic_j(Index m) {
  MatC j = MatC::Zero(2 * m, 2 * m);
  j.topRightCorner(m, m) = -MatC::Identity(m, m);
  j.bottomLeftCorner(m, m) = MatC::Identity(m, m);
  return j;
}

// Index bookkeeping between the plain stack u = (y^[0..2n-1]) and the
// boundary-block pair (y^(1), y^(2)).
struct FrameLayout {
  Index n = 1;
  Index d = 1;

  Index nd() const { return n * d; }
  Index rows() const { return 2 * n * d; }

  std::pair<MatC, MatC> split(const MatC& u) const {
    if (u.rows() != rows())
      throw DimensionMismatch("frame_split: expected " + std::to_string(rows()) +
                              " rows, got " + std::to_string(u.rows()));
    MatC y1 = u.topRows(nd());
    MatC y2(nd(), u.cols());
    for (Index k = 0; k < n; ++k)
      y2.middleRows(k * d, d) = u.middleRows((2 * n - 1 - k) * d, d);
    return {std::move(y1), std::move(y2)};
  }

  MatC merge(const MatC& y1, const MatC& y2) const {
    if (y1.rows() != nd() || y2.rows() != nd() || y1.cols() != y2.cols())
      throw DimensionMismatch("frame merge: block shapes inconsistent");
    MatC u(rows(), y1.cols());
    u.topRows(nd()) = y1;
    for (Index k = 0; k < n; ++k)
      u.middleRows((2 * n - 1 - k) * d, d) = y2.middleRows(k * d, d);
    return u;
  }

  // (y^(1); y^(2)) stacked, the coordinates all boundary formulas use.
  MatC tilde(const MatC& u) const {
    auto [y1, y2] = split(u);
    MatC t(rows(), u.cols());
    t.topRows(nd()) = y1;
    t.bottomRows(nd()) = y2;
    return t;
  }

  MatC from_tilde(const MatC& t) const {
    if (t.rows() != rows()) throw DimensionMismatch("from_tilde: wrong row count");
    return merge(t.topRows(nd()), t.bottomRows(nd()));
  }
};

struct Endpoint {
  enum class Kind { Regular, SingularMinimal } kind = Kind::Regular;
  double value = 1.0;  // b for Regular, cutoff hint for SingularMinimal

  static Endpoint regular(double b) { return {Kind::Regular, b}; }
  static Endpoint singular_minimal(double hint) { return {Kind::SingularMinimal, hint}; }
  bool is_regular() const { return kind == Kind::Regular; }
};

struct DiffExpr {
  Index n = 1;
  Index d = 1;
  std::vector<CoeffSampler> p;  // p_0 .. p_n, each t -> Hermitian d x d
  Endpoint endpoint_b = Endpoint::regular(1.0);

  double hermiticity_tol = 1e-12;
  double p0_floor = 1e-10;

  FrameLayout layout() const { return {n, d}; }
  Index nd() const { return n * d; }
  Index rows() const { return 2 * n * d; }

  MatC coeff(Index k, double t) const {
    MatC v = p[static_cast<size_t>(k)](t);
    if (v.rows() != d || v.cols() != d)
      throw DimensionMismatch("coefficient sampler p_" + std::to_string(k) +
                              " returned wrong shape");
    return v;
  }
};

// Free expression l[y] = (-1)^n y^(2n) with identity leading coefficient.
inline DiffExpr free_expr(Index n, Index d, Endpoint ep) {
  DiffExpr e;
  e.n = n;
  e.d = d;
  e.endpoint_b = ep;
  Index dd = d;
  e.p.emplace_back([dd](double) { return MatC::Identity(dd, dd); });
  for (Index k = 1; k <= n; ++k)
    e.p.emplace_back([dd](double) { return MatC::Zero(dd, dd); });
  return e;
}

// Sturm-Liouville l[y] = -y'' + q(t) y, scalar or matrix q.
inline DiffExpr sl_expr(std::function<MatC(double)> q, Index d, Endpoint ep) {
  DiffExpr e;
  e.n = 1;
  e.d = d;
  e.endpoint_b = ep;
  Index dd = d;
  e.p.emplace_back([dd](double) { return MatC::Identity(dd, dd); });
  e.p.emplace_back(std::move(q));
  return e;
}

struct ValidationIssue {
  enum class Kind { NonHermitian, SingularLeading } kind;
  Index k;   // coefficient index (NonHermitian)
  double t;  // probe point
  double magnitude;
};

struct ValidationReport {
  bool passed = true;
  std::vector<double> max_hermiticity_defect;  // per coefficient, relative Frobenius
  double min_p0_sigma = 0.0;
  std::vector<ValidationIssue> issues;
};

inline ValidationReport validate_expr(const DiffExpr& e, const std::vector<double>& probe_grid) {
  if (probe_grid.empty()) throw DimensionMismatch("validate_expr: empty probe grid");
  ValidationReport rep;
  rep.max_hermiticity_defect.assign(static_cast<size_t>(e.n) + 1, 0.0);
  rep.min_p0_sigma = std::numeric_limits<double>::infinity();
  for (Index k = 0; k <= e.n; ++k) {
    for (double t : probe_grid) {
      MatC v = e.coeff(k, t);
      double scale = std::max(v.norm(), 1e-300);
      double defect = (v - v.adjoint()).norm() / scale;
      auto& cur = rep.max_hermiticity_defect[static_cast<size_t>(k)];
      cur = std::max(cur, defect);
      if (defect > e.hermiticity_tol) {
        rep.passed = false;
        rep.issues.push_back({ValidationIssue::Kind::NonHermitian, k, t, defect});
      }
      if (k == 0) {
        Eigen::JacobiSVD<MatC> svd(v);
        double smin = svd.singularValues().minCoeff();
        rep.min_p0_sigma = std::min(rep.min_p0_sigma, smin);
        if (smin <= e.p0_floor) {
          rep.passed = false;
          rep.issues.push_back({ValidationIssue::Kind::SingularLeading, 0, t, smin});
        }
      }
    }
  }
  return rep;
}

// F(t,lambda) with u' = F u reproducing l[y] = lambda y on the plain stack u.
inline MatC system_matrix(const DiffExpr& e, double t, cx lambda) {
  const Index n = e.n, d = e.d;
  MatC f = MatC::Zero(2 * n * d, 2 * n * d);

  for (Index k = 0; k + 1 <= n - 1; ++k)
    f.block(k * d, (k + 1) * d, d, d) = MatC::Identity(d, d);

  MatC p0 = e.coeff(0, t);
  Eigen::JacobiSVD<MatC> svd(p0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().minCoeff() <= e.p0_floor) throw SingularLeadingCoefficient(t, svd.singularValues().minCoeff());
  f.block((n - 1) * d, n * d, d, d) = p0.partialPivLu().solve(MatC::Identity(d, d));

  for (Index j = 1; j <= n - 1; ++j) {
    f.block((n - 1 + j) * d, (n - j) * d, d, d) = e.coeff(j, t);
    f.block((n - 1 + j) * d, (n + j) * d, d, d) = -MatC::Identity(d, d);
  }
  f.block((2 * n - 1) * d, 0, d, d) =
      e.coeff(n, t) - lambda * MatC::Identity(d, d);
  return f;
}

}  // namespace weylkit
