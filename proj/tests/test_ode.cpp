#include <catch2/catch.hpp>

#include "oracles.hpp"

using namespace weylkit;

namespace {
const DiffExpr kFree = free_expr(1, 1, Endpoint::regular(1.0));
}

TEST_CASE("free frame at lambda=0: y''=0 flow") {
  SolutionFrame fr =
      integrate_frame(kFree, cx(0, 0), 0.0, 1.0, MatC::Identity(2, 2));
  for (double t : {0.0, 0.3, 0.7, 1.0}) {
    MatC want(2, 2);
    want << 1, t, 0, 1;
    CHECK((fr.eval(t) - want).norm() < 1e-11);
  }
}

TEST_CASE("free frame at lambda=-1: cosh/sinh flow") {
  // dense output between accepted steps is cubic Hermite, a little looser
  // than the solution values at the recorded points themselves
  SolutionFrame fr =
      integrate_frame(kFree, cx(-1, 0), 0.0, 1.0, MatC::Identity(2, 2));
  for (double t : {0.25, 0.8, 1.0}) {
    MatC want(2, 2);
    want << std::cosh(t), std::sinh(t), std::sinh(t), std::cosh(t);
    CHECK((fr.eval(t) - want).norm() < 5e-9);
  }
  SolutionFrame on_grid = integrate_on_grid(kFree, cx(-1, 0), uniform_grid(0, 1, 5),
                                            MatC::Identity(2, 2), false, {});
  MatC want(2, 2);
  want << std::cosh(1.0), std::sinh(1.0), std::sinh(1.0), std::cosh(1.0);
  CHECK((on_grid.frames.back() - want).norm() < 1e-10);
}

TEST_CASE("backward after forward run returns the initial frame") {
  const cx lambda(0.7, 1.3);
  MatC init = MatC::Random(2, 2);
  SolutionFrame fwd = integrate_frame(kFree, lambda, 0.0, 1.0, init);
  SolutionFrame bwd = integrate_frame(kFree, lambda, 1.0, 0.0, fwd.eval(1.0));
  CHECK((bwd.eval(0.0) - init).norm() < 1e-9);
}

TEST_CASE("canonical solutions start at the tilde identity") {
  const cx lambda(2.0, 0.5);
  SolutionFrame y0 = canonical_solutions(kFree, lambda, {0.0, 0.5, 1.0});
  CHECK((y0.layout.tilde(y0.eval(0.0)) - MatC::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("canonical solutions of the free expression") {
  SolutionFrame flat = canonical_solutions(kFree, cx(0, 0), uniform_grid(0, 1, 11));
  for (double t : {0.2, 0.9}) {
    CHECK(std::abs(flat.value(t)(0, 0) - 1.0) < 1e-11);  // c(t) = 1
    CHECK(std::abs(flat.value(t)(0, 1) - t) < 1e-11);    // s(t) = t
  }
  SolutionFrame hyp = canonical_solutions(kFree, cx(-1, 0), uniform_grid(0, 1, 11));
  CHECK(std::abs(hyp.value(1.0)(0, 1) - 1.1752012) < 1e-6);
}

TEST_CASE("Lagrange bracket at 0 is J and stays J for conjugate parameters") {
  const cx lambda(-1, 0);
  SolutionFrame y0 = canonical_solutions(kFree, lambda, uniform_grid(0, 1, 11));
  CHECK((lagrange_bracket(y0, y0, 0.0) - symplectic_j(1)).norm() < 1e-14);
  CHECK((lagrange_bracket(y0, y0, 1.0) - symplectic_j(1)).norm() < 1e-10);
}

TEST_CASE("frame symplectic identity at nonreal lambda") {
  const cx lambda(0.8, 1.4);
  SolutionFrame y = canonical_solutions(kFree, lambda, uniform_grid(0, 1, 11));
  SolutionFrame z = canonical_solutions(kFree, std::conj(lambda), uniform_grid(0, 1, 11));
  for (double t : {0.3, 0.6, 1.0})
    CHECK((lagrange_bracket(y, z, t) - symplectic_j(1)).norm() < 1e-10);
}

TEST_CASE("bracket drifts for non-conjugate parameter pairs") {
  SolutionFrame y = canonical_solutions(kFree, cx(0, 1), uniform_grid(0, 1, 11));
  SolutionFrame z = canonical_solutions(kFree, cx(0, 2), uniform_grid(0, 1, 11));
  const double drift =
      (lagrange_bracket(y, z, 1.0) - lagrange_bracket(y, z, 0.0)).norm();
  CHECK(drift > 1e-3);
}

TEST_CASE("bracket queries outside the grid are rejected") {
  SolutionFrame y = canonical_solutions(kFree, cx(0, 1), {0.0, 1.0});
  CHECK_THROWS_AS(y.eval(2.0), PointOutsideGrid);
}

TEST_CASE("ratio propagation is invariant under right factors") {
  DiffExpr half = free_expr(1, 1, Endpoint::singular_minimal(5.0));
  const cx lambda(0, 1);
  const MatC bc = half.layout().merge(MatC::Identity(1, 1), MatC::Zero(1, 1));
  MobiusRatio r1 = ratio_propagate(half, lambda, 10.0, 0.0, bc);
  MobiusRatio r2 = ratio_propagate(half, lambda, 10.0, 0.0, bc * cx(3.0, -2.0));
  CHECK((r1.neg_ratio() - r2.neg_ratio()).norm() < 1e-9);
}

TEST_CASE("ratio propagation reaches the limit-point m-function") {
  DiffExpr half = free_expr(1, 1, Endpoint::singular_minimal(5.0));
  const MatC bc = half.layout().merge(MatC::Identity(1, 1), MatC::Zero(1, 1));
  MobiusRatio r = ratio_propagate(half, cx(0, 1), 40.0, 0.0, bc);
  CHECK(std::abs(r.neg_ratio()(0, 0) - oracles::free_m_halfline(cx(0, 1))) < 1e-6);
}

TEST_CASE("ratio propagation with from == to returns the split input") {
  DiffExpr half = free_expr(1, 1, Endpoint::singular_minimal(5.0));
  MatC y1 = MatC::Random(1, 1), y2 = MatC::Random(1, 1);
  const MatC bc = half.layout().merge(y1, y2);
  MobiusRatio r = ratio_propagate(half, cx(0, 1), 7.0, 7.0, bc);
  CHECK((r.a - y1).norm() == 0.0);
  CHECK((r.b - y2).norm() == 0.0);
}

TEST_CASE("tightening tolerances reduces the defect monotonically") {
  double prev = 1.0;
  for (double rt : {1e-6, 1e-8, 1e-10}) {
    IntegratorConfig cfg;
    cfg.rel_tol = rt;
    cfg.abs_tol = rt * 1e-2;
    SolutionFrame fr =
        integrate_frame(kFree, cx(-1, 0), 0.0, 1.0, MatC::Identity(2, 2), cfg);
    MatC want(2, 2);
    want << std::cosh(1.0), std::sinh(1.0), std::sinh(1.0), std::cosh(1.0);
    const double defect = (fr.eval(1.0) - want).norm();
    CHECK(defect < prev);
    prev = defect;
  }
}

TEST_CASE("frame holomorphy: Cauchy-Riemann stencil on the canonical frame") {
  auto frame_at = [&](cx l) {
    return integrate_frame(kFree, l, 0.0, 1.0, MatC::Identity(2, 2)).eval(1.0);
  };
  const double h = 1e-3;
  const cx center(0.4, 0.9);
  const MatC dx = (frame_at(center + h) - frame_at(center - h)) / (2 * h);
  const MatC dy = (frame_at(center + cx(0, h)) - frame_at(center - cx(0, h))) / (2 * h);
  CHECK(0.5 * (dx + cx(0, 1) * dy).norm() < 1e-6);
}
