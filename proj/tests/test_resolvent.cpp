#include <catch2/catch.hpp>

#include "oracles.hpp"

using namespace weylkit;

namespace {
const DiffExpr kFreeReg = free_expr(1, 1, Endpoint::regular(1.0));
const DiffExpr kFreeHalf = free_expr(1, 1, Endpoint::singular_minimal(5.0));

Setting reg_setting() {
  Setting s = Setting::regular(kFreeReg);
  s.quad.min_points = 401;
  return s;
}
Setting half_setting() { return Setting::minimal_singular(kFreeHalf, {5, 10, 20, 40}); }

std::vector<VecC> ones(const GreenKernel& k) {
  return std::vector<VecC>(k.z0.grid.size(), VecC::Ones(1));
}
}  // namespace

TEST_CASE("y_tau frame for tau0 is the negated first canonical block") {
  Setting s = reg_setting();
  const cx l(-1, 0);
  WeylMatrix w = weyl_matrix(s, l);
  SolutionFrame y = y_tau_frame(s, NevanlinnaPair::tau0(2), w, uniform_grid(0, 1, 41));
  for (double t : {0.3, 0.9}) {
    CHECK(std::abs(y.value(t)(0, 0) + std::cosh(t)) < 1e-10);
    CHECK(std::abs(y.value(t)(0, 1)) < 1e-12);
  }
}

TEST_CASE("y_tau frame for the scalar Dirichlet pair on the half-line") {
  Setting s = half_setting();
  const cx l(-1.0, 1e-4);
  WeylMatrix w = weyl_matrix(s, l);
  SolutionFrame y =
      y_tau_frame(s, NevanlinnaPair::dirichlet(1), w, uniform_grid(0, 4, 201));
  for (double t : {0.5, 1.0, 2.0})
    CHECK(std::abs(y.value(t)(0, 0) + std::sinh(t)) < 1e-2);
}

TEST_CASE("y_tau and z0 have a constant bracket at conjugate parameters") {
  Setting s = reg_setting();
  const cx l(0.7, 1.2);
  WeylMatrix w = weyl_matrix(s, l);
  WeylMatrix wc = weyl_matrix(s, std::conj(l));
  const std::vector<double> grid = uniform_grid(0, 1, 41);
  NevanlinnaPair p = NevanlinnaPair::dirichlet(2);
  SolutionFrame z = z0_frame(s.e, w, grid);
  SolutionFrame y = y_tau_frame(s, p, wc, grid);
  const MatC b0 = lagrange_bracket(z, y, 0.0);
  for (double t : {0.4, 1.0})
    CHECK((lagrange_bracket(z, y, t) - b0).norm() < 1e-10);
}

TEST_CASE("Green kernel spot value on the free half-line") {
  Setting s = half_setting();
  GreenKernel k = make_green_kernel(s, NevanlinnaPair::tau0(1), cx(-1, 0));
  const double want = std::exp(-1.0) * std::cosh(0.5);
  CHECK(std::abs(green_eval_triplet(k, 1.0, 0.5)(0, 0) - want) < 1e-6);
  CHECK(std::abs(green_eval_shtraus(k, 1.0, 0.5)(0, 0) - want) < 1e-6);
}

TEST_CASE("kernel symmetry between conjugate parameters") {
  Setting s = half_setting();
  const cx l(0.6, 1.0);
  GreenKernel k = make_green_kernel(s, NevanlinnaPair::dirichlet(1), l);
  // (G(x,t,lambda))^* = G(t,x,conj lambda): right side read off the same frames
  const double x = 1.0, t = 0.5;
  const MatC lhs = green_eval_triplet(k, x, t).adjoint();
  const MatC rhs = k.ytauc.value(t) * k.z0.value(x).adjoint();
  CHECK((lhs - rhs).norm() < 1e-8);
}

TEST_CASE("Dirichlet kernel vanishes at the boundary") {
  Setting s = half_setting();
  GreenKernel k = make_green_kernel(s, NevanlinnaPair::dirichlet(1), cx(0, 1));
  CHECK(std::abs(green_eval_triplet(k, 1e-4, 0.7)(0, 0)) < 1e-3);
  CHECK(std::abs(green_eval_triplet(k, 0.0, 0.7)(0, 0)) < 1e-12);
}

TEST_CASE("route agreement on the regular interval, free and potential") {
  for (bool with_q : {false, true}) {
    DiffExpr e = with_q ? sl_expr(
                              [](double t) {
                                return MatC::Constant(1, 1, 1.0 / (1.0 + t * t));
                              },
                              1, Endpoint::regular(1.0))
                        : kFreeReg;
    Setting s = Setting::regular(e);
    GreenKernel k = make_green_kernel(s, NevanlinnaPair::dirichlet(2), cx(0.8, 1.3));
    double dmax = 0;
    for (double x : {0.1, 0.45, 0.8})
      for (double t : {0.2, 0.55, 0.95})
        dmax = std::max(dmax, (green_eval_triplet(k, x, t) - green_eval_shtraus(k, x, t))
                                  .cwiseAbs()
                                  .maxCoeff());
    CHECK(dmax < 1e-7);
  }
}

TEST_CASE("sgn flip across the diagonal is the canonical jump") {
  Setting s = reg_setting();
  GreenKernel k = make_green_kernel(s, NevanlinnaPair::dirichlet(2), cx(0.5, 1.0));
  const double x = 0.5, eps = 1e-9;
  const MatC above = green_eval_shtraus(k, x, x + eps);
  const MatC below = green_eval_shtraus(k, x, x - eps);
  const MatC want = k.y0.value(x) * k.jmat * k.y0c.value(x).adjoint();
  CHECK((above - below - want).norm() < 1e-6);
}

TEST_CASE("diagonal evaluation is rejected") {
  Setting s = reg_setting();
  GreenKernel k = make_green_kernel(s, NevanlinnaPair::tau0(2), cx(0, 1));
  CHECK_THROWS_AS(green_eval_triplet(k, 0.5, 0.5), DiagonalPoint);
  CHECK_THROWS_AS(green_eval_shtraus(k, 0.5, 0.5), DiagonalPoint);
}

TEST_CASE("Neumann resolvent of the constant source is constant") {
  Setting s = reg_setting();
  NevanlinnaPair t0 = NevanlinnaPair::tau0(2);
  GreenKernel k = make_green_kernel(s, t0, cx(-1, 0));
  ResolventResult r = apply_resolvent(s, k, t0, ones(k));
  double emax = 0;
  for (const auto& y : r.y) emax = std::max(emax, std::abs(y(0) - 1.0));
  CHECK(emax < 1e-6);
  CHECK(r.ode_residual < 1e-4);
  CHECK(r.bc_residual < 1e-8);
  CHECK(r.jump_residual < 1e-8);
}

TEST_CASE("Dirichlet resolvent matches the closed-form boundary value problem") {
  Setting s = reg_setting();
  NevanlinnaPair dir = NevanlinnaPair::dirichlet(2);
  GreenKernel k = make_green_kernel(s, dir, cx(-1, 0));
  ResolventResult r = apply_resolvent(s, k, dir, ones(k));
  const size_t mid = r.grid.size() / 2;
  REQUIRE(r.grid[mid] == Approx(0.5));
  CHECK(std::abs(r.y[mid](0) - (1.0 - 1.0 / std::cosh(0.5))) < 1e-6);
  double emax = 0;
  for (size_t i = 0; i < r.grid.size(); ++i) {
    const double x = r.grid[i];
    const double want = 1.0 - std::cosh(x - 0.5) / std::cosh(0.5);
    emax = std::max(emax, std::abs(r.y[i](0) - want));
  }
  CHECK(emax < 1e-6);
}

TEST_CASE("resolvent application is linear") {
  Setting s = reg_setting();
  NevanlinnaPair dir = NevanlinnaPair::dirichlet(2);
  GreenKernel k = make_green_kernel(s, dir, cx(0.4, 0.9));
  const size_t npts = k.z0.grid.size();
  std::vector<VecC> f(npts), g(npts), fg(npts);
  for (size_t i = 0; i < npts; ++i) {
    const double t = k.z0.grid[i];
    f[i] = VecC::Constant(1, cx(std::sin(3 * t), 0.2));
    g[i] = VecC::Constant(1, cx(t * t, -0.1 * t));
    fg[i] = f[i] + g[i];
  }
  ResolventResult rf = apply_resolvent(s, k, dir, f);
  ResolventResult rg = apply_resolvent(s, k, dir, g);
  ResolventResult rfg = apply_resolvent(s, k, dir, fg);
  double dmax = 0;
  for (size_t i = 0; i < npts; ++i)
    dmax = std::max(dmax, (rfg.y[i] - rf.y[i] - rg.y[i]).norm());
  CHECK(dmax < 1e-12);
}

TEST_CASE("Krein correction vanishes for tau0") {
  Setting s = reg_setting();
  NevanlinnaPair t0 = NevanlinnaPair::tau0(2);
  GreenKernel k0 = make_green_kernel(s, t0, cx(-1, 0));
  ResolventResult base = apply_resolvent(s, k0, t0, ones(k0));
  ResolventResult kr = krein_resolvent(s, t0, k0, ones(k0));
  double dmax = 0;
  for (size_t i = 0; i < base.y.size(); ++i)
    dmax = std::max(dmax, (base.y[i] - kr.y[i]).norm());
  CHECK(dmax == 0.0);
}

TEST_CASE("Krein route agrees with the kernel route") {
  Setting s = reg_setting();
  const cx l(-1, 0);
  GreenKernel k0 = make_green_kernel(s, NevanlinnaPair::tau0(2), l);

  SECTION("Dirichlet against the closed form") {
    ResolventResult kr = krein_resolvent(s, NevanlinnaPair::dirichlet(2), k0, ones(k0));
    const size_t mid = kr.grid.size() / 2;
    CHECK(std::abs(kr.y[mid](0) - (1.0 - 1.0 / std::cosh(0.5))) < 1e-6);
    CHECK(kr.bc_residual < 1e-8);
  }

  SECTION("random self-adjoint pair") {
    std::srand(31);
    MatC a = MatC::Random(2, 2);
    NevanlinnaPair p = NevanlinnaPair::graph(0.5 * (a + a.adjoint()).eval());
    GreenKernel kp = make_green_kernel(s, p, l);
    ResolventResult direct = apply_resolvent(s, kp, p, ones(kp));
    ResolventResult kr = krein_resolvent(s, p, k0, ones(k0));
    double dmax = 0;
    for (size_t i = 0; i < direct.y.size(); ++i)
      dmax = std::max(dmax, (direct.y[i] - kr.y[i]).norm());
    CHECK(dmax < 1e-6);
  }
}

TEST_CASE("spectral probe of the free Dirichlet problem") {
  Setting s = reg_setting();
  NevanlinnaPair dir = NevanlinnaPair::dirichlet(2);
  // det T is proportional to sin(w)/w; zeros at k^2 pi^2
  for (int k = 1; k <= 3; ++k) {
    SpectralProbe p = spectral_probe(s, dir, cx(k * k * M_PI * M_PI, 0));
    CHECK(p.sigma_min < 1e-8 * p.t_norm);
  }
  SpectralProbe p0 = spectral_probe(s, dir, cx(0, 0));
  CHECK(std::abs(std::abs(p0.t.determinant()) - 1.0) < 1e-10);  // s(1,0) = 1
  SpectralProbe pmid = spectral_probe(s, dir, cx(50.0, 0));
  CHECK(pmid.sigma_min > 1e-3);
}

TEST_CASE("eigenvalue scan, Dirichlet and Neumann") {
  Setting s = reg_setting();
  const auto dir = eig_scan(s, NevanlinnaPair::dirichlet(2), 1.0, 100.0);
  REQUIRE(dir.size() == 3);
  for (int k = 1; k <= 3; ++k)
    CHECK(std::abs(dir[k - 1] - k * k * M_PI * M_PI) / (k * k * M_PI * M_PI) < 1e-6);

  const auto neu = eig_scan(s, NevanlinnaPair::tau0(2), -1.0, 50.0);
  REQUIRE(neu.size() == 3);
  CHECK(std::abs(neu[0]) < 1e-6);
  CHECK(std::abs(neu[1] - M_PI * M_PI) / (M_PI * M_PI) < 1e-6);
  CHECK(std::abs(neu[2] - 4 * M_PI * M_PI) / (4 * M_PI * M_PI) < 1e-6);

  CHECK(eig_scan(s, NevanlinnaPair::dirichlet(2), 200.0, 210.0).empty());
}

TEST_CASE("eigenvalue scan for the matrix potential diag(0,1)") {
  MatC pot(2, 2);
  pot << 0, 0, 0, 1;
  Setting s =
      Setting::regular(sl_expr([pot](double) { return pot; }, 2, Endpoint::regular(1.0)));
  // the potential splits each free doublet by 1; scan densely enough to see it
  const auto eigs = eig_scan(s, NevanlinnaPair::dirichlet(4), 5.0, 45.0, 400);
  const std::vector<double> want = {M_PI * M_PI, M_PI * M_PI + 1, 4 * M_PI * M_PI,
                                    4 * M_PI * M_PI + 1};
  REQUIRE(eigs.size() == want.size());
  for (size_t i = 0; i < want.size(); ++i)
    CHECK(std::abs(eigs[i] - want[i]) / want[i] < 1e-6);
}

TEST_CASE("resolvent identity for a self-adjoint pair") {
  Setting s = reg_setting();
  NevanlinnaPair dir = NevanlinnaPair::dirichlet(2);
  const cx l(0.5, 1.0), mu(-0.7, -0.6);
  GreenKernel kl = make_green_kernel(s, dir, l);
  GreenKernel kmu = make_green_kernel(s, dir, mu);
  std::vector<VecC> f(kl.z0.grid.size());
  for (size_t i = 0; i < f.size(); ++i)
    f[i] = VecC::Constant(1, std::cos(2 * kl.z0.grid[i]));
  ResolventResult rl = apply_resolvent(s, kl, dir, f);
  ResolventResult rmu = apply_resolvent(s, kmu, dir, f);
  ResolventResult rr = apply_resolvent(s, kl, dir, rmu.y);
  double dmax = 0, fmax = 0;
  for (size_t i = 0; i < f.size(); ++i) {
    dmax = std::max(dmax, (rl.y[i] - rmu.y[i] - (l - mu) * rr.y[i]).norm());
    fmax = std::max(fmax, f[i].norm());
  }
  CHECK(dmax < 1e-6 * fmax);
}
