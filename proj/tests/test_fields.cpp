#include "rigidity/fields.hpp"
#include "rigidity/quadrature.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace rigidity;

namespace {

// Smooth test tensor with hand-built jets (products of sines and polynomials).
SymJet<3> wave_tensor(const Vec<3>& x) {
  SymJet<3> h;
  const auto X = ScalarJet<3>::coordinate(x, 0);
  const auto Y = ScalarJet<3>::coordinate(x, 1);
  const auto Z = ScalarJet<3>::coordinate(x, 2);
  auto sinj = [](const ScalarJet<3>& a) { return compose(a, std::sin(a.value), std::cos(a.value), -std::sin(a.value)); };
  h.set_component(0, 0, sinj(X + 2.0 * Y));
  h.set_component(0, 1, X * Z + 0.3);
  h.set_component(0, 2, sinj(Z) * Y);
  h.set_component(1, 1, exp(0.5 * X));
  h.set_component(1, 2, Y * Y - Z);
  h.set_component(2, 2, sinj(X * Y + Z));
  return h;
}

double max_cov_error(int count) {
  auto sp = BackgroundSpace<3>::sphere();
  auto dom = DomainSpec<3>::sphere_cap(pi / 3);
  Grid<3> grid = grid_for_domain(dom, count);
  auto field = sample_tensor(grid, [](const Vec<3>& x) { return wave_tensor(x).v; });
  auto cov = covariant_derivative(field, sp);
  const ChartBall<3> b = dom.chart_ball();
  double err = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Vec<3> x = grid.node(p);
    if ((x - b.center).norm() > b.radius) continue;
    const SymJet<3> e = wave_tensor(x);
    const Rank3<3> exact = covariant_gradient(e.v, e.d, sp.connection_at(x));
    for (int k = 0; k < 3; ++k) err = std::max(err, (exact[k] - cov[p][k]).cwiseAbs().maxCoeff());
  }
  return err;
}

}  // namespace

TEST(Grid, RejectsTooFewNodes) {
  EXPECT_THROW(Grid<3>::cube(Vec<3>::Zero(), 1.0, 6), SizeError);
  EXPECT_NO_THROW(Grid<3>::cube(Vec<3>::Zero(), 1.0, 7));
}

TEST(Grid, HalfCellOffsets) {
  auto g = Grid<3>::cube(Vec<3>::Zero(), 1.0, 8);
  EXPECT_NEAR(g.node(0)[0], -1.0 + 0.125, 1e-15);
  EXPECT_NEAR(g.node(g.size() - 1)[2], 1.0 - 0.125, 1e-15);
  EXPECT_EQ(g.edge_nodes().size(), 6u * 64u);
}

TEST(FiniteDifference, ExactOnQuarticPolynomials) {
  auto g = Grid<3>::cube(Vec<3>(0.2, -0.1, 0.0), 1.0, 9);
  auto f = [](const Vec<3>& x) { return std::pow(x[0], 4) + x[0] * x[1] * x[1] * x[2] - 3 * x[2] * x[2] + x[1]; };
  auto s = sample_scalar(g, f);
  GridScalarJetField<3> jets(g, s.values);
  for (std::size_t p = 0; p < g.size(); ++p) {
    const Vec<3> x = g.node(p);
    const auto j = jets.at_node(p);
    EXPECT_NEAR(j.grad[0], 4 * std::pow(x[0], 3) + x[1] * x[1] * x[2], 1e-10);
    EXPECT_NEAR(j.grad[2], x[0] * x[1] * x[1] - 6 * x[2], 1e-10);
    EXPECT_NEAR(j.hess(0, 0), 12 * x[0] * x[0], 1e-9);
    EXPECT_NEAR(j.hess(1, 2), 2 * x[0] * x[1], 1e-9);
    EXPECT_NEAR(j.hess(1, 1), 2 * x[0] * x[2], 1e-9);
  }
}

TEST(FiniteDifference, InterpolationIsExactForQuintics) {
  auto g = Grid<3>::cube(Vec<3>::Zero(), 1.0, 12);
  auto f = [](const Vec<3>& x) { return std::pow(x[0], 5) - x[1] * std::pow(x[2], 3) + 2.0; };
  auto s = sample_scalar(g, f);
  for (const Vec<3>& x : {Vec<3>(0.11, -0.73, 0.52), Vec<3>(-0.99, 0.98, 0.0)})
    EXPECT_NEAR(interpolate<3>(g, s.values, x), f(x), 1e-12);
}

TEST(CovariantDerivative, ConstantScalarAndFlatConstantTensor) {
  auto flat = BackgroundSpace<3>::flat();
  auto g = Grid<3>::cube(Vec<3>::Zero(), 1.0, 8);
  auto h = sample_tensor(g, [](const Vec<3>&) { return Mat<3>(Mat<3>::Identity() * 0.3); });
  for (const auto& d : covariant_derivative(h, flat))
    for (int k = 0; k < 3; ++k) EXPECT_LT(d[k].norm(), 1e-12);
  auto c = sample_scalar(g, [](const Vec<3>&) { return 2.5; });
  for (const auto& m : covariant_hessian(c, BackgroundSpace<3>::sphere())) EXPECT_LT(m.norm(), 1e-12);
}

TEST(CovariantDerivative, FourthOrderConvergence) {
  const double e1 = max_cov_error(24), e2 = max_cov_error(32), e3 = max_cov_error(48);
  const std::vector<double> h{1.0 / 24, 1.0 / 32, 1.0 / 48}, e{e1, e2, e3};
  const auto fit = fit_loglog(h, e);
  EXPECT_GE(fit.slope, 3.7) << e1 << " " << e2 << " " << e3;
}

TEST(CovariantDerivative, HessianOfCosineDistance) {
  // ∇̄²cos r = -cos r ḡ; checked against the closed form in the polar chart.
  auto sp = BackgroundSpace<3>::sphere(ChartKind::Polar);
  auto run = [&](int n) {
    Grid<3> g(Vec<3>(0.3, 0.4, 0.0), Vec<3>(1.2, 2.6, 2.0), {n, n, n});
    auto lam = sample_scalar(g, [](const Vec<3>& x) { return std::cos(x[0]); });
    auto hs = covariant_hessian(lam, sp);
    double err = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
      const Vec<3> x = g.node(p);
      err = std::max(err, (hs[p] + std::cos(x[0]) * sp.metric_at(x)).cwiseAbs().maxCoeff());
    }
    return err;
  };
  const double a = run(16), b = run(32);
  EXPECT_LT(b, 1e-6);
  EXPECT_GT(std::log2(a / b), 3.7);
}

TEST(Quadrature, HemisphereVolumeAndArea) {
  auto sp = BackgroundSpace<3>::sphere();
  auto dom = DomainSpec<3>::hemisphere();
  auto vol = ball_volume_rule(sp, dom);
  EXPECT_NEAR(integrate(vol, [](std::size_t) { return 1.0; }), pi * pi, 1e-8);
  auto cap = DomainSpec<3>::sphere_cap(0.7);
  auto surf = ball_surface_rule(sp, cap);
  EXPECT_NEAR(integrate(surf, [](std::size_t) { return 1.0; }), cap.closed_form_boundary_area(), 1e-8);
  EXPECT_NEAR(integrate(ball_volume_rule(sp, cap), [](std::size_t) { return 1.0; }), cap.closed_form_volume(), 1e-8);
}

TEST(Quadrature, UnitBallSurface) {
  auto flat = BackgroundSpace<3>::flat();
  auto surf = ball_surface_rule(flat, DomainSpec<3>::euclidean_ball(1.0));
  EXPECT_NEAR(integrate(surf, [](std::size_t) { return 1.0; }), 4 * pi, 1e-12);
}

TEST(Quadrature, CosineOverCaps) {
  auto sp = BackgroundSpace<3>::sphere();
  for (double delta : {pi / 2, pi / 4}) {
    auto dom = DomainSpec<3>::sphere_cap(delta);
    auto vol = ball_volume_rule(sp, dom);
    auto lam = static_potential_field(sp, dom, PotentialKind::SphereCos);
    const double got = integrate(vol, [&](std::size_t i) { return lam(vol.nodes[i]); });
    // 1-D oracle on the radial profile.
    const double want =
        4 * pi * integrate_1d([](double t) { return std::cos(t) * std::sin(t) * std::sin(t); }, 0.0, delta);
    EXPECT_NEAR(got, want, 1e-9);
    if (delta == pi / 2) {
      EXPECT_NEAR(got, 4 * pi / 3, 1e-9);
    }
  }
}

TEST(Quadrature, BoxCubicsExact) {
  auto flat = BackgroundSpace<3>::flat();
  auto rule = box_volume_rule(flat, Vec<3>(0, -1, 0.5), Vec<3>(1, 2, 1.5), 2);
  const double got = integrate(rule, [&](std::size_t i) {
    const Vec<3> x = rule.nodes[i];
    return x[0] * x[0] * x[1] + std::pow(x[2], 3) - x[0] * x[1] * x[2];
  });
  // ∫x²y = (1/3)(3/2)(1) ; ∫z³ = 1*3*((1.5^4-0.5^4)/4); ∫xyz = (1/2)(3/2)(1)
  const double want = (1.0 / 3) * 1.5 + 3.0 * (std::pow(1.5, 4) - std::pow(0.5, 4)) / 4 - 0.5 * 1.5 * 1.0;
  EXPECT_NEAR(got, want, 1e-13);
}

TEST(Quadrature, DeterministicAcrossWorkerCounts) {
  auto sp = BackgroundSpace<3>::sphere();
  auto vol = ball_volume_rule(sp, DomainSpec<3>::hemisphere());
  auto f = [&](std::size_t i) { return std::sin(3 * vol.nodes[i][0]) + vol.nodes[i].squaredNorm(); };
  setenv("RIGIDITYLAB_THREADS", "1", 1);
  const double a = integrate(vol, f);
  setenv("RIGIDITYLAB_THREADS", "7", 1);
  const double b = integrate(vol, f);
  unsetenv("RIGIDITYLAB_THREADS");
  EXPECT_EQ(a, b);
}

TEST(Quadrature, ShapeMismatch) {
  auto flat = BackgroundSpace<3>::flat();
  auto vol = ball_volume_rule(flat, DomainSpec<3>::euclidean_ball(1.0), {4, 4, 8});
  std::vector<double> wrong(3, 1.0);
  EXPECT_THROW(integrate_volume<3>(wrong, vol), ShapeError);
}

TEST(Norms, ZeroAndScaledIdentity) {
  auto flat = BackgroundSpace<3>::flat();
  auto dom = DomainSpec<3>::euclidean_ball(1.0);
  auto vol = ball_volume_rule(flat, dom);
  std::vector<Vec<3>> pts{Vec<3>(0.1, 0.2, 0.3), Vec<3>(-0.5, 0, 0)};
  auto zero = grid_norms<3>(flat, [](const Vec<3>&) { return SymJet<3>{}; }, pts, vol);
  EXPECT_EQ(zero.c0, 0.0);
  EXPECT_EQ(zero.l2_h, 0.0);
  const double c = 0.2;
  auto scaled = [&](double s) {
    return grid_norms<3>(flat, [&](const Vec<3>&) {
      SymJet<3> j;
      j.v = s * c * Mat<3>::Identity();
      return j;
    }, pts, vol);
  };
  const auto n1 = scaled(1.0);
  EXPECT_NEAR(n1.c0, c * std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(n1.l2_h * n1.l2_h, 3 * c * c * 4 * pi / 3, 1e-12);
  const auto n3 = scaled(-3.0);
  EXPECT_NEAR(n3.c0, 3 * n1.c0, 1e-15);
  EXPECT_NEAR(n3.l2_tr, 3 * n1.l2_tr, 1e-12);
}
