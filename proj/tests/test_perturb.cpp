#include "rigidity/perturb.hpp"

#include <gtest/gtest.h>

using namespace rigidity;

namespace {

template <int N>
std::vector<Vec<N>> check_points(const ChartBall<N>& b, int count, std::uint64_t seed) {
  return detail::interior_points(b, count, seed);
}

template <int N>
double l2_distance(const BackgroundSpace<N>& sp, const VolumeRule<N>& rule, const PolyTensorField<N>& a,
                   const PolyTensorField<N>& b) {
  return std::sqrt(integrate(rule, [&](std::size_t i) {
    const Vec<N>& x = rule.nodes[i];
    const Mat<N> d = a.value(x) - b.value(x);
    return inner(d, d, sp.connection_at(x).ginv);
  }));
}

struct Case {
  BackgroundSpace<3> space;
  DomainSpec<3> domain;
};

Case sphere_case() { return {BackgroundSpace<3>::sphere(), DomainSpec<3>::sphere_cap(pi / 3)}; }
Case flat_case() { return {BackgroundSpace<3>::flat(), DomainSpec<3>::euclidean_ball(1.0)}; }

}  // namespace

TEST(PolyTensorField, PotentialPartIsDivergenceFree) {
  auto sp = BackgroundSpace<3>::sphere();
  auto dom = DomainSpec<3>::sphere_cap(pi / 3);
  PolyTensorField<3> f(sp, dom.chart_ball());
  f.potential() = Polynomial<3>::monomial({2, 1, 0}, Vec<3>::Zero(), 0.5);
  f.potential().add(Polynomial<3>::monomial({0, 0, 3}, Vec<3>::Zero(), 0.5, -0.7));
  for (const Vec<3>& x : check_points(dom.chart_ball(), 20, 3)) {
    const SymJet<3> j = f.jet(x);
    const Connection<3> c = sp.connection_at(x);
    EXPECT_LT(divergence<3>(covariant_gradient<3>(j.v, j.d, c), c.ginv).norm(), 1e-10);
  }
}

TEST(PolyTensorField, PotentialPartMatchesAdjointOperator) {
  auto sp = BackgroundSpace<3>::sphere();
  auto dom = DomainSpec<3>::sphere_cap(pi / 3);
  PolyTensorField<3> f(sp, dom.chart_ball());
  f.potential() = Polynomial<3>::monomial({1, 1, 1}, Vec<3>::Zero(), 0.5, 2.0);
  for (const Vec<3>& x : check_points(dom.chart_ball(), 10, 4)) {
    const Mat<3> want = adjoint_DRstar(f.potential().jet(x), sp.connection_at(x), sp.metric_at(x), sp.ricci_factor());
    EXPECT_LT((f.value(x) - want).cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(Projection, ResidualsOnBothBackgrounds) {
  for (const Case& c : {sphere_case(), flat_case()}) {
    const ChartBall<3> b = c.domain.chart_ball();
    auto seed = radial_bump_seed(b, default_seed_tensor<3>());
    const auto res = project_constraints(c.space, c.domain, seed, ConstraintSpec::all());
    EXPECT_GT(res.null_space.cols(), 0);
    EXPECT_GT(res.sigma_gap, 1e3);
    const auto surf = ball_surface_rule(c.space, c.domain, {1, 13, 26});
    const auto r = constraint_residuals<3>(c.space, res.field, check_points(b, 300, 99), surf.geometry);
    EXPECT_LT(r.div, 1e-10);
    EXPECT_LT(r.trace, 1e-10);
    EXPECT_LT(r.tangential, 1e-10);
    EXPECT_GT(res.field.value(b.center).norm(), 1e-3);
  }
}

TEST(Projection, GaugeOnlyKeepsTrace) {
  auto c = sphere_case();
  const ChartBall<3> b = c.domain.chart_ball();
  const auto res = project_constraints(c.space, c.domain, radial_bump_seed(b, Mat<3>(Mat<3>::Identity())),
                                       ConstraintSpec::gauge());
  const auto surf = ball_surface_rule(c.space, c.domain, {1, 13, 26});
  const auto r = constraint_residuals<3>(c.space, res.field, check_points(b, 200, 5), surf.geometry);
  EXPECT_LT(r.div, 1e-10);
  EXPECT_LT(r.tangential, 1e-10);
  EXPECT_GT(r.trace, 1e-3);
}

TEST(Projection, Idempotent) {
  for (const Case& c : {sphere_case(), flat_case()}) {
    const ChartBall<3> b = c.domain.chart_ball();
    const auto once = project_constraints(c.space, c.domain, quadrupole_seed(b), ConstraintSpec::all());
    const auto twice = project_constraints(
        c.space, c.domain, [&](const Vec<3>& x) { return once.field.value(x); }, ConstraintSpec::all());
    const auto rule = ball_volume_rule(c.space, c.domain, {10, 10, 20});
    const double base = l2_distance(c.space, rule, once.field, PolyTensorField<3>(c.space, b));
    EXPECT_LT(l2_distance(c.space, rule, once.field, twice.field), 1e-12 * base);
  }
}

TEST(Projection, OrthogonalToFeasibleDirections) {
  auto c = sphere_case();
  const ChartBall<3> b = c.domain.chart_ball();
  auto seed = radial_bump_seed(b, default_seed_tensor<3>());
  const auto res = project_constraints(c.space, c.domain, seed, ConstraintSpec::all());
  const auto rule = ball_volume_rule(c.space, c.domain, ProjectionOptions{}.fit);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd a(res.null_space.cols());
    for (int k = 0; k < a.size(); ++k) a[k] = g(rng);
    const auto dir = res.feasible_direction(a);
    double ip = 0.0, nd = 0.0, nr = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const Vec<3>& x = rule.nodes[i];
      const Mat<3> gi = c.space.connection_at(x).ginv;
      const Mat<3> r = res.field.value(x) - seed(x), d = dir.value(x);
      ip += rule.weights[i] * inner(r, d, gi);
      nd += rule.weights[i] * inner(d, d, gi);
      nr += rule.weights[i] * inner(r, r, gi);
    }
    EXPECT_LT(std::abs(ip), 1e-9 * std::sqrt(nd * nr));
  }
}

TEST(Projection, Errors) {
  auto c = flat_case();
  const ChartBall<3> b = c.domain.chart_ball();
  EXPECT_THROW(project_constraints(c.space, c.domain, quadrupole_seed(b), ConstraintSpec{}), ConfigError);
  ConstraintSpec bad = ConstraintSpec::all();
  bad.tol_div = 0.0;
  EXPECT_THROW(project_constraints(c.space, c.domain, quadrupole_seed(b), bad), ConfigError);
  auto zero = [](const Vec<3>&) { return Mat<3>(Mat<3>::Zero()); };
  EXPECT_THROW(project_constraints(c.space, c.domain, zero, ConstraintSpec::all()), PreconditionError);
  // Pure trace is orthogonal to every trace-free field.
  auto trace_seed = [](const Vec<3>&) { return Mat<3>(Mat<3>::Identity()); };
  EXPECT_THROW(project_constraints(c.space, c.domain, trace_seed, ConstraintSpec{false, true, false}),
               PreconditionError);
  EXPECT_THROW(project_constraints(BackgroundSpace<3>::sphere(ChartKind::Polar), DomainSpec<3>::sphere_cap(0.5),
                                   quadrupole_seed(b), ConstraintSpec::all()),
               ConfigError);
}

TEST(Projection, DimensionFour) {
  auto sp = BackgroundSpace<4>::sphere();
  auto dom = DomainSpec<4>::sphere_cap(pi / 4);
  const ChartBall<4> b = dom.chart_ball();
  ProjectionOptions opt;
  opt.potential_degree = 5;
  opt.fit = {5, 5, 10};
  const auto res = project_constraints(sp, dom, radial_bump_seed(b, default_seed_tensor<4>()), ConstraintSpec::all(), opt);
  const auto surf = ball_surface_rule(sp, dom, {1, 9, 18});
  const auto r = constraint_residuals<4>(sp, res.field, detail::interior_points(b, 100, 11), surf.geometry);
  EXPECT_LT(r.div, 1e-10);
  EXPECT_LT(r.trace, 1e-10);
  EXPECT_LT(r.tangential, 1e-10);
}

TEST(ProjectedField, BoundaryFactsAndMeanCurvatureForms) {
  auto c = sphere_case();
  const ChartBall<3> b = c.domain.chart_ball();
  const auto res = project_constraints(c.space, c.domain, radial_bump_seed(b, default_seed_tensor<3>()),
                                       ConstraintSpec::all());
  const auto surf = ball_surface_rule(c.space, c.domain, {1, 8, 16});
  auto lam = static_potential_field(c.space, c.domain, PotentialKind::SphereCos);
  for (const auto& node : surf.geometry.nodes) {
    const SymJet<3> hj = res.field.jet(node.x);
    const auto facts = boundary_facts(node, hj, lam.jet(node.x), c.space.metric_jet(node.x), b, 1e-9);
    EXPECT_LT(facts.max(), 1e-8);
    const MetricJet<3> bg = c.space.metric_jet(node.x);
    const double bm = linearized_mean_curvature(node, hj, bg, b, DHForm::BM, 1e-9);
    const double mt = linearized_mean_curvature(node, hj, bg, b, DHForm::MT, 1e-9);
    EXPECT_NEAR(bm, mt, 1e-8);
  }
}

TEST(ProjectedField, SphereFluxRemainderIsCubic) {
  auto c = sphere_case();
  const ChartBall<3> b = c.domain.chart_ball();
  const auto res = project_constraints(c.space, c.domain, radial_bump_seed(b, default_seed_tensor<3>()),
                                       ConstraintSpec::all());
  const auto pts = check_points(b, 40, 21);
  const std::vector<double> scales{1e-1, std::pow(10.0, -1.5), 1e-2};
  const auto [bm, lemma] =
      expansion_residual_R<3>(c.space, [&](const Vec<3>& x) { return res.field.jet(x); }, pts, scales);
  EXPECT_GE(bm.order, 2.7);
  EXPECT_GE(lemma.order, 2.7);
}

TEST(Conformal, FlatFamilyHasZeroScalarCurvature) {
  auto c = flat_case();
  const ChartBall<3> b = c.domain.chart_ball();
  const auto res = project_constraints(c.space, c.domain, radial_bump_seed(b, default_seed_tensor<3>()),
                                       ConstraintSpec::all());
  for (double t : {0.02, -0.01}) {
    const auto sol = conformal_zero_scalar(c.space, c.domain, res.field, t);
    EXPECT_LT(sol.scalar_residual, 1e-6) << t;
    EXPECT_GT(sol.min_u, 0.9);
  }
}

TEST(Conformal, ZeroPerturbationGivesUnitFactor) {
  auto c = flat_case();
  PolyTensorField<3> zero(c.space, c.domain.chart_ball());
  const auto sol = conformal_zero_scalar(c.space, c.domain, zero, 0.5);
  EXPECT_LT(sol.scalar_residual, 1e-14);
  EXPECT_NEAR(sol.u.jet(Vec<3>(0.1, 0.2, 0.3)).value, 1.0, 1e-14);
}

TEST(Conformal, FamilyDerivativeIsH) {
  auto c = flat_case();
  const ChartBall<3> b = c.domain.chart_ball();
  const auto res = project_constraints(c.space, c.domain, quadrupole_seed(b), ConstraintSpec::all());
  const double t = 1e-3;
  const auto fam = build_family(c.space, c.domain, res.field, {t, -t});
  for (const Vec<3>& x : check_points(b, 5, 8)) {
    const Mat<3> d = (family_metric(c.space, res.field, t, x, &fam.solutions[0]).g -
                      family_metric(c.space, res.field, -t, x, &fam.solutions[1]).g) / (2 * t);
    EXPECT_LT((d - res.field.value(x)).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(Conformal, IndefiniteMetricBreaksDown) {
  auto c = flat_case();
  const ChartBall<3> b = c.domain.chart_ball();
  auto big = radial_bump_seed(b, default_seed_tensor<3>());
  const auto res = project_constraints(c.space, c.domain, big, ConstraintSpec::all());
  EXPECT_THROW(conformal_zero_scalar(c.space, c.domain, res.field, 1e4), BreakdownError);
}
