#include "rigidity/cap_eigen.hpp"

#include <gtest/gtest.h>

using namespace rigidity;

TEST(CapEigen, HemisphereValueIsDimension) {
  for (int n : {3, 4, 5}) {
    const auto r = neumann_mu(n, pi / 2);
    EXPECT_NEAR(r.mu, n, 1e-8);
    for (std::size_t i = 0; i < r.t.size(); ++i) EXPECT_NEAR(r.J[i], std::sin(r.t[i]), 1e-8);
    EXPECT_LT(r.residual, 1e-10);
    EXPECT_NEAR(r.f_delta, 0.0, 1e-10);
    EXPECT_GT(r.min_dJ, 0.0);
  }
}

TEST(CapEigen, SeriesCoefficientMatchesSine) {
  // sin t = t (1 - t^2 / 6) solves the n = 3 equation with mu = 3.
  const auto s = detail::series_start(3, 3.0, 1e-3);
  EXPECT_NEAR(s[0], std::sin(1e-3), 1e-15);
  EXPECT_NEAR(s[1], std::cos(1e-3), 1e-12);
}

TEST(CapEigen, AgreesWithTridiagonalOracle) {
  for (int n : {3, 4, 5})
    for (double d : {pi / 6, pi / 4, pi / 3, 0.45 * pi}) {
      const double mu = neumann_mu(n, d).mu;
      const double oracle = tridiagonal_mu_extrapolated(n, d, 500);
      EXPECT_LT(std::abs(mu - oracle) / oracle, 1e-6) << n << " " << d;
    }
}

TEST(CapEigen, OracleConvergesAtSecondOrder) {
  const double e1 = std::abs(tridiagonal_mu(3, pi / 2, 100) - 3.0);
  const double e2 = std::abs(tridiagonal_mu(3, pi / 2, 200) - 3.0);
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.1);
}

TEST(CapEigen, RejectsBadInput) {
  EXPECT_THROW(neumann_mu(3, 1.6), DomainError);
  EXPECT_THROW(neumann_mu(3, 0.0), DomainError);
  EXPECT_THROW(neumann_mu(1, 1.0), ConfigError);
  CapEigenProblem p;
  p.t0 = 1e-2;
  EXPECT_THROW(neumann_mu(p), ConfigError);
}

TEST(CapEigen, NarrowScanFailsToBracket) {
  CapEigenProblem p;
  p.delta = pi / 6;
  // mu(pi/6) > 3 / sin^2(pi/6) = 12, beyond this scan.
  p.scan_limit = 12.0;
  EXPECT_THROW(neumann_mu(p), BracketError);
  p.scan_limit = 0.0;
  EXPECT_GT(neumann_mu(p).mu, 12.0);
}

TEST(Lemma, MonotoneInRadius) {
  for (int n : {3, 4, 5}) {
    const auto r = verify_monotone(n, {pi / 6, pi / 5, pi / 4, pi / 3, pi / 2});
    EXPECT_TRUE(r.passed) << n;
    EXPECT_NEAR(r.mus.back(), n, 1e-8);
  }
  EXPECT_TRUE(verify_monotone(3, {pi / 3}).passed);
  EXPECT_THROW(verify_monotone(3, {pi / 3, pi / 4}), ConfigError);
  EXPECT_GT(neumann_mu(4, pi / 4).mu, 4.0);
}

TEST(Lemma, BoundsHoldWithPositiveMargins) {
  for (int n : {3, 4, 5})
    for (double d : {pi / 6, pi / 5, pi / 4, pi / 3, 0.45 * pi}) {
      const auto b = verify_bounds(n, d);
      EXPECT_TRUE(b.passed) << n << " " << d << " " << b.margin1 << " " << b.margin2;
    }
  EXPECT_NEAR(verify_bounds(3, pi / 3).bound2, 4.0, 1e-14);
}

TEST(Lemma, BoundsDegenerateAtHemisphere) {
  const auto b = eigen_bounds(3, pi / 2 - 1e-6, 3.0);
  EXPECT_NEAR(b.bound1, 3.0, 1e-5);
  EXPECT_NEAR(b.bound2, 3.0, 1e-5);
  EXPECT_GT(b.margin2, 0.0);
  EXPECT_THROW(eigen_bounds(3, pi / 2, 3.0), DomainError);
}

TEST(Lemma, BoundOneByDirectQuadrature) {
  // int_0^{pi/4} sin^4 = 3 pi / 32 - 1/4.
  const double integral = 3 * pi / 32 - 0.25;
  const double want = 5 + std::pow(std::sin(pi / 4), 3) * std::cos(pi / 4) / integral;
  EXPECT_NEAR(eigen_bounds(5, pi / 4, 100.0).bound1, want, 1e-12);
}

TEST(EpsilonMargin, Values) {
  EXPECT_DOUBLE_EQ(epsilon_margin(3, 3.0).epsilon, 0.5);
  EXPECT_FALSE(epsilon_margin(3, 3.0).clamped);
  EXPECT_NEAR(epsilon_margin(3, 3.0 - 2.0 / 4).epsilon, 0.0, 1e-15);
  const auto e = epsilon_margin(3, 4.0);
  EXPECT_EQ(e.epsilon, 1.0);
  EXPECT_TRUE(e.clamped);
  EXPECT_THROW(epsilon_margin(3, 2.0), PreconditionError);
}

TEST(EpsilonMargin, ConditionHoldsBelowAndFailsAbove) {
  auto cond = [](int n, double mu, double eps) { return -(n + 1) + (2 - eps) / n + ((1 - eps) / n) * mu + mu; };
  for (int n : {3, 4, 5})
    for (double mu : {n - 2.0 / (n + 1) + 0.01, n - 0.1, double(n), n + 0.3}) {
      const auto e = epsilon_margin(n, mu);
      EXPECT_GE(cond(n, mu, e.epsilon * (1 - 1e-12)), -1e-14);
      if (!e.clamped) {
        EXPECT_NEAR(cond(n, mu, e.epsilon), 0.0, 1e-13);
        EXPECT_LT(cond(n, mu, e.epsilon + 1e-3), 0.0);
      }
    }
}
