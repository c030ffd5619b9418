#pragma once
// First nonzero Neumann eigenvalue of geodesic caps B(delta) in S^n through
// the radial equation of the l = 1 mode
//   ((sin t)^{n-1} J')' + (mu - (n-1)/sin^2 t)(sin t)^{n-1} J = 0,
// J(0) = 0, J'(delta) = 0, J' > 0 on [0, delta).

#include "rigidity/core.hpp"
#include "rigidity/gauss.hpp"

#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>

namespace rigidity {

struct CapEigenProblem {
  int n = 3;
  double delta = pi / 2;
  double t0 = 1e-6;
  double rtol = 1e-13;
  double atol = 1e-14;
  double scan_step = 0.1;
  double mu_tol = 1e-12;
  int profile_samples = 201;
  double scan_limit = 0.0;  // 0: scan_max()

  void validate() const {
    if (n < 2) throw ConfigError("cap eigenproblem needs n >= 2");
    if (!(delta > 0.0) || delta > pi / 2 + 1e-15) throw DomainError("cap radius must lie in (0, pi/2]");
    if (t0 < 1e-8 || t0 > 1e-4) throw ConfigError("shooting start t0 must lie in [1e-8, 1e-4]");
    if (!(scan_step > 0.0) || !(mu_tol > 0.0)) throw ConfigError("scan step and tolerance must be positive");
  }
  /// Upper end of the bracket scan; mu(delta) > n / sin^2 delta, so 4n alone is too small for thin caps.
  double scan_max() const {
    if (scan_limit > 0.0) return scan_limit;
    return std::max(4.0 * n, 4.0 * n / std::pow(std::sin(delta), 2));
  }
};

struct CapEigenResult {
  double mu = 0.0;
  std::vector<double> t, J, dJ;
  double min_dJ = 0.0;     // over [t0, delta)
  double residual = 0.0;   // |J'(delta)|
  double f_delta = 0.0;    // (sin delta)^{n-1} J'(delta) / J(delta)
  double bracket_lo = 0.0, bracket_hi = 0.0;
  int solves = 0;
};

namespace detail {

using EigenState = std::array<double, 2>;

struct ShotEnd {
  double J = 0.0, dJ = 0.0;
  double min_dJ = 0.0;
};

inline EigenState series_start(int n, double mu, double t0) {
  const double c2 = (2.0 * (n - 1) - 3.0 * mu) / (6.0 * (n + 2));
  return {t0 * (1.0 + c2 * t0 * t0), 1.0 + 3.0 * c2 * t0 * t0};
}

inline auto radial_rhs(int n, double mu) {
  return [n, mu](const EigenState& y, EigenState& dy, double t) {
    const double s = std::sin(t), c = std::cos(t);
    dy[0] = y[1];
    dy[1] = -(n - 1) * c / s * y[1] - (mu - (n - 1) / (s * s)) * y[0];
  };
}

inline ShotEnd shoot(const CapEigenProblem& p, double mu, std::vector<double>* ts = nullptr,
                     std::vector<double>* Js = nullptr, std::vector<double>* dJs = nullptr) {
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled(p.atol, p.rtol, ode::runge_kutta_fehlberg78<EigenState>());
  EigenState y = series_start(p.n, mu, p.t0);
  ShotEnd end;
  end.min_dJ = y[1];
  const auto rhs = radial_rhs(p.n, mu);
  if (ts) {
    std::vector<double> times(p.profile_samples);
    for (int i = 0; i < p.profile_samples; ++i) times[i] = p.t0 + (p.delta - p.t0) * i / (p.profile_samples - 1.0);
    ode::integrate_times(stepper, rhs, y, times.begin(), times.end(), 1e-7, [&](const EigenState& s, double t) {
      ts->push_back(t);
      Js->push_back(s[0]);
      dJs->push_back(s[1]);
      if (t < p.delta) end.min_dJ = std::min(end.min_dJ, s[1]);
    });
  } else {
    ode::integrate_adaptive(stepper, rhs, y, p.t0, p.delta, 1e-7, [&](const EigenState& s, double t) {
      if (t < p.delta) end.min_dJ = std::min(end.min_dJ, s[1]);
    });
  }
  end.J = y[0];
  end.dJ = y[1];
  return end;
}

}  // namespace detail

/// Shooting from the regular series start, bracket scan in mu, bisection on J'(delta).
inline CapEigenResult neumann_mu(const CapEigenProblem& p) {
  p.validate();
  CapEigenResult r;
  double lo = 0.0;
  double flo = detail::shoot(p, lo).dJ;
  ++r.solves;
  if (!(flo > 0.0)) throw BracketError("J'(delta) not positive at mu = 0");
  const double top = p.scan_max();
  double hi = -1.0;
  for (double mu = p.scan_step; mu <= top + 1e-12; mu += p.scan_step) {
    const double f = detail::shoot(p, mu).dJ;
    ++r.solves;
    if (f <= 0.0) {
      hi = mu;
      break;
    }
    lo = mu;
  }
  if (hi < 0.0) throw BracketError("no sign change of J'(delta) for mu in (0, " + std::to_string(top) + "]");
  r.bracket_lo = lo;
  r.bracket_hi = hi;
  while (hi - lo > p.mu_tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    const detail::ShotEnd e = detail::shoot(p, mid);
    ++r.solves;
    // A candidate whose J' vanishes before delta belongs to a higher eigenvalue.
    if (e.dJ > 0.0 && e.min_dJ > 0.0) lo = mid;
    else hi = mid;
  }
  r.mu = 0.5 * (lo + hi);
  const detail::ShotEnd e = detail::shoot(p, r.mu, &r.t, &r.J, &r.dJ);
  ++r.solves;
  r.min_dJ = e.min_dJ;
  r.residual = std::abs(e.dJ);
  r.f_delta = std::pow(std::sin(p.delta), p.n - 1) * e.dJ / e.J;
  if (!(r.min_dJ > 0.0)) throw BracketError("J' vanishes before delta at the converged mu");
  return r;
}

inline CapEigenResult neumann_mu(int n, double delta) {
  CapEigenProblem p;
  p.n = n;
  p.delta = delta;
  return neumann_mu(p);
}

/// Independent check: vertex finite differences of the Sturm-Liouville form
/// with a half cell at the Neumann end, symmetrized to a tridiagonal matrix,
/// smallest eigenvalue extrapolated over three halvings.
inline double tridiagonal_mu(int n, double delta, int cells) {
  if (cells < 8) throw SizeError("tridiagonal oracle needs at least 8 cells");
  const double h = delta / cells;
  auto p = [&](double t) { return std::pow(std::sin(t), n - 1); };
  auto q = [&](double t) { return (n - 1) * std::pow(std::sin(t), n - 3); };
  const int M = cells;  // unknowns J_1 .. J_M
  Eigen::VectorXd diag(M), off(M - 1), w(M);
  for (int i = 1; i <= M; ++i) {
    const double t = i * h;
    const double pl = p(t - 0.5 * h);
    const double vol = i == M ? 0.5 * h : h;
    const double pr = i == M ? 0.0 : p(t + 0.5 * h);
    diag[i - 1] = (pl + pr) / h + q(t) * vol;
    w[i - 1] = p(t) * vol;
    if (i < M) off[i - 1] = -pr / h;
  }
  for (int i = 0; i < M; ++i) diag[i] /= w[i];
  for (int i = 0; i + 1 < M; ++i) off[i] /= std::sqrt(w[i] * w[i + 1]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

inline double tridiagonal_mu_extrapolated(int n, double delta, int cells = 1000) {
  const double a = tridiagonal_mu(n, delta, cells);
  const double b = tridiagonal_mu(n, delta, 2 * cells);
  const double c = tridiagonal_mu(n, delta, 4 * cells);
  const double r1 = (4.0 * b - a) / 3.0, r2 = (4.0 * c - b) / 3.0;
  return (16.0 * r2 - r1) / 15.0;
}

// ---------------------------------------------------------------------------

struct MonotoneReport {
  std::vector<double> deltas, mus;
  bool passed = true;
  std::vector<std::pair<double, double>> violations;  // (delta_k, delta_{k+1})
};

inline MonotoneReport verify_monotone(int n, const std::vector<double>& deltas) {
  for (std::size_t k = 1; k < deltas.size(); ++k)
    if (!(deltas[k] > deltas[k - 1])) throw ConfigError("delta grid must be increasing");
  MonotoneReport r;
  r.deltas = deltas;
  for (double d : deltas) r.mus.push_back(neumann_mu(n, d).mu);
  for (std::size_t k = 1; k < deltas.size(); ++k)
    if (!(r.mus[k] < r.mus[k - 1])) {
      r.passed = false;
      r.violations.emplace_back(deltas[k - 1], deltas[k]);
    }
  return r;
}

struct BoundsReport {
  int n = 3;
  double delta = 0.0;
  double mu = 0.0;
  double bound1 = 0.0;  // n + (sin d)^{n-2} cos d / int_0^d (sin t)^{n-1} dt
  double bound2 = 0.0;  // n / sin^2 d
  double margin1 = 0.0, margin2 = 0.0;
  bool passed = false;
};

inline BoundsReport eigen_bounds(int n, double delta, double mu) {
  if (!(delta > 0.0 && delta < pi / 2)) throw DomainError("bounds need delta in (0, pi/2)");
  BoundsReport b;
  b.n = n;
  b.delta = delta;
  b.mu = mu;
  const double integral = integrate_1d([n](double t) { return std::pow(std::sin(t), n - 1); }, 0.0, delta, 32);
  b.bound1 = n + std::pow(std::sin(delta), n - 2) * std::cos(delta) / integral;
  b.bound2 = n / std::pow(std::sin(delta), 2);
  b.margin1 = mu - b.bound1;
  b.margin2 = b.bound1 - b.bound2;
  b.passed = b.margin1 > 0.0 && b.margin2 > 0.0;
  return b;
}

inline BoundsReport verify_bounds(int n, double delta) { return eigen_bounds(n, delta, neumann_mu(n, delta).mu); }

struct EpsilonMargin {
  double epsilon = 0.0;
  bool clamped = false;
};

/// Largest eps in (0, 1) with -(n+1) + (2-eps)/n + ((1-eps)/n) mu + mu >= 0.
inline EpsilonMargin epsilon_margin(int n, double mu) {
  const double threshold = n - 2.0 / (n + 1);
  if (mu < threshold - 1e-14 * n) throw PreconditionError("epsilon margin needs mu > n - 2/(n+1)");
  EpsilonMargin e;
  e.epsilon = ((n + 1) * mu - n * n - n + 2.0) / (1.0 + mu);
  if (e.epsilon >= 1.0) {
    e.epsilon = 1.0;
    e.clamped = true;
  } else if (e.epsilon <= 0.0) {
    e.epsilon = 0.0;
    e.clamped = mu != threshold;
  }
  return e;
}

}  // namespace rigidity
