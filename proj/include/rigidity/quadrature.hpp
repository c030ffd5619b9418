#pragma once
// Volume and surface quadrature on chart balls and boxes. Weights include
// the background volume (or induced area) density, so integrals are with
// respect to dvol_ḡ and dσ_ḡ.

#include "rigidity/calculus.hpp"

#include <atomic>

namespace rigidity {

struct QuadratureSize {
  int radial = 24;
  int polar = 24;    // per hyperspherical angle in (0, pi)
  int azimuth = 48;
};

template <int N>
struct VolumeRule {
  std::vector<Vec<N>> nodes;
  std::vector<double> weights;
  std::size_t id = 0;  // identifies the rule for shape checks
};

template <int N>
struct SurfaceRule {
  std::vector<Vec<N>> nodes;
  std::vector<double> weights;
  BoundaryGeometry<N> geometry;
  std::size_t id = 0;
};

namespace detail {

inline std::size_t next_rule_id() {
  static std::atomic<std::size_t> counter{1};
  return counter++;
}

/// Unit directions with angular weights on S^{N-1} (hyperspherical product rule).
template <int N>
std::pair<std::vector<Vec<N>>, std::vector<double>> sphere_directions(const QuadratureSize& q) {
  std::vector<Vec<N>> dirs;
  std::vector<double> wts;
  std::vector<Rule1D> theta(N - 2);
  for (int k = 0; k < N - 2; ++k) theta[k] = gauss_legendre(q.polar, 0.0, pi);
  std::vector<int> idx(N - 2, 0);
  const int total_theta = static_cast<int>(std::pow(q.polar, N - 2));
  for (int t = 0; t < total_theta; ++t) {
    int rem = t;
    for (int k = 0; k < N - 2; ++k) {
      idx[k] = rem % q.polar;
      rem /= q.polar;
    }
    for (int m = 0; m < q.azimuth; ++m) {
      const double ph = 2.0 * pi * (m + 0.5) / q.azimuth;
      Vec<N> u;
      double s = 1.0, w = 2.0 * pi / q.azimuth;
      for (int k = 0; k < N - 2; ++k) {
        const double th = theta[k].nodes[idx[k]];
        u[k] = s * std::cos(th);
        w *= theta[k].weights[idx[k]] * std::pow(std::sin(th), N - 2 - k);
        s *= std::sin(th);
      }
      u[N - 2] = s * std::cos(ph);
      u[N - 1] = s * std::sin(ph);
      dirs.push_back(u);
      wts.push_back(w);
    }
  }
  return {dirs, wts};
}

}  // namespace detail

/// Conformal chart factor sigma with g = sigma * delta (cartesian or stereographic).
template <int N>
double conformal_factor(const BackgroundSpace<N>& space, const Vec<N>& x) {
  if (space.chart() == ChartKind::Polar) throw ConfigError("ball quadrature needs a conformally flat chart");
  return space.metric_at(x)(0, 0);
}

template <int N>
VolumeRule<N> ball_volume_rule(const BackgroundSpace<N>& space, const DomainSpec<N>& domain,
                               const QuadratureSize& q = {}) {
  check_domain(space, domain);
  const ChartBall<N> b = domain.chart_ball();
  const Rule1D radial = gauss_legendre(q.radial, 0.0, b.radius);
  const auto [dirs, wts] = detail::sphere_directions<N>(q);
  VolumeRule<N> rule;
  rule.id = detail::next_rule_id();
  for (int i = 0; i < q.radial; ++i) {
    const double r = radial.nodes[i];
    for (std::size_t d = 0; d < dirs.size(); ++d) {
      const Vec<N> x = b.center + r * dirs[d];
      rule.nodes.push_back(x);
      rule.weights.push_back(radial.weights[i] * std::pow(r, N - 1) * wts[d] *
                             std::pow(conformal_factor(space, x), 0.5 * N));
    }
  }
  return rule;
}

template <int N>
SurfaceRule<N> ball_surface_rule(const BackgroundSpace<N>& space, const DomainSpec<N>& domain,
                                 const QuadratureSize& q = {}) {
  check_domain(space, domain);
  const ChartBall<N> b = domain.chart_ball();
  const auto [dirs, wts] = detail::sphere_directions<N>(q);
  SurfaceRule<N> rule;
  rule.id = detail::next_rule_id();
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    const Vec<N> x = b.center + b.radius * dirs[d];
    rule.nodes.push_back(x);
    rule.weights.push_back(std::pow(b.radius, N - 1) * wts[d] * std::pow(conformal_factor(space, x), 0.5 * (N - 1)));
  }
  rule.geometry = boundary_geometry<N>(space, domain, rule.nodes);
  return rule;
}

/// Tensor Gauss rule on a coordinate box.
template <int N>
VolumeRule<N> box_volume_rule(const BackgroundSpace<N>& space, const Vec<N>& lo, const Vec<N>& hi, int per_axis) {
  std::array<Rule1D, N> r;
  for (int a = 0; a < N; ++a) r[a] = gauss_legendre(per_axis, lo[a], hi[a]);
  VolumeRule<N> rule;
  rule.id = detail::next_rule_id();
  std::size_t total = 1;
  for (int a = 0; a < N; ++a) total *= per_axis;
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t rem = t;
    Vec<N> x;
    double w = 1.0;
    for (int a = 0; a < N; ++a) {
      const int i = static_cast<int>(rem % per_axis);
      rem /= per_axis;
      x[a] = r[a].nodes[i];
      w *= r[a].weights[i];
    }
    rule.nodes.push_back(x);
    rule.weights.push_back(w * space.volume_density(x));
  }
  return rule;
}

/// Quadrature of f(node index) with a fixed pairwise summation order.
template <class Rule, class F>
double integrate(const Rule& rule, F&& f) {
  std::vector<double> terms(rule.nodes.size());
  parallel_for(terms.size(), [&](std::size_t i) { terms[i] = rule.weights[i] * f(i); });
  return pairwise_sum(terms);
}

/// Several integrands evaluated together: f(i) returns an Eigen vector of values.
template <int M, class Rule, class F>
Eigen::Matrix<double, M, 1> integrate_many(const Rule& rule, F&& f) {
  std::vector<Eigen::Matrix<double, M, 1>> vals(rule.nodes.size());
  parallel_for(vals.size(), [&](std::size_t i) { vals[i] = f(i); });
  Eigen::Matrix<double, M, 1> out;
  std::vector<double> col(vals.size());
  for (int m = 0; m < M; ++m) {
    for (std::size_t i = 0; i < vals.size(); ++i) col[i] = rule.weights[i] * vals[i][m];
    out[m] = pairwise_sum(col);
  }
  return out;
}

template <class Rule>
double integrate_values(const Rule& rule, std::span<const double> values) {
  if (values.size() != rule.nodes.size()) throw ShapeError("integrand does not match the quadrature rule");
  std::vector<double> terms(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) terms[i] = rule.weights[i] * values[i];
  return pairwise_sum(terms);
}

template <int N>
double integrate_volume(std::span<const double> values, const VolumeRule<N>& rule) {
  return integrate_values(rule, values);
}

template <int N>
double integrate_surface(std::span<const double> values, const SurfaceRule<N>& rule) {
  return integrate_values(rule, values);
}

/// Norms of a tensor field and its covariant derivative.
struct FieldNorms {
  double c0 = 0.0;        // max |h|
  double c1 = 0.0;        // max |h| + max |∇̄h|
  double l2_h = 0.0;
  double l2_dh = 0.0;
  double l2_tr = 0.0;
  double l2_dtr = 0.0;
};

/// Max-norms over the supplied sample points, L² norms over the rule.
/// `jet(x)` must return SymJet<N> at x.
template <int N, class JetFn>
FieldNorms grid_norms(const BackgroundSpace<N>& space, JetFn&& jet, std::span<const Vec<N>> samples,
                      const VolumeRule<N>& rule) {
  FieldNorms out;
  auto pointwise = [&](const Vec<N>& x) {
    const SymJet<N> h = jet(x);
    const Connection<N> c = space.connection_at(x);
    const Rank3<N> d = covariant_gradient(h.v, h.d, c);
    const Vec<N> dtr = trace_gradient(d, c.ginv);
    Eigen::Matrix<double, 4, 1> v;
    v << inner(h.v, h.v, c.ginv), norm2(d, c.ginv), std::pow(trace(h.v, c.ginv), 2), covector_norm2(dtr, c.ginv);
    return v;
  };
  double mh = 0.0, mdh = 0.0;
  for (const Vec<N>& x : samples) {
    const auto v = pointwise(x);
    mh = std::max(mh, std::sqrt(v[0]));
    mdh = std::max(mdh, std::sqrt(v[1]));
  }
  out.c0 = mh;
  out.c1 = mh + mdh;
  const auto l2 = integrate_many<4>(rule, [&](std::size_t i) { return pointwise(rule.nodes[i]); });
  out.l2_h = std::sqrt(l2[0]);
  out.l2_dh = std::sqrt(l2[1]);
  out.l2_tr = std::sqrt(l2[2]);
  out.l2_dtr = std::sqrt(l2[3]);
  return out;
}

}  // namespace rigidity
