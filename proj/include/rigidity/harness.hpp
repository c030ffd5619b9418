#pragma once
// Shared scenario machinery: backgrounds and domains from a config, the
// potentials lambda, constrained perturbations, and one pass over the volume
// and surface rules that integrates every term the identities need.

#include "rigidity/config.hpp"
#include "rigidity/perturb.hpp"

namespace rigidity {

template <int N>
using LambdaFn = std::function<ScalarJet<N>(const Vec<N>&)>;

template <int N>
struct Scene {
  BackgroundSpace<N> space;
  DomainSpec<N> domain;
  VolumeRule<N> volume;
  SurfaceRule<N> surface;

  ChartBall<N> ball() const { return domain.chart_ball(); }
};

namespace detail {

template <int N>
Vec<N> to_vec(const std::vector<double>& v, const Vec<N>& fallback, const char* what) {
  if (v.empty()) return fallback;
  if (static_cast<int>(v.size()) != N)
    throw ConfigError(std::string(what) + " has " + std::to_string(v.size()) + " entries, need " + std::to_string(N));
  Vec<N> out;
  for (int i = 0; i < N; ++i) out[i] = v[i];
  return out;
}

}  // namespace detail

/// Fills unset background and domain fields with a scenario's defaults.
inline ScenarioConfig with_defaults(ScenarioConfig c, const std::string& background, const std::string& kind,
                                    double delta = pi / 3) {
  if (c.background.empty()) c.background = background;
  if (c.domain.kind.empty()) {
    if (c.background == background) {
      c.domain.kind = kind;
    } else {
      c.domain.kind = c.background == "sphere" ? "cap" : "ball";
    }
  }
  if (c.domain.kind == "cap" && c.domain.delta <= 0.0) c.domain.delta = delta;
  return c;
}

template <int N>
DomainSpec<N> make_domain(const ScenarioConfig& c) {
  const DomainConfig& d = c.domain;
  if (d.kind == "cap") return DomainSpec<N>::sphere_cap(d.delta, d.offset);
  if (d.kind == "hemisphere") return DomainSpec<N>::hemisphere();
  if (d.kind == "ball") {
    const Vec<N> center = detail::to_vec<N>(d.center, Vec<N>::Zero(), "domain.center");
    return DomainSpec<N>::euclidean_ball(d.radius, center, detail::to_vec<N>(d.a, center, "domain.a"));
  }
  throw ConfigError("unknown domain kind '" + d.kind + "'");
}

template <int N>
BackgroundSpace<N> make_background(const ScenarioConfig& c) {
  if (c.background == "sphere") return BackgroundSpace<N>::sphere();
  if (c.background == "flat") return BackgroundSpace<N>::flat();
  throw ConfigError("background must be sphere or flat");
}

template <int N>
Scene<N> make_scene(const ScenarioConfig& c) {
  const BackgroundSpace<N> space = make_background<N>(c);
  const DomainSpec<N> domain = make_domain<N>(c);
  check_domain(space, domain);
  return Scene<N>{space, domain, ball_volume_rule(space, domain, c.volume), ball_surface_rule(space, domain, c.surface)};
}

/// "cos", "constant", "quadratic" (level L) or "one".
template <int N>
LambdaFn<N> make_lambda(const Scene<N>& sc, const std::string& kind, double level = 0.0) {
  if (kind == "one") return [](const Vec<N>&) { return ScalarJet<N>::constant(1.0); };
  if (kind == "cos" || kind == "constant") {
    const auto p = static_potential_field(sc.space, sc.domain,
                                          kind == "cos" ? PotentialKind::SphereCos : PotentialKind::SphereConstant);
    return [p](const Vec<N>& x) { return p.jet(x); };
  }
  if (kind == "quadratic") {
    if (level <= 0.0) level = minimal_level(sc.domain) + 1.0;
    const auto p = static_potential_field(sc.space, sc.domain, PotentialKind::FlatQuadratic, level);
    return [p](const Vec<N>& x) { return p.jet(x); };
  }
  throw ConfigError("unknown potential '" + kind + "'");
}

// ---------------------------------------------------------------------------

/// Projection of the configured seed, normalized to max |h| = 1 on the volume rule.
template <int N>
PolyTensorField<N> constrained_h(const Scene<N>& sc, const ScenarioConfig& cfg, const ConstraintSpec& spec,
                                 CheckReport& rep) {
  const ChartBall<N> ball = sc.ball();
  ProjectionOptions opt;
  opt.degree = cfg.degree;
  opt.potential_degree = cfg.potential_degree;
  ProjectionResult<N> pr = cfg.seed_recipe == "quadrupole"
                               ? project_constraints(sc.space, sc.domain, quadrupole_seed(ball), spec, opt)
                               : project_constraints(sc.space, sc.domain,
                                                     radial_bump_seed(ball, default_seed_tensor<N>()), spec, opt);
  std::vector<double> norms(sc.volume.nodes.size());
  parallel_for(norms.size(), [&](std::size_t i) {
    const Vec<N>& x = sc.volume.nodes[i];
    const Mat<N> v = pr.field.value(x);
    norms[i] = std::sqrt(inner(v, v, sc.space.connection_at(x).ginv));
  });
  const double hmax = max_abs(norms);
  if (!(hmax > 0.0)) throw PreconditionError("projected perturbation vanishes");
  PolyTensorField<N> h = pr.field;
  h *= 1.0 / hmax;

  const auto pts = detail::interior_points(ball, 200, cfg.seed + 101);
  const ConstraintResiduals r = constraint_residuals<N>(sc.space, h, pts, sc.surface.geometry);
  rep.quantity("h.basis_size", static_cast<double>(pr.basis.size()));
  rep.quantity("h.nullity", static_cast<double>(pr.null_space.cols()));
  rep.quantity("h.sigma_gap", pr.sigma_gap);
  rep.quantity("h.raw_max", hmax);
  rep.quantity("h.seed_distance", pr.distance / pr.seed_norm);
  if (spec.divergence_free) rep.assert_le("h.residual_div", r.div, cfg.tol.constraint);
  else rep.quantity("h.residual_div", r.div);
  if (spec.trace_free) rep.assert_le("h.residual_trace", r.trace, cfg.tol.constraint);
  else rep.quantity("h.residual_trace", r.trace);
  if (spec.boundary_tangential_zero) rep.assert_le("h.residual_tangential", r.tangential, cfg.tol.constraint);
  else rep.quantity("h.residual_tangential", r.tangential);
  return h;
}

// ---------------------------------------------------------------------------
// One quadrature pass.

namespace slot {
enum Volume : int {
  dV,          // sqrt(det g / det gbar) - 1
  dR,          // R(g) - Rbar
  dR_lam,      // (R(g) - Rbar) lambda
  pair,        // <h, DR*(lambda)>
  sq_pair,     // <h^2, DR*(lambda)>
  tr_hess,     // tr h <h, Hess lambda>
  curv,        // 1/2 h h Rbar lambda
  grad_lam,    // 1/4 (|grad h|^2 + |grad tr h|^2) lambda
  grad,        // |grad h|^2
  grad_tr,     // |grad tr h|^2
  h2,          // |h|^2
  tr2,         // (tr h)^2
  tr,          // tr h
  tr2_lam,     // (tr h)^2 lambda
  trace_gap,   // |h|^2 - (tr h)^2 / n
  grad_gap,    // |grad h|^2 - |grad tr h|^2 / n
  volume_count
};
enum Surface : int {
  dH_lam,      // (2 - tr h)(H(g) - Hbar) lambda
  dH,          // H(g) - Hbar
  dH_w,        // (2 - tr h)(H(g) - Hbar)
  bq_lam,      // [-1/4 h_nn^2 Hbar - 1/2 (II(X,X) + Hbar |X|^2)] lambda
  lam_n,       // lambda_n [-h_nn^2 - 1/2 |X|^2]
  cross,       // -h_nn <X, grad_Sigma lambda>
  coercive,    // h_nn^2 Hbar + 2 (II(X,X) + Hbar |X|^2)
  by,          // II(X,X) + Hbar |X|^2
  h2_surf,     // |h|^2
  Hg,          // H(g)
  surface_count
};
}  // namespace slot

struct Integrals {
  Eigen::VectorXd vol, vol_min, vol_max;
  Eigen::VectorXd surf, surf_min, surf_max;

  double v(slot::Volume k) const { return vol[k]; }
  double s(slot::Surface k) const { return surf[k]; }

  /// Left side of the main formula.
  double main_lhs() const { return vol[slot::dR_lam] + surf[slot::dH_lam]; }
  /// Displayed right side of the main formula.
  double main_rhs() const {
    return vol[slot::pair] - 0.5 * vol[slot::sq_pair] + vol[slot::tr_hess] + vol[slot::curv] - vol[slot::grad_lam] +
           surf[slot::bq_lam] + surf[slot::lam_n] + surf[slot::cross];
  }
  double corollary_lhs() const { return -2.0 * vol[slot::dV] + main_lhs(); }
  /// Displayed right side of the volume corollary, Ric = ricci_factor gbar, Rbar = n ricci_factor.
  double corollary_rhs(int n, double ricci_factor) const {
    const double rbar = n * ricci_factor;
    return (-0.25 - 1.0 / (n - 1)) * vol[slot::tr2] - vol[slot::grad_lam] +
           (rbar / (1.0 - n) + ricci_factor) * vol[slot::tr2_lam] + vol[slot::curv] + surf[slot::bq_lam] +
           surf[slot::lam_n] + surf[slot::cross];
  }
};

namespace detail {

inline void reduce_columns(const std::vector<double>& vals, const std::vector<double>& weights, int cols,
                           Eigen::VectorXd& sum, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
  const std::size_t rows = weights.size();
  sum.resize(cols);
  lo.resize(cols);
  hi.resize(cols);
  std::vector<double> col(rows);
  for (int k = 0; k < cols; ++k) {
    double a = std::numeric_limits<double>::infinity(), b = -a;
    for (std::size_t i = 0; i < rows; ++i) {
      const double x = vals[i * cols + k];
      col[i] = weights[i] * x;
      a = std::min(a, x);
      b = std::max(b, x);
    }
    sum[k] = pairwise_sum(col);
    lo[k] = a;
    hi[k] = b;
  }
}

}  // namespace detail

/// Integrates every slot for s h. With exact = false the exact curvature
/// slots stay zero and no size limit applies (quadratic terms only).
template <int N, class Field>
Integrals integrate_terms(const Scene<N>& sc, const Field& field, double s, const LambdaFn<N>& lam,
                          bool exact = true) {
  constexpr int V = slot::volume_count, S = slot::surface_count;
  const double kappa = sc.space.kappa(), ric = sc.space.ricci_factor(), rbar = sc.space.scalar_curvature();
  const ChartBall<N> ball = sc.ball();
  Integrals out;

  const std::size_t nv = sc.volume.nodes.size();
  std::vector<double> vv(nv * V, 0.0);
  std::vector<double> too_big(nv, 0.0);
  parallel_for(nv, [&](std::size_t i) {
    const Vec<N>& x = sc.volume.nodes[i];
    const MetricJet<N> bg = sc.space.metric_jet(x);
    const Connection<N> c = connection_from_jet(bg);
    const Mat<N>& gi = c.ginv;
    SymJet<N> h = field.jet(x);
    h *= s;
    const ScalarJet<N> l = lam(x);
    const Rank3<N> d = covariant_gradient<N>(h.v, h.d, c);
    const double tr = trace(h.v, gi);
    const double h2 = inner(h.v, h.v, gi);
    const double dh2 = norm2<N>(d, gi);
    const double dtr2 = covector_norm2(trace_gradient<N>(d, gi), gi);
    const Mat<N> drs = adjoint_DRstar(l, c, bg.g, ric);
    double* v = &vv[i * V];
    v[slot::pair] = inner(h.v, drs, gi);
    v[slot::sq_pair] = inner(h_squared(h.v, gi), drs, gi);
    v[slot::tr_hess] = tr * inner(h.v, covariant_hessian(l, c), gi);
    v[slot::curv] = 0.5 * curvature_pairing(h.v, gi, kappa) * l.value;
    v[slot::grad_lam] = 0.25 * (dh2 + dtr2) * l.value;
    v[slot::grad] = dh2;
    v[slot::grad_tr] = dtr2;
    v[slot::h2] = h2;
    v[slot::tr2] = tr * tr;
    v[slot::tr] = tr;
    v[slot::tr2_lam] = tr * tr * l.value;
    v[slot::trace_gap] = h2 - tr * tr / N;
    v[slot::grad_gap] = dh2 - dtr2 / N;
    if (exact) {
      if (std::sqrt(h2) > 0.5) {
        too_big[i] = std::sqrt(h2);
        return;
      }
      const MetricJet<N> g = perturbed(bg, h);
      v[slot::dV] = std::sqrt(g.g.determinant() / bg.g.determinant()) - 1.0;
      v[slot::dR] = scalar_curvature(g) - rbar;
      v[slot::dR_lam] = v[slot::dR] * l.value;
    }
  });
  if (const double m = max_abs(too_big); m > 0.0)
    throw RangeError("|s h| = " + std::to_string(m) + " exceeds 1/2; use smaller scales");
  detail::reduce_columns(vv, sc.volume.weights, V, out.vol, out.vol_min, out.vol_max);

  const std::size_t ns = sc.surface.nodes.size();
  std::vector<double> sv(ns * S, 0.0);
  parallel_for(ns, [&](std::size_t i) {
    const BoundaryNode<N>& node = sc.surface.geometry.nodes[i];
    const MetricJet<N> bg = sc.space.metric_jet(node.x);
    const Mat<N> gi = bg.g.inverse();
    SymJet<N> h = field.jet(node.x);
    h *= s;
    const ScalarJet<N> l = lam(node.x);
    const BoundaryComponents<N> bc = boundary_components(node, h.v);
    Eigen::Matrix<double, N - 1, 1> xv;
    double xgrad = 0.0;
    for (int a = 0; a < N - 1; ++a) {
      xv[a] = bc.x[a];
      xgrad += bc.x[a] * node.frame[a].dot(l.grad);
    }
    const double iixx = xv.dot(node.second_form * xv);
    const double hbar = node.mean_curvature;
    const double tr = trace(h.v, gi);
    double* v = &sv[i * S];
    v[slot::bq_lam] = (-0.25 * bc.hnn * bc.hnn * hbar - 0.5 * (iixx + hbar * bc.x2)) * l.value;
    v[slot::lam_n] = node.normal.dot(l.grad) * (-bc.hnn * bc.hnn - 0.5 * bc.x2);
    v[slot::cross] = -bc.hnn * xgrad;
    v[slot::coercive] = bc.hnn * bc.hnn * hbar + 2.0 * (iixx + hbar * bc.x2);
    v[slot::by] = iixx + hbar * bc.x2;
    v[slot::h2_surf] = inner(h.v, h.v, gi);
    if (exact) {
      const MetricJet<N> g = perturbed(bg, h);
      induced_metric(node, g.g);
      const double hg = mean_curvature(g, ball, node.x);
      v[slot::Hg] = hg;
      v[slot::dH] = hg - hbar;
      v[slot::dH_w] = (2.0 - tr) * (hg - hbar);
      v[slot::dH_lam] = v[slot::dH_w] * l.value;
    }
  });
  detail::reduce_columns(sv, sc.surface.weights, S, out.surf, out.surf_min, out.surf_max);
  return out;
}

/// Scales as a vector for order fits.
inline std::vector<double> abs_values(std::vector<double> v) {
  for (double& x : v) x = std::abs(x);
  return v;
}

}  // namespace rigidity
