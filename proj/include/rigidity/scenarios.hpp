#pragma once
// Scenario runners. Each assembles one identity or inequality chain from the
// library and records both sides, residual orders and hypothesis flags.

#include "rigidity/cap_eigen.hpp"
#include "rigidity/harness.hpp"

namespace rigidity {

// ---------------------------------------------------------------------------
// Adjoint identity for unconstrained p: interior pairing against the
// boundary combination, with p and lambda known only through grid samples.

namespace detail {

/// c0 + lin.y + sum amp sin(w.y + phase), y = (x - center) / radius.
template <int N>
struct TrigScalar {
  struct Mode {
    Vec<N> w;
    double phase = 0.0, amp = 0.0;
  };
  double c0 = 0.0;
  Vec<N> lin = Vec<N>::Zero();
  std::vector<Mode> modes;
  Vec<N> center = Vec<N>::Zero();
  double radius = 1.0;

  void scale(double f) {
    c0 *= f;
    lin *= f;
    for (Mode& m : modes) m.amp *= f;
  }

  ScalarJet<N> jet(const Vec<N>& x) const {
    const Vec<N> y = (x - center) / radius;
    ScalarJet<N> j;
    j.value = c0 + lin.dot(y);
    j.grad = lin / radius;
    for (const Mode& m : modes) {
      const double a = m.w.dot(y) + m.phase;
      j.value += m.amp * std::sin(a);
      j.grad += m.amp * std::cos(a) * m.w / radius;
      j.hess -= m.amp * std::sin(a) * m.w * m.w.transpose() / (radius * radius);
    }
    return j;
  }
};

template <int N>
TrigScalar<N> random_trig(std::mt19937_64& rng, const ChartBall<N>& ball, double amp) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> freq(0.5, 1.5), phase(0.0, 2.0 * pi);
  TrigScalar<N> t;
  t.center = ball.center;
  t.radius = ball.radius;
  t.c0 = amp * gauss(rng);
  for (int i = 0; i < N; ++i) t.lin[i] = amp * gauss(rng);
  for (int k = 0; k < 2; ++k) {
    typename TrigScalar<N>::Mode m;
    for (int i = 0; i < N; ++i) m.w[i] = gauss(rng);
    m.w *= freq(rng) / m.w.norm();
    m.phase = phase(rng);
    m.amp = amp * gauss(rng);
    t.modes.push_back(m);
  }
  return t;
}

template <int N>
struct TrigTensor {
  std::array<TrigScalar<N>, sym_size(N)> c;
  SymJet<N> jet(const Vec<N>& x) const {
    SymJet<N> h;
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) h.set_component(i, j, c[sym_index(N, i, j)].jet(x));
    return h;
  }
};

/// Interior and boundary sides of the adjoint identity.
template <int N, class PJet, class LJet>
std::pair<double, double> adjoint_sides(const Scene<N>& sc, PJet&& p, LJet&& lam) {
  const double ric = sc.space.ricci_factor();
  const double interior = integrate(sc.volume, [&](std::size_t i) {
    const Vec<N>& x = sc.volume.nodes[i];
    const MetricJet<N> m = sc.space.metric_jet(x);
    const Connection<N> c = connection_from_jet(m);
    const SymJet<N> pj = p(x);
    const ScalarJet<N> l = lam(x);
    const double dr = linearized_scalar(covariant_derivative(pj, c), c.ginv, ric);
    return dr * l.value - inner(adjoint_DRstar(l, c, m.g, ric), pj.v, c.ginv);
  });
  const double boundary = integrate(sc.surface, [&](std::size_t i) {
    const BoundaryNode<N>& node = sc.surface.geometry.nodes[i];
    const Connection<N> c = sc.space.connection_at(node.x);
    const SymJet<N> pj = p(node.x);
    const ScalarJet<N> l = lam(node.x);
    const Rank3<N> d = covariant_gradient<N>(pj.v, pj.d, c);
    const Vec<N>& nu = node.normal;
    const double pnn = nu.dot(pj.v * nu);
    double y_grad = 0.0;
    for (int a = 0; a < N - 1; ++a) y_grad += node.frame[a].dot(pj.v * nu) * node.frame[a].dot(l.grad);
    return l.value * (-trace_gradient<N>(d, c.ginv).dot(nu) + divergence<N>(d, c.ginv).dot(nu)) - y_grad +
           nu.dot(l.grad) * (trace(pj.v, c.ginv) - pnn);
  });
  return {interior, boundary};
}

}  // namespace detail

/// max |DR*(cos r)| on a polar cap grid and max |DR*(lambda) - gbar| for the
/// constant and quadratic potentials, over a ladder of grid sizes.
template <int N>
void static_potential_checks(const ScenarioConfig& cfg, const std::vector<int>& grids, CheckReport& rep) {
  const double delta = cfg.domain.kind == "cap" && cfg.domain.delta > 0.0 ? cfg.domain.delta : pi / 3;
  std::vector<double> hs, cos_res, const_res, quad_res;
  const auto sphere_polar = BackgroundSpace<N>::sphere(ChartKind::Polar);
  const auto sphere = BackgroundSpace<N>::sphere();
  const auto flat = BackgroundSpace<N>::flat();
  const auto cap = DomainSpec<N>::sphere_cap(delta);
  const auto ball = DomainSpec<N>::euclidean_ball(1.0);
  const auto cos_pot = static_potential_field(sphere_polar, cap, PotentialKind::SphereCos);
  const auto const_pot = static_potential_field(sphere, cap, PotentialKind::SphereConstant);
  const auto quad_pot = static_potential_field(flat, ball, PotentialKind::FlatQuadratic, minimal_level(ball) + 1.0);
  auto max_norm = [](const BackgroundSpace<N>& space, const Grid<N>& grid, const std::vector<Mat<N>>& m,
                     bool minus_metric) {
    std::vector<double> r(m.size());
    parallel_for(m.size(), [&](std::size_t p) {
      const Vec<N> x = grid.node(p);
      const Mat<N> g = space.metric_at(x);
      const Mat<N> e = minus_metric ? Mat<N>(m[p] - g) : m[p];
      r[p] = std::sqrt(std::max(0.0, inner(e, e, Mat<N>(g.inverse()))));
    });
    return max_abs(r);
  };
  for (int count : grids) {
    Vec<N> lo = Vec<N>::Zero(), hi;
    hi[0] = delta;
    for (int j = 1; j < N - 1; ++j) hi[j] = pi;
    hi[N - 1] = 2.0 * pi;
    std::array<int, N> counts;
    counts.fill(count);
    const Grid<N> polar(lo, hi, counts);
    hs.push_back(delta / count);
    cos_res.push_back(max_norm(sphere_polar, polar,
                               adjoint_DRstar(sample_scalar(polar, [&](const Vec<N>& x) { return cos_pot(x); }),
                                              sphere_polar),
                               false));
    const Grid<N> cg = grid_for_domain(cap, count);
    const_res.push_back(max_norm(
        sphere, cg, adjoint_DRstar(sample_scalar(cg, [&](const Vec<N>& x) { return const_pot(x); }), sphere), true));
    const Grid<N> fg = grid_for_domain(ball, count);
    quad_res.push_back(max_norm(
        flat, fg, adjoint_DRstar(sample_scalar(fg, [&](const Vec<N>& x) { return quad_pot(x); }), flat), true));
  }
  rep.assert_le("static.cos.max_residual", cos_res.front(), cfg.tol.identity);
  rep.order("static.cos.order", hs, cos_res, 3.7);
  // Constant and quadratic potentials are reproduced exactly by fourth-order
  // differences, so only rounding is left and the order is vacuous.
  for (auto [name, res] : {std::pair{"static.constant", &const_res}, std::pair{"static.quadratic", &quad_res}}) {
    const double worst = *std::max_element(res->begin(), res->end());
    rep.assert_le(std::string(name) + ".max_residual", worst, cfg.tol.identity);
    if (worst <= 1e-9) {
      rep.quantity(std::string(name) + ".order", std::numeric_limits<double>::infinity());
      std::ostringstream msg;
      msg << name << ": exact under finite differences, worst residual " << std::scientific << std::setprecision(2)
          << worst << ", order not meaningful";
      rep.note(msg.str());
    } else {
      rep.order(std::string(name) + ".order", hs, *res, 3.7);
    }
  }
}

/// Random unconstrained (p, lambda) pairs on each background over the grid ladder.
template <int N>
void adjoint_pair_checks(const ScenarioConfig& cfg, CheckReport& rep) {
  std::vector<std::string> backgrounds;
  if (cfg.background.empty()) backgrounds = {"flat", "sphere"};
  else backgrounds = {cfg.background};
  std::vector<int> ladder = cfg.grids;
  if (std::find(ladder.begin(), ladder.end(), cfg.grid) == ladder.end()) ladder.push_back(cfg.grid);
  std::sort(ladder.begin(), ladder.end());

  for (std::size_t b = 0; b < backgrounds.size(); ++b) {
    ScenarioConfig c = cfg;
    c.background = backgrounds[b];
    c.domain.kind.clear();
    c = with_defaults(c, backgrounds[b], backgrounds[b] == "sphere" ? "cap" : "ball");
    if (cfg.background == backgrounds[b]) c.domain = with_defaults(cfg, backgrounds[b], c.domain.kind).domain;
    const Scene<N> sc = make_scene<N>(c);
    const ChartBall<N> ball = sc.ball();
    for (int k = 0; k < cfg.pairs; ++k) {
      std::mt19937_64 rng(cfg.seed * 1000003ULL + 7919ULL * k + b);
      detail::TrigTensor<N> p;
      for (auto& comp : p.c) comp = detail::random_trig(rng, ball, 0.3);
      detail::TrigScalar<N> lam = detail::random_trig(rng, ball, 0.5);
      // Unit sup norms on the volume nodes.
      double pmax = 0.0, lmax = 0.0;
      for (const Vec<N>& x : sc.volume.nodes) {
        const Mat<N> v = p.jet(x).v;
        pmax = std::max(pmax, std::sqrt(inner(v, v, Mat<N>(sc.space.metric_at(x).inverse()))));
        lmax = std::max(lmax, std::abs(lam.jet(x).value));
      }
      for (auto& comp : p.c) comp.scale(1.0 / pmax);
      lam.scale(1.0 / lmax);
      const std::string tag = "intdr." + c.background + ".pair" + std::to_string(k);

      const auto [ei, eb] = detail::adjoint_sides(sc, [&](const Vec<N>& x) { return p.jet(x); },
                                                  [&](const Vec<N>& x) { return lam.jet(x); });
      rep.quantity(tag + ".interior", ei);
      rep.assert_le(tag + ".exact_jet_residual", std::abs(ei - eb), 1e-9 * std::max(1.0, std::abs(ei)));

      std::vector<double> hs, res;
      double at_default = 0.0;
      for (int count : ladder) {
        const Grid<N> grid = grid_for_domain(sc.domain, count);
        const GridTensorJetField<N> pg(sample_tensor(grid, [&](const Vec<N>& x) { return p.jet(x).v; }));
        const GridScalarJetField<N> lg(grid, sample_scalar(grid, [&](const Vec<N>& x) { return lam.jet(x).value; }).values);
        const auto [gi, gb] = detail::adjoint_sides(sc, pg, lg);
        hs.push_back(grid.max_spacing());
        res.push_back(gi - gb);
        if (count == cfg.grid) at_default = gi - gb;
      }
      rep.assert_le(tag + ".residual", std::abs(at_default), cfg.tol.identity);
      rep.order(tag + ".order", hs, res, cfg.tol.order);
    }
  }
}

template <int N>
CheckReport check_intDR(const ScenarioConfig& cfg) {
  CheckReport rep("intdr");
  adjoint_pair_checks<N>(cfg, rep);
  if constexpr (N == 3) {
    const int g = cfg.grid;
    static_potential_checks<N>(cfg, {g, g + g / 6, g + g / 3}, rep);
  } else {
    rep.note("static potential grid checks run for n = 3 only");
  }
  rep.finish();
  return rep;
}

// ---------------------------------------------------------------------------
// Main formula and the volume corollary under h -> s h.

template <int N>
void main_formula_case(const ScenarioConfig& cfg, const std::string& background, const std::string& potential,
                       CheckReport& rep, bool corollary) {
  ScenarioConfig c = cfg;
  c.background = background;
  if (cfg.background != background) c.domain = DomainConfig{};
  c = with_defaults(c, background, background == "sphere" ? "cap" : "ball");
  const Scene<N> sc = make_scene<N>(c);
  const PolyTensorField<N> h = constrained_h(sc, c, ConstraintSpec::gauge(), rep);
  const LambdaFn<N> lam = make_lambda(sc, potential);
  const std::string tag = (corollary ? "corollary." : "main.") + background + "." + potential;
  std::vector<double> lhs, rhs, res;
  for (double s : c.scales) {
    const Integrals I = integrate_terms(sc, h, s, lam);
    const double l = corollary ? I.corollary_lhs() : I.main_lhs();
    const double r = corollary ? I.corollary_rhs(N, sc.space.ricci_factor()) : I.main_rhs();
    lhs.push_back(l);
    rhs.push_back(r);
    res.push_back(l - r);
    if (s == c.scales.front()) rep.quantity(tag + ".dr_star_pairing_s0", I.v(slot::pair));
  }
  for (std::size_t k = 0; k < c.scales.size(); ++k) {
    rep.quantity(tag + ".lhs_s" + std::to_string(k), lhs[k]);
    rep.quantity(tag + ".rhs_s" + std::to_string(k), rhs[k]);
  }
  rep.order(tag + ".residual_order", c.scales, res, c.tol.scaling_order);
}

template <int N>
CheckReport check_main_formula(const ScenarioConfig& cfg) {
  CheckReport rep("main-formula");
  std::vector<std::pair<std::string, std::string>> cases;
  if (!cfg.potential.empty()) {
    const std::string bg = cfg.background.empty() ? (cfg.potential == "quadratic" || cfg.potential == "one" ? "flat" : "sphere")
                                                  : cfg.background;
    cases.emplace_back(bg, cfg.potential);
  } else if (cfg.background == "sphere") {
    cases = {{"sphere", "cos"}, {"sphere", "constant"}};
  } else if (cfg.background == "flat") {
    cases = {{"flat", "quadratic"}, {"flat", "one"}};
  } else {
    cases = {{"sphere", "cos"}, {"sphere", "constant"}, {"flat", "quadratic"}};
  }
  for (const auto& [bg, pot] : cases) main_formula_case<N>(cfg, bg, pot, rep, false);
  rep.finish();
  return rep;
}

/// V((1 + eps) gbar) on a flat unit box against the displayed expansion.
template <int N>
void volume_expansion_check(double eps, CheckReport& rep) {
  const auto flat = BackgroundSpace<N>::flat();
  const VolumeRule<N> rule = box_volume_rule(flat, Vec<N>(Vec<N>::Zero()), Vec<N>(Vec<N>::Ones()), 4);
  const double v0 = integrate(rule, [](std::size_t) { return 1.0; });
  const double v = integrate(rule, [&](std::size_t i) {
    const Mat<N> g = (1.0 + eps) * flat.metric_at(rule.nodes[i]);
    return std::sqrt(g.determinant());
  });
  const double n = N;
  const double expansion = 0.5 * n * eps + (n * n / 8.0 - n / 4.0) * eps * eps;
  const double residual = (v - v0) / v0 - expansion;
  const double a = 0.5 * n;
  const double binomial = a * (a - 1.0) * (a - 2.0) / 6.0 * eps * eps * eps;
  rep.quantity("eqV.eps", eps);
  rep.quantity("eqV.volume_ratio", v / v0);
  rep.quantity("eqV.expansion", expansion);
  rep.quantity("eqV.residual", residual);
  rep.quantity("eqV.binomial_cubic", binomial);
  if (binomial != 0.0) rep.assert_le("eqV.cubic_match", std::abs(residual / binomial - 1.0), 0.05);
  else rep.assert_le("eqV.cubic_match", std::abs(residual), 1e-14);
}

template <int N>
CheckReport check_volume_corollary(const ScenarioConfig& cfg) {
  CheckReport rep("volume-corollary");
  volume_expansion_check<N>(1e-2, rep);
  std::vector<std::string> bgs;
  if (cfg.background.empty()) bgs = {"sphere", "flat"};
  else bgs = {cfg.background};
  for (const auto& bg : bgs) main_formula_case<N>(cfg, bg, bg == "sphere" ? "constant" : "quadratic", rep, true);
  rep.finish();
  return rep;
}

// ---------------------------------------------------------------------------
// Hemisphere chain.

template <int N>
CheckReport check_hemisphere_chain(const ScenarioConfig& cfg) {
  CheckReport rep("hemisphere");
  ScenarioConfig c = cfg;
  c.background = "sphere";
  c.domain = DomainConfig{};
  c.domain.kind = "hemisphere";
  const Scene<N> sc = make_scene<N>(c);
  const PolyTensorField<N> h = constrained_h(sc, c, ConstraintSpec::gauge(), rep);
  const LambdaFn<N> lam = make_lambda(sc, "constant");
  const double n = N;

  const CapEigenResult eig = neumann_mu(N, pi / 2);
  const double mu = eig.mu;
  const EpsilonMargin em = epsilon_margin(N, mu);
  const double eps = em.epsilon;
  rep.quantity("mu", mu);
  rep.quantity("epsilon", eps);
  if (N == 3) rep.assert_le("epsilon_is_half", std::abs(eps - 0.5), 1e-8);

  const Integrals Q = integrate_terms(sc, h, 1.0, lam, false);
  const double V = sc.domain.closed_form_volume();
  // (a) Poincare inequality for tr h.
  const double mean_part = Q.v(slot::tr) * Q.v(slot::tr) / V;
  const double poincare = Q.v(slot::grad_tr) - mu * (Q.v(slot::tr2) - mean_part);
  rep.quantity("poincare.lhs", Q.v(slot::grad_tr));
  rep.quantity("poincare.rhs", mu * (Q.v(slot::tr2) - mean_part));
  rep.assert_ge("poincare.margin", poincare, -1e-10 * Q.v(slot::grad_tr));

  // (b) Boundary integrand, nodewise.
  rep.assert_ge("boundary.integrand_min", Q.surf_min[slot::coercive], -1e-12);
  rep.quantity("boundary.integrand_max", Q.surf_max[slot::coercive]);
  double ii_min = std::numeric_limits<double>::infinity();
  for (const auto& node : sc.surface.geometry.nodes) {
    const FrameMat<N> m = node.second_form + node.mean_curvature * FrameMat<N>::Identity();
    ii_min = std::min(ii_min, Eigen::SelfAdjointEigenSolver<FrameMat<N>>(m).eigenvalues().minCoeff());
  }
  rep.hypothesis("II+Hbar*gamma>=0", ii_min + 1e-12);
  rep.quantity("II+Hbar*gamma.min_eig", ii_min);

  // (c) Quadratic chain steps and the identity behind the left side.
  rep.assert_ge("pointwise.trace_gap_min", Q.vol_min[slot::trace_gap], -1e-12);
  rep.assert_ge("pointwise.grad_gap_min", Q.vol_min[slot::grad_gap], -1e-10);
  const double I1 = -(n + 1) * Q.v(slot::tr2) + 2.0 * Q.v(slot::h2) + Q.v(slot::grad) + Q.v(slot::grad_tr);
  const double coef = -(n + 1) + (2.0 - eps) / n + (1.0 - eps) / n * mu + mu;
  rep.assert_ge("getep.coefficient", coef, -1e-12);
  const double coercive = eps * (Q.v(slot::h2) + Q.v(slot::grad));
  const double getep_rhs = coercive + coef * Q.v(slot::tr2) - mu * ((1.0 - eps) / n + 1.0) * mean_part;
  rep.quantity("getep.lhs", I1);
  rep.quantity("getep.rhs", getep_rhs);
  rep.assert_ge("getep.margin", I1 - getep_rhs, -1e-10 * std::abs(I1));
  rep.quantity("coercive_per_s2", coercive);

  std::vector<double> res;
  double min_r = std::numeric_limits<double>::infinity(), min_h = min_r, min_v = min_r;
  for (std::size_t k = 0; k < c.scales.size(); ++k) {
    const double s = c.scales[k];
    const Integrals I = integrate_terms(sc, h, s, lam);
    const double lhs2 = -8.0 * (n - 1) * I.v(slot::dV) - 4.0 * I.v(slot::dR) - 4.0 * I.s(slot::dH_w);
    const double quad = s * s * (I1 + Q.s(slot::coercive));
    res.push_back(lhs2 - quad);
    rep.quantity("lhs2_s" + std::to_string(k), lhs2);
    rep.quantity("coercive_s" + std::to_string(k), s * s * coercive);
    min_r = std::min(min_r, I.vol_min[slot::dR]);
    min_h = std::min(min_h, I.surf_min[slot::dH]);
    min_v = std::min(min_v, I.v(slot::dV));
  }
  rep.order("lhs2_identity_order", c.scales, res, c.tol.scaling_order);
  {
    const double s = c.scales.back();
    const double lhs2 = res.back() + s * s * (I1 + Q.s(slot::coercive));
    rep.assert_ge("lhs2_minus_coercive_smallest_scale", lhs2 - s * s * coercive, 0.0);
  }
  rep.hypothesis("R(g)>=n(n-1)", min_r);
  rep.hypothesis("H(g)>=Hbar", min_h);
  rep.hypothesis("V(g)>=V(gbar)", min_v);
  rep.finish();
  return rep;
}

// ---------------------------------------------------------------------------
// Flat volume bound.

template <int N>
struct BoundaryConstants {
  double c1 = 0.0;           // min over nodes of the smallest eigenvalue of -Q1 against |h|^2
  double c2 = 0.0;           // max over nodes of the largest eigenvalue of Q0 against |h|^2
  double sharp = 0.0;        // smallest L with L Q1 + Q0 < 0 at every node
  double ii_min_eig = 0.0;   // min eigenvalue of II + Hbar gamma
};

/// Per-node quadratic forms in (h_nn, X) of the boundary terms with
/// lambda = -|x - a|^2 / (2(n-1)) + L, split as L Q1 + Q0.
template <int N>
BoundaryConstants<N> boundary_constants(const Scene<N>& sc) {
  BoundaryConstants<N> bc;
  bc.c1 = std::numeric_limits<double>::infinity();
  bc.c2 = -bc.c1;
  bc.sharp = -bc.c1;
  bc.ii_min_eig = bc.c1;
  const Vec<N> a = sc.domain.base_point;
  for (const auto& node : sc.surface.geometry.nodes) {
    const double hbar = node.mean_curvature;
    const FrameMat<N> ii = node.second_form + hbar * FrameMat<N>::Identity();
    bc.ii_min_eig = std::min(bc.ii_min_eig, Eigen::SelfAdjointEigenSolver<FrameMat<N>>(ii).eigenvalues().minCoeff());
    Mat<N> q1 = Mat<N>::Zero(), metric = Mat<N>::Identity();
    q1(0, 0) = -0.25 * hbar;
    q1.template bottomRightCorner<N - 1, N - 1>() = -0.5 * ii;
    metric.template bottomRightCorner<N - 1, N - 1>() *= 2.0;
    const Vec<N> d = node.x - a;
    const Vec<N> grad = -d / (N - 1.0);  // L-independent part of d lambda
    const double lam0 = -d.squaredNorm() / (2.0 * (N - 1));
    const double lam_n = node.normal.dot(grad);
    Mat<N> q0 = lam0 * q1;
    q0(0, 0) += -lam_n;
    for (int k = 1; k < N; ++k) {
      q0(k, k) += -0.5 * lam_n;
      q0(0, k) = q0(k, 0) = -0.5 * node.frame[k - 1].dot(grad);
    }
    const Mat<N> neg = -q1;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat<N>> e1(neg, metric, Eigen::EigenvaluesOnly);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat<N>> e2(q0, metric, Eigen::EigenvaluesOnly);
    bc.c1 = std::min(bc.c1, e1.eigenvalues().minCoeff());
    bc.c2 = std::max(bc.c2, e2.eigenvalues().maxCoeff());
    if (e1.eigenvalues().minCoeff() > 0.0) {
      Eigen::GeneralizedSelfAdjointEigenSolver<Mat<N>> e3(q0, neg, Eigen::EigenvaluesOnly);
      bc.sharp = std::max(bc.sharp, e3.eigenvalues().maxCoeff());
    }
  }
  return bc;
}

template <int N>
CheckReport check_volume_bound_flat(const ScenarioConfig& cfg) {
  CheckReport rep("volume-bound");
  ScenarioConfig c = cfg;
  if (c.background.empty()) c.background = "flat";
  if (c.background != "flat") throw ConfigError("volume-bound needs the flat background");
  c = with_defaults(c, "flat", "ball");
  const Scene<N> sc = make_scene<N>(c);
  const double n = N;

  const BoundaryConstants<N> k = boundary_constants(sc);
  rep.quantity("II+Hbar*gamma.min_eig", k.ii_min_eig);
  rep.hypothesis("II+Hbar*gamma>0", k.ii_min_eig);
  rep.assert_gt("II+Hbar*gamma.min_eig", k.ii_min_eig, 0.0);
  rep.quantity("C1", k.c1);
  rep.quantity("C2", k.c2);
  const double crude = k.c2 > 0.0 ? k.c2 / k.c1 : 0.0;
  rep.quantity("L_threshold_crude", crude);
  rep.quantity("L_threshold_sharp", k.sharp);
  const double lmin = minimal_level(sc.domain);
  if (sc.domain.kind == DomainKind::EuclideanBall && (sc.domain.base_point - sc.domain.center).norm() < 1e-14) {
    const double remark = (1.0 / (2.0 * (n - 1)) + 4.0 / ((n - 1) * (n - 1))) * sc.domain.radius * sc.domain.radius;
    rep.quantity("L_threshold_ball_remark", remark);
    rep.assert_le("L_threshold_vs_remark", crude, remark * (1.0 + 1e-12));
  }
  const double L = 1.1 * std::max(crude, lmin);
  const double m = 0.25 * (L - lmin);
  rep.quantity("L", L);
  rep.quantity("m", m);
  rep.assert_gt("LC1-C2", L * k.c1 - k.c2, 0.0);

  const PolyTensorField<N> h = constrained_h(sc, c, ConstraintSpec::gauge(), rep);
  const LambdaFn<N> lam = make_lambda(sc, "quadratic", L);
  const Integrals Q = integrate_terms(sc, h, 1.0, lam, false);
  const double lb_unit = 0.5 * (m * Q.v(slot::grad) + (L * k.c1 - k.c2) * Q.s(slot::h2_surf));
  double min_h = std::numeric_limits<double>::infinity();
  std::vector<double> margins;
  for (std::size_t j = 0; j < c.scales.size(); ++j) {
    const double s = c.scales[j];
    const Integrals I = integrate_terms(sc, h, s, lam);
    const double conclusion = I.v(slot::dV) - 0.5 * I.v(slot::dR_lam);
    const double margin = conclusion - 0.5 * I.s(slot::dH_lam);
    margins.push_back(margin);
    const std::string t = "_s" + std::to_string(j);
    rep.assert_ge("conclusion" + t, conclusion, -c.tol.identity);
    rep.assert_gt("margin" + t, margin, 0.0);
    rep.quantity("margin_over_s2" + t, margin / (s * s));
    rep.quantity("lower_bound" + t, s * s * lb_unit);
    min_h = std::min(min_h, I.surf_min[slot::dH]);
  }
  const double s_min = c.scales.back();
  rep.assert_ge("margin_vs_lower_bound", margins.back() - s_min * s_min * lb_unit, 0.0);
  rep.order("margin_order", c.scales, margins, 1.9);
  rep.hypothesis("H(g)>=Hbar", min_h);
  rep.finish();
  return rep;
}

// ---------------------------------------------------------------------------
// Convex cap algebra.

inline double theta_factor(double theta) {
  const double c = std::cos(theta);
  return 0.5 * (5.0 * c + std::sqrt(c * c + 8.0));
}

template <int N>
CheckReport check_convex_cap(const ScenarioConfig& cfg) {
  CheckReport rep("convex-cap");
  // (a) theta sweep.
  const int samples = cfg.samples;
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 1; k < samples; ++k) worst = std::min(worst, 4.0 - theta_factor(pi * k / (samples - 1.0)));
  rep.assert_le("sweep.equality_at_zero", std::abs(4.0 - theta_factor(0.0)), 1e-12);
  rep.assert_gt("sweep.min_away_from_zero", worst, 0.0);
  rep.quantity("sweep.factor_at_half_pi", theta_factor(pi / 2));

  // (b) nodewise quadratic form on the cap.
  ScenarioConfig c = cfg;
  c.background = "sphere";
  if (c.domain.kind.empty() || c.domain.kind == "ball") {
    c.domain = DomainConfig{};
    c.domain.kind = "cap";
    c.domain.delta = 0.4;
    c.domain.offset = 0.2;
  }
  const Scene<N> sc = make_scene<N>(c);
  rep.hypothesis("inside_ball_radius_below_half_pi", pi / 2 - (sc.domain.offset + sc.domain.delta));
  const auto cosr = static_potential_field(sc.space, sc.domain, PotentialKind::SphereCos);
  double cond = std::numeric_limits<double>::infinity(), amin = cond, cmin = cond, dmin = cond, geo = 0.0;
  std::vector<std::array<double, 3>> forms;
  for (const auto& node : sc.surface.geometry.nodes) {
    if (!node.has_angle) continue;
    const double cc = node.c_lower + c.c;
    const double hc = node.mean_curvature - cc;
    const double sr = std::sin(node.r), cr = std::cos(node.r), st = std::sin(node.theta);
    cond = std::min(cond, hc - theta_factor(node.theta) * std::tan(node.r));
    const double A = 0.25 * hc * cr - sr * node.cos_theta;
    const double B = sr * st;
    const double C = 0.5 * (hc * cr - sr * node.cos_theta);
    amin = std::min(amin, A);
    cmin = std::min(cmin, C);
    dmin = std::min(dmin, 4.0 * A * C - B * B);
    forms.push_back({A, B, C});
    // lambda_n = -sin r cos theta and |grad_Sigma lambda| = sin r sin theta.
    const ScalarJet<N> l = cosr.jet(node.x);
    double tang = 0.0;
    for (int a = 0; a < N - 1; ++a) tang += std::pow(node.frame[a].dot(l.grad), 2);
    geo = std::max({geo, std::abs(node.normal.dot(l.grad) + sr * node.cos_theta), std::abs(std::sqrt(tang) - B)});
  }
  rep.hypothesis("convexity_condition", cond);
  rep.quantity("convexity_condition.min_margin", cond);
  rep.assert_le("potential_derivatives", geo, 1e-12);
  rep.assert_ge("form.A_min", amin, 0.0);
  rep.assert_ge("form.C_min", cmin, 0.0);
  rep.assert_ge("form.discriminant_min", dmin, 0.0);

  // (c) random (|h_nn|, |X|) samples.
  std::mt19937_64 rng(cfg.seed + 17);
  std::uniform_int_distribution<std::size_t> pick(0, forms.size() - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double smin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const auto& [A, B, C] = forms[pick(rng)];
    const double x = std::abs(gauss(rng)), y = std::abs(gauss(rng));
    smin = std::min(smin, (A * x * x - B * x * y + C * y * y) / (x * x + y * y));
  }
  rep.assert_ge("form.sampled_min", smin, 0.0);
  rep.finish();
  return rep;
}

// ---------------------------------------------------------------------------
// Flat rigidity with lambda = 1.

template <int N>
CheckReport check_flat_rigidity(const ScenarioConfig& cfg) {
  CheckReport rep("flat-rigidity");
  ScenarioConfig c = cfg;
  if (c.background.empty()) c.background = "flat";
  if (c.background != "flat") throw ConfigError("flat-rigidity needs the flat background");
  c = with_defaults(c, "flat", "ball");
  const Scene<N> sc = make_scene<N>(c);
  const PolyTensorField<N> h = constrained_h(sc, c, ConstraintSpec::gauge(), rep);
  const LambdaFn<N> one = make_lambda(sc, "one");
  std::vector<double> lhs_s2, rhs;
  double min_r = std::numeric_limits<double>::infinity(), min_h = min_r;
  for (std::size_t k = 0; k < c.scales.size(); ++k) {
    const double s = c.scales[k];
    const Integrals I = integrate_terms(sc, h, s, one);
    const double lhs = I.v(slot::grad_lam) - I.s(slot::bq_lam);
    const double r = I.v(slot::dR) + I.s(slot::dH_w) + lhs;
    lhs_s2.push_back(lhs / (s * s));
    rhs.push_back(r);
    const std::string t = "_s" + std::to_string(k);
    rep.quantity("lhs" + t, lhs);
    rep.quantity("rhs" + t, r);
    rep.quantity("rhs_over_s3" + t, r / (s * s * s));
    rep.assert_gt("lhs_minus_rhs" + t, lhs - std::abs(r), 0.0);
    min_r = std::min(min_r, I.vol_min[slot::dR]);
    min_h = std::min(min_h, I.surf_min[slot::dH]);
  }
  const auto [lo, hi] = std::minmax_element(lhs_s2.begin(), lhs_s2.end());
  rep.assert_le("lhs_over_s2_spread", (*hi - *lo) / std::abs(*hi), 0.01);
  rep.order("rhs_order", c.scales, rhs, c.tol.scaling_order);
  rep.hypothesis("R(g)>=0", min_r);
  rep.hypothesis("H(g)>=Hbar", min_h);
  rep.finish();
  return rep;
}

// ---------------------------------------------------------------------------
// Brown-York type integral.

template <int N>
CheckReport check_brown_york(const ScenarioConfig& cfg) {
  CheckReport rep("brown-york");
  ScenarioConfig c = cfg;
  if (c.background.empty()) c.background = "flat";
  if (c.background != "flat") throw ConfigError("brown-york needs the flat background");
  c = with_defaults(c, "flat", "ball");
  const Scene<N> sc = make_scene<N>(c);
  double ii_min = std::numeric_limits<double>::infinity();
  for (const auto& node : sc.surface.geometry.nodes) {
    const FrameMat<N> m = node.second_form + node.mean_curvature * FrameMat<N>::Identity();
    ii_min = std::min(ii_min, Eigen::SelfAdjointEigenSolver<FrameMat<N>>(m).eigenvalues().minCoeff());
  }
  rep.hypothesis("II+Hbar*gamma>=0", ii_min);
  const PolyTensorField<N> h = constrained_h(sc, c, ConstraintSpec::all(), rep);
  const LambdaFn<N> one = make_lambda(sc, "one");

  // (a) linear family, five-point stencil.
  auto Q = [&](double t) {
    if (t == 0.0) return 0.0;
    const Integrals I = integrate_terms(sc, h, t, one);
    return I.v(slot::dR) + 2.0 * I.s(slot::dH);
  };
  const double a = 0.5 * c.t1;
  const double qm2 = Q(-2 * a), qm1 = Q(-a), q0 = Q(0.0), qp1 = Q(a), qp2 = Q(2 * a);
  const double d1 = (-qp2 + 8 * qp1 - 8 * qm1 + qm2) / (12 * a);
  const double d2 = (-qp2 + 16 * qp1 - 30 * q0 + 16 * qm1 - qm2) / (12 * a * a);
  const double wide = (qp2 - 2 * q0 + qm2) / (4 * a * a);
  const double narrow = (qp1 - 2 * q0 + qm1) / (a * a);
  const Integrals I = integrate_terms(sc, h, 1.0, one, false);
  const double target = -0.5 * I.v(slot::grad) - I.s(slot::by);
  rep.quantity("Q'' three-point t1", wide);
  rep.quantity("Q'' three-point t1/2", narrow);
  rep.quantity("Q'' richardson", (4 * narrow - wide) / 3);
  rep.quantity("Q'' target", target);
  rep.quantity("boundary_term", I.s(slot::by));
  rep.assert_le("Q'(0)", std::abs(d1), c.tol.stencil);
  rep.assert_le("Q''(0) relative error", std::abs(d2 - target) / std::abs(target), c.tol.relative);
  rep.assert_lt("Q''(0)", d2, 0.0);

  // (b) conformal family with R(g(t)) = 0.
  ConformalOptions opt;
  opt.degree = c.conformal_degree;
  const double hbar_area = integrate(sc.surface, [&](std::size_t i) { return sc.surface.geometry.nodes[i].mean_curvature; });
  rep.quantity("int_Hbar", hbar_area);
  std::map<double, double> by;
  for (double mag : c.family_t)
    for (double t : {-mag, mag}) {
      const ConformalSolution<N> sol = conformal_zero_scalar(sc.space, sc.domain, h, t, opt);
      const double hg = integrate(sc.surface, [&](std::size_t i) {
        const Vec<N>& x = sc.surface.geometry.nodes[i].x;
        return mean_curvature(family_metric(sc.space, h, t, x, &sol), sc.ball(), x);
      });
      by[t] = hbar_area - hg;
      std::ostringstream name;
      name << std::showpos << t;
      rep.quantity("conformal.scalar_residual t=" + name.str(), sol.scalar_residual);
      rep.quantity("conformal.min_u t=" + name.str(), sol.min_u);
      rep.assert_gt("brown_york t=" + name.str(), by[t], 0.0);
    }
  if (c.family_t.size() >= 2) {
    const double t1 = c.family_t[0], t2 = c.family_t[1];
    const double expect = (t2 / t1) * (t2 / t1);
    for (double sign : {-1.0, 1.0}) {
      const double ratio = by[sign * t2] / by[sign * t1];
      const std::string tag = sign > 0 ? "+" : "-";
      rep.quantity("brown_york ratio " + tag, ratio);
      rep.assert_le("brown_york ratio error " + tag, std::abs(ratio / expect - 1.0), c.tol.ratio);
    }
  }
  rep.finish();
  return rep;
}

// ---------------------------------------------------------------------------
// Dispatch.

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"intdr",       "main-formula", "volume-corollary", "hemisphere",
                                              "volume-bound", "convex-cap",   "flat-rigidity",    "brown-york"};
  return names;
}

template <int N>
CheckReport run_scenario_n(const std::string& name, const ScenarioConfig& cfg) {
  if (name == "intdr") return check_intDR<N>(cfg);
  if (name == "main-formula") return check_main_formula<N>(cfg);
  if (name == "volume-corollary") return check_volume_corollary<N>(cfg);
  if (name == "hemisphere") return check_hemisphere_chain<N>(cfg);
  if (name == "volume-bound") return check_volume_bound_flat<N>(cfg);
  if (name == "convex-cap") return check_convex_cap<N>(cfg);
  if (name == "flat-rigidity") return check_flat_rigidity<N>(cfg);
  if (name == "brown-york") return check_brown_york<N>(cfg);
  throw ConfigError("unknown scenario '" + name + "'");
}

inline CheckReport run_scenario(const std::string& name, const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.n == 3) return run_scenario_n<3>(name, cfg);
  if (cfg.n == 4) return run_scenario_n<4>(name, cfg);
  throw ConfigError("scenarios support n = 3 or 4");
}

}  // namespace rigidity
