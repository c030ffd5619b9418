#pragma once
// Exact curvature of perturbed metrics, the linearized operators at the
// background, and the second-order expansion remainders. Pointwise versions
// act on jets; grid versions differentiate sampled fields.

#include "rigidity/fields.hpp"
#include "rigidity/quadrature.hpp"

namespace rigidity {

// ---------------------------------------------------------------------------
// Exact quantities.

/// Scalar curvature of a metric from its own Christoffel symbols:
/// R = g^{ij}(d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik).
template <int N>
double scalar_curvature(const MetricJet<N>& jet) {
  const Connection<N> c = connection_from_jet(jet);
  double r = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const double gij = c.ginv(i, j);
      if (gij == 0.0) continue;
      double s = 0.0;
      for (int k = 0; k < N; ++k) {
        s += c.dgamma[k][k](i, j) - c.dgamma[j][k](i, k);
        for (int l = 0; l < N; ++l) s += c.gamma[k](k, l) * c.gamma[l](i, j) - c.gamma[k](j, l) * c.gamma[l](i, k);
      }
      r += gij * s;
    }
  return r;
}

template <int N>
MetricJet<N> perturbed(const MetricJet<N>& bg, const SymJet<N>& h) {
  MetricJet<N> g = bg;
  g.g += h.v;
  for (int k = 0; k < N; ++k) {
    g.dg[k] += h.d[k];
    for (int l = 0; l < N; ++l) g.ddg[k][l] += h.dd[k][l];
  }
  return g;
}

/// Unit normal of the level sets of f extended off the boundary, with its
/// coordinate derivatives: up[i] = nu^i, down[j] = nu_j, dup(i, k) = d_k nu^i,
/// ddown(j, k) = d_k nu_j.
template <int N>
struct NormalExtension {
  Vec<N> up, down;
  Mat<N> dup, ddown;
};

template <int N>
NormalExtension<N> normal_extension(const MetricJet<N>& jet, const Mat<N>& ginv, const ScalarJet<N>& f) {
  NormalExtension<N> ne;
  const Vec<N> w = ginv * f.grad;
  const double n2 = f.grad.dot(w);
  if (!(n2 > 0.0)) throw MetricError("level set gradient has no positive length");
  const double nn = std::sqrt(n2);
  Mat<N> dw;  // dw(i, k) = d_k w^i
  for (int k = 0; k < N; ++k) dw.col(k) = -ginv * jet.dg[k] * w + ginv * f.hess.col(k);
  const Vec<N> dn2 = f.hess * w + dw.transpose() * f.grad;
  ne.up = w / nn;
  ne.down = f.grad / nn;
  ne.dup = dw / nn - w * dn2.transpose() / (2.0 * n2 * nn);
  ne.ddown = f.hess / nn - f.grad * dn2.transpose() / (2.0 * n2 * nn);
  return ne;
}

/// Mean curvature of the ball boundary through x in the metric jet, outward normal.
template <int N>
double mean_curvature(const MetricJet<N>& jet, const ChartBall<N>& ball, const Vec<N>& x) {
  const Connection<N> c = connection_from_jet(jet);
  const NormalExtension<N> ne = normal_extension(jet, c.ginv, level_set_jet(ball, x));
  double h = ne.dup.trace();
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < N; ++k) h += c.gamma[i](i, k) * ne.up[k];
  return h;
}

/// Induced boundary metric in the background frame; a degenerate one is a metric error.
template <int N>
FrameMat<N> induced_metric(const BoundaryNode<N>& node, const Mat<N>& gbar_plus_h) {
  FrameMat<N> m;
  for (int a = 0; a < N - 1; ++a)
    for (int b = 0; b < N - 1; ++b) m(a, b) = node.frame[a].dot(gbar_plus_h * node.frame[b]);
  Eigen::SelfAdjointEigenSolver<FrameMat<N>> es(m);
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw MetricError("degenerate induced boundary metric");
  return m;
}

// ---------------------------------------------------------------------------
// Linearized operators at the background.

/// DR(h) = -Laplacian(tr h) + div div h - <Ric, h>, Ric = ricci_factor * gbar.
template <int N>
double linearized_scalar(const CovJet<N>& h, const Mat<N>& ginv, double ricci_factor) {
  double lap_tr = 0.0, divdiv = 0.0;
  for (int k = 0; k < N; ++k)
    for (int l = 0; l < N; ++l) {
      if (ginv(k, l) != 0.0) lap_tr += ginv(k, l) * trace(h.dd[k][l], ginv);
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) divdiv += ginv(i, k) * ginv(j, l) * h.dd[k][l](i, j);
    }
  return -lap_tr + divdiv - ricci_factor * trace(h.v, ginv);
}

/// DR*(lambda) = -(Laplacian lambda) gbar + Hess lambda - lambda Ric.
template <int N>
Mat<N> adjoint_DRstar(const ScalarJet<N>& lam, const Connection<N>& c, const Mat<N>& gbar, double ricci_factor) {
  const Mat<N> hess = covariant_hessian(lam, c);
  return -trace(hess, c.ginv) * gbar + hess - lam.value * ricci_factor * gbar;
}

/// Frame components of h and its first covariant derivative at a boundary node.
template <int N>
struct BoundaryComponents {
  double hnn = 0.0;
  std::array<double, N - 1> x{};  // X_alpha = h(e_alpha, nu)
  double x2 = 0.0;                // |X|^2
  double tangential = 0.0;        // max |h(e_alpha, e_beta)|
};

template <int N>
BoundaryComponents<N> boundary_components(const BoundaryNode<N>& node, const Mat<N>& h) {
  BoundaryComponents<N> bc;
  bc.hnn = node.normal.dot(h * node.normal);
  for (int a = 0; a < N - 1; ++a) {
    bc.x[a] = node.frame[a].dot(h * node.normal);
    bc.x2 += bc.x[a] * bc.x[a];
    for (int b = 0; b < N - 1; ++b) bc.tangential = std::max(bc.tangential, std::abs(node.frame[a].dot(h * node.frame[b])));
  }
  return bc;
}

/// (Nabla_c h)(a, b) for contravariant vectors a, b, c.
template <int N>
double cov_component(const std::type_identity_t<Rank3<N>>& d, const Vec<N>& a, const Vec<N>& b, const Vec<N>& c) {
  double s = 0.0;
  for (int k = 0; k < N; ++k)
    if (c[k] != 0.0) s += c[k] * a.dot(d[k] * b);
  return s;
}

/// Sum over the frame of 2 Nabla_{e_a} h(e_a, nu) - Nabla_nu h(e_a, e_a).
template <int N>
double frame_derivative_sum(const BoundaryNode<N>& node, const std::type_identity_t<Rank3<N>>& d) {
  double s = 0.0;
  for (int a = 0; a < N - 1; ++a)
    s += 2.0 * cov_component(d, node.frame[a], node.normal, node.frame[a]) -
         cov_component(d, node.frame[a], node.frame[a], node.normal);
  return s;
}

enum class DHForm { BM, MT };

inline std::string to_string(DHForm f) { return f == DHForm::BM ? "BM" : "MT"; }

template <int N>
void require_tangential_zero(const BoundaryNode<N>& node, const Mat<N>& h, double tol) {
  const double t = boundary_components(node, h).tangential;
  if (t > tol) throw PreconditionError("h restricted to the boundary is not zero: max violation " + std::to_string(t));
}

/// Divergence on the boundary of X, the tangential part of h(nu, .), through
/// the extension nu = grad f / |grad f|.
template <int N>
double boundary_divergence_x(const BoundaryNode<N>& node, const SymJet<N>& h, const MetricJet<N>& bg,
                             const Connection<N>& c, const ChartBall<N>& ball) {
  const NormalExtension<N> ne = normal_extension(bg, c.ginv, level_set_jet(ball, node.x));
  const Vec<N> y = h.v * ne.up;
  Mat<N> dy;  // dy(k, i) = d_i Y_k
  for (int i = 0; i < N; ++i) dy.col(i) = h.d[i] * ne.up + h.v * ne.dup.col(i);
  const double s = y.dot(ne.up);
  const Vec<N> ds = dy.transpose() * ne.up + ne.dup.transpose() * y;
  const Vec<N> xl = y - s * ne.down;
  Mat<N> dx;  // dx(i, j) = d_i X_j
  for (int i = 0; i < N; ++i) dx.row(i) = (dy.col(i) - ds[i] * ne.down - s * ne.ddown.col(i)).transpose();
  Mat<N> cov = dx;
  for (int m = 0; m < N; ++m) cov -= c.gamma[m] * xl[m];
  double div = 0.0;
  for (int a = 0; a < N - 1; ++a) div += node.frame[a].dot(cov * node.frame[a]);
  return div;
}

/// DH(h) at a boundary node. Both forms require h|_{T Sigma} = 0 within tol.
template <int N>
double linearized_mean_curvature(const BoundaryNode<N>& node, const SymJet<N>& h, const MetricJet<N>& bg,
                                 const ChartBall<N>& ball, DHForm form, double tol = 1e-10) {
  require_tangential_zero(node, h.v, tol);
  const Connection<N> c = connection_from_jet(bg);
  const Rank3<N> d = covariant_gradient<N>(h.v, h.d, c);
  if (form == DHForm::BM) {
    const double hnn = node.normal.dot(h.v * node.normal);
    return 0.5 * (hnn * node.mean_curvature - frame_derivative_sum(node, d));
  }
  const Vec<N> dtr = trace_gradient<N>(d, c.ginv);
  const Vec<N> div = divergence<N>(d, c.ginv);
  return 0.5 * ((dtr - div).dot(node.normal) - boundary_divergence_x(node, h, bg, c, ball));
}

// ---------------------------------------------------------------------------
// Quadratic pieces.

/// (h^2)_ik = gbar^{jl} h_ij h_kl.
template <int N>
Mat<N> h_squared(const Mat<N>& h, const Mat<N>& ginv) {
  return h * ginv * h;
}

/// Covariant jet of h^2 from the covariant jet of h (product rule; gbar is parallel).
template <int N>
CovJet<N> h_squared(const CovJet<N>& h, const Mat<N>& ginv) {
  CovJet<N> q;
  q.v = h.v * ginv * h.v;
  for (int m = 0; m < N; ++m) {
    q.d[m] = h.d[m] * ginv * h.v + h.v * ginv * h.d[m];
    for (int p = 0; p < N; ++p)
      q.dd[m][p] = h.dd[m][p] * ginv * h.v + h.d[m] * ginv * h.d[p] + h.d[p] * ginv * h.d[m] + h.v * ginv * h.dd[m][p];
  }
  return q;
}

/// gbar^{ij} gbar^{kl} gbar^{pq} h_{kp;i} h_{jq;l}.
template <int N>
double cross_gradient(const std::type_identity_t<Rank3<N>>& d, const Mat<N>& ginv) {
  double s = 0.0;
  for (int i = 0; i < N; ++i)
    for (int l = 0; l < N; ++l) {
      const Mat<N> m = d[i] * ginv * d[l];  // m(k, j) = h_{kp;i} g^{pq} h_{qj;l}
      for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) s += ginv(i, j) * ginv(k, l) * m(k, j);
    }
  return s;
}

/// h^{ij} h^{kl} Rbar_ikjl on a constant-curvature background.
template <int N>
double curvature_pairing(const Mat<N>& h, const Mat<N>& ginv, double kappa) {
  const double tr = trace(h, ginv);
  return kappa * (tr * tr - inner(h, h, ginv));
}

/// Nabla_i [ g^{ik} g^{jl} (h_{jl;k} - h_{jk;l}) ] with the exact inverse of g = gbar + h.
template <int N>
double flux_divergence(const CovJet<N>& h, const Mat<N>& gbar) {
  const Mat<N> gi = (gbar + h.v).inverse();
  // Nabla_m g^{ab} = -g^{ac} h_{cd;m} g^{db}.
  Rank3<N> dgi;
  for (int m = 0; m < N; ++m) dgi[m] = -gi * h.d[m] * gi;
  double s = 0.0;
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < N; ++j)
        for (int l = 0; l < N; ++l) {
          const double a = h.d[k](j, l) - h.d[l](j, k);
          const double da = h.dd[k][i](j, l) - h.dd[l][i](j, k);
          s += (dgi[i](i, k) * gi(j, l) + gi(i, k) * dgi[i](j, l)) * a + gi(i, k) * gi(j, l) * da;
        }
  return s;
}

/// Interior expansion of R(gbar + h) at one point.
struct ScalarExpansion {
  double exact = 0.0;          // R(g) - R(gbar)
  double linear = 0.0;         // DR(h)
  double bm_residual = 0.0;    // remainder of the pointwise expansion with the flux term
  double lemma_residual = 0.0; // E + div E1 of the divergence-free form
};

template <int N>
ScalarExpansion scalar_expansion(const MetricJet<N>& bg, const SymJet<N>& h, double kappa) {
  const Connection<N> c = connection_from_jet(bg);
  const Mat<N>& gi = c.ginv;
  if (std::sqrt(std::max(0.0, inner(h.v, h.v, gi))) > 0.5) throw RangeError("|h| exceeds 1/2");
  const double ric = (N - 1) * kappa;
  const CovJet<N> ch = covariant_derivative(h, c);
  const Mat<N> h2 = h_squared(h.v, gi);
  const double tr = trace(h.v, gi);
  const double dh2 = norm2<N>(ch.d, gi);
  const double dtr2 = covector_norm2(trace_gradient<N>(ch.d, gi), gi);

  ScalarExpansion e;
  e.exact = scalar_curvature(perturbed(bg, h)) - N * (N - 1) * kappa;
  e.linear = linearized_scalar(ch, gi, ric);
  e.bm_residual = e.exact + ric * tr - ric * trace(h2, gi) + 0.25 * dh2 - 0.5 * cross_gradient(ch.d, gi) +
                  0.25 * dtr2 + flux_divergence(ch, bg.g);

  Mat<N> hess_tr = Mat<N>::Zero();
  for (int k = 0; k < N; ++k)
    for (int l = 0; l < N; ++l) hess_tr(k, l) = trace(ch.dd[k][l], gi);
  const double dr_h2 = linearized_scalar(h_squared(ch, gi), gi, ric);
  e.lemma_residual = e.exact - (e.linear - 0.5 * dr_h2 + inner(h.v, hess_tr, gi) - 0.25 * (dh2 + dtr2) +
                                0.5 * curvature_pairing(h.v, gi, kappa));
  return e;
}

/// Boundary expansion of H(gbar + h) at one node.
struct MeanExpansion {
  double exact = 0.0;     // 2[H(g) - Hbar]
  double dh = 0.0;        // DH(h)
  double j = 0.0;         // J(h)
  double f2 = 0.0;        // 2[H - Hbar] - 2 DH - J
  double residual = 0.0;  // remainder of the displayed second-order expansion
};

template <int N>
MeanExpansion mean_expansion(const BoundaryNode<N>& node, const MetricJet<N>& bg, const SymJet<N>& h,
                             const ChartBall<N>& ball, double tol = 1e-10) {
  const Connection<N> c = connection_from_jet(bg);
  if (std::sqrt(std::max(0.0, inner(h.v, h.v, c.ginv))) > 0.5) throw RangeError("|h| exceeds 1/2");
  require_tangential_zero(node, h.v, tol);
  const Rank3<N> d = covariant_gradient<N>(h.v, h.d, c);
  const BoundaryComponents<N> bc = boundary_components(node, h.v);
  const double hbar = node.mean_curvature;
  const double fsum = frame_derivative_sum(node, d);
  MeanExpansion m;
  m.exact = 2.0 * (mean_curvature(perturbed(bg, h), ball, node.x) - hbar);
  m.dh = 0.5 * (bc.hnn * hbar - fsum);
  m.j = (0.25 * bc.hnn * bc.hnn + bc.x2) * hbar - bc.hnn * m.dh;
  m.f2 = m.exact - 2.0 * m.dh - m.j;
  m.residual = m.exact - (bc.hnn - 0.25 * bc.hnn * bc.hnn + bc.x2) * hbar + (1.0 - 0.5 * bc.hnn) * fsum;
  return m;
}

// ---------------------------------------------------------------------------
// Boundary identities for divergence-free h with h|_{T Sigma} = 0.

struct BoundaryFacts {
  double norm_split = 0.0;      // |h|^2 = h_nn^2 + 2|X|^2
  double square_nn = 0.0;       // (h^2)_nn = h_nn^2 + |X|^2
  double square_na = 0.0;       // (h^2)_{n alpha} = h_nn h_{n alpha}
  double square_grad = 0.0;     // (h^2)(nu, grad lambda)
  double tangential_grad = 0.0; // h_{beta gamma; alpha}
  double normal_grad = 0.0;     // h_{nn; alpha}
  double div_tangential = 0.0;  // (div h)_alpha = 0
  double div_normal = 0.0;      // (div h)_n = 0
  double dh_trace = 0.0;        // 2 DH = (tr h)_{;n} - div_Sigma X

  double max() const {
    return std::max({norm_split, square_nn, square_na, square_grad, tangential_grad, normal_grad, div_tangential,
                     div_normal, dh_trace});
  }
  void absorb(const BoundaryFacts& o) {
    norm_split = std::max(norm_split, o.norm_split);
    square_nn = std::max(square_nn, o.square_nn);
    square_na = std::max(square_na, o.square_na);
    square_grad = std::max(square_grad, o.square_grad);
    tangential_grad = std::max(tangential_grad, o.tangential_grad);
    normal_grad = std::max(normal_grad, o.normal_grad);
    div_tangential = std::max(div_tangential, o.div_tangential);
    div_normal = std::max(div_normal, o.div_normal);
    dh_trace = std::max(dh_trace, o.dh_trace);
  }
};

template <int N>
BoundaryFacts boundary_facts(const BoundaryNode<N>& node, const SymJet<N>& h, const ScalarJet<N>& lam,
                             const MetricJet<N>& bg, const ChartBall<N>& ball, double tol = 1e-10) {
  require_tangential_zero(node, h.v, tol);
  const Connection<N> c = connection_from_jet(bg);
  const Mat<N>& gi = c.ginv;
  const Rank3<N> d = covariant_gradient<N>(h.v, h.d, c);
  const BoundaryComponents<N> bc = boundary_components(node, h.v);
  const Mat<N> h2 = h_squared(h.v, gi);
  const Vec<N>& nu = node.normal;
  const double hbar = node.mean_curvature;
  const Vec<N> dtr = trace_gradient<N>(d, gi);
  const Vec<N> div = divergence<N>(d, gi);
  const double div_x = boundary_divergence_x(node, h, bg, c, ball);
  const auto& ii = node.second_form;
  Eigen::Matrix<double, N - 1, 1> xv;
  for (int a = 0; a < N - 1; ++a) xv[a] = bc.x[a];

  BoundaryFacts f;
  f.norm_split = std::abs(inner(h.v, h.v, gi) - bc.hnn * bc.hnn - 2.0 * bc.x2);
  f.square_nn = std::abs(nu.dot(h2 * nu) - bc.hnn * bc.hnn - bc.x2);
  const double lam_n = nu.dot(lam.grad);
  double x_grad = 0.0;
  for (int a = 0; a < N - 1; ++a) {
    const Vec<N>& ea = node.frame[a];
    f.square_na = std::max(f.square_na, std::abs(ea.dot(h2 * nu) - bc.hnn * bc.x[a]));
    x_grad += bc.x[a] * ea.dot(lam.grad);
    for (int b = 0; b < N - 1; ++b) {
      // (Nabla_{e_gamma} h)(e_a, e_b) against h_{a n} II_{b gamma} + h_{n b} II_{a gamma}
      for (int g = 0; g < N - 1; ++g) {
        const double got = cov_component(d, ea, node.frame[b], node.frame[g]);
        f.tangential_grad = std::max(f.tangential_grad, std::abs(got - bc.x[a] * ii(b, g) - bc.x[b] * ii(a, g)));
      }
    }
    const double iix = (ii * xv)[a];
    f.normal_grad = std::max(f.normal_grad, std::abs(cov_component(d, nu, nu, ea) - (dtr.dot(ea) - 2.0 * iix)));
    f.div_tangential = std::max(f.div_tangential, std::abs(div.dot(ea)));
    f.div_tangential =
        std::max(f.div_tangential, std::abs(cov_component(d, ea, nu, nu) + bc.x[a] * hbar + iix - div.dot(ea)));
  }
  // (h^2)(nu, grad lambda) with grad lambda raised by gbar.
  const Vec<N> grad_up = gi * lam.grad;
  f.square_grad = std::abs(nu.dot(h2 * grad_up) - (bc.hnn * bc.hnn + bc.x2) * lam_n - bc.hnn * x_grad);
  f.div_normal = std::max(std::abs(div.dot(nu)),
                          std::abs(cov_component(d, nu, nu, nu) + div_x + bc.hnn * hbar - div.dot(nu)));
  const double dh = 0.5 * (bc.hnn * hbar - frame_derivative_sum(node, d));
  f.dh_trace = std::abs(2.0 * dh - (dtr.dot(nu) - div_x));
  return f;
}

// ---------------------------------------------------------------------------
// Scaling reports.

struct ScalingReport {
  std::vector<double> scales;
  std::vector<double> residuals;
  double order = 0.0;
  double fit_residual = 0.0;
};

inline ScalingReport fit_scaling(std::vector<double> scales, std::vector<double> residuals) {
  ScalingReport r;
  r.scales = std::move(scales);
  r.residuals = std::move(residuals);
  bool all_zero = true;
  for (double v : r.residuals) all_zero = all_zero && v == 0.0;
  if (!all_zero) {
    const LogLogFit f = fit_loglog(r.scales, r.residuals);
    r.order = f.slope;
    r.fit_residual = f.fit_residual;
  }
  return r;
}

/// Max-norm remainders under h -> s h: first the flux form, then the
/// divergence-free form. jet(x) returns the unscaled perturbation jet.
template <int N, class JetFn>
std::pair<ScalingReport, ScalingReport> expansion_residual_R(const BackgroundSpace<N>& space, JetFn&& jet,
                                                             std::span<const Vec<N>> points,
                                                             const std::vector<double>& scales) {
  std::vector<double> bm, lemma;
  for (double s : scales) {
    std::vector<double> a(points.size()), b(points.size());
    parallel_for(points.size(), [&](std::size_t p) {
      SymJet<N> h = jet(points[p]);
      h *= s;
      const ScalarExpansion e = scalar_expansion(space.metric_jet(points[p]), h, space.kappa());
      a[p] = e.bm_residual;
      b[p] = e.lemma_residual;
    });
    bm.push_back(max_abs(a));
    lemma.push_back(max_abs(b));
  }
  return {fit_scaling(scales, bm), fit_scaling(scales, lemma)};
}

template <int N, class JetFn>
ScalingReport expansion_residual_H(const BackgroundSpace<N>& space, JetFn&& jet, const SurfaceRule<N>& rule,
                                   const ChartBall<N>& ball, const std::vector<double>& scales,
                                   double tol = 1e-10) {
  std::vector<double> res;
  for (double s : scales) {
    std::vector<double> a(rule.nodes.size());
    parallel_for(a.size(), [&](std::size_t p) {
      const auto& node = rule.geometry.nodes[p];
      SymJet<N> h = jet(node.x);
      h *= s;
      a[p] = mean_expansion(node, space.metric_jet(node.x), h, ball, tol * std::max(1.0, s)).residual;
    });
    res.push_back(max_abs(a));
  }
  return fit_scaling(scales, res);
}

// ---------------------------------------------------------------------------
// Grid versions.

/// R(g) at every node of a sampled metric, from finite-difference jets of g.
template <int N>
std::vector<double> scalar_curvature(const SymTensorField<N>& g) {
  if (!g.is_metric) throw ShapeError("scalar_curvature needs a field flagged as a metric");
  const GridTensorJetField<N> jets(g);
  std::vector<double> out(g.grid->size());
  parallel_for(out.size(), [&](std::size_t p) {
    const SymJet<N> j = jets.at_node(p);
    MetricJet<N> m;
    m.g = j.v;
    m.dg = j.d;
    m.ddg = j.dd;
    try {
      out[p] = scalar_curvature(m);
    } catch (const MetricError&) {
      out[p] = std::numeric_limits<double>::quiet_NaN();
    }
  });
  for (std::size_t p = 0; p < out.size(); ++p)
    if (std::isnan(out[p])) {
      const Vec<N> x = g.grid->node(p);
      throw MetricError("metric not invertible at node " + std::to_string(p) + " (x0 = " + std::to_string(x[0]) + ")");
    }
  return out;
}

/// H(g) at boundary nodes of a sampled metric, from interpolated jets.
template <int N>
std::vector<double> mean_curvature(const SymTensorField<N>& g, const ChartBall<N>& ball,
                                   const BoundaryGeometry<N>& boundary) {
  const GridTensorJetField<N> jets(g);
  std::vector<double> out(boundary.nodes.size());
  for (std::size_t p = 0; p < out.size(); ++p) {
    const Vec<N>& x = boundary.nodes[p].x;
    const SymJet<N> j = jets(x);
    MetricJet<N> m;
    m.g = j.v;
    m.dg = j.d;
    m.ddg = j.dd;
    induced_metric(boundary.nodes[p], m.g);
    out[p] = mean_curvature(m, ball, x);
  }
  return out;
}

template <int N>
std::vector<double> linearized_scalar(const SymTensorField<N>& h, const BackgroundSpace<N>& space) {
  const GridTensorJetField<N> jets(h);
  std::vector<double> out(h.grid->size());
  parallel_for(out.size(), [&](std::size_t p) {
    const Vec<N> x = h.grid->node(p);
    const Connection<N> c = space.connection_at(x);
    out[p] = linearized_scalar(covariant_derivative(jets.at_node(p), c), c.ginv, space.ricci_factor());
  });
  return out;
}

template <int N>
std::vector<Mat<N>> adjoint_DRstar(const GridScalar<N>& lam, const BackgroundSpace<N>& space) {
  const GridScalarJetField<N> jets(*lam.grid, lam.values);
  std::vector<Mat<N>> out(lam.values.size());
  parallel_for(out.size(), [&](std::size_t p) {
    const Vec<N> x = lam.grid->node(p);
    const MetricJet<N> m = space.metric_jet(x);
    out[p] = adjoint_DRstar(jets.at_node(p), connection_from_jet(m), m.g, space.ricci_factor());
  });
  return out;
}

}  // namespace rigidity
