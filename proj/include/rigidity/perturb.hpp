#pragma once
// Perturbations satisfying the linear constraints, and the conformal family
// g(t) = u(t)^{4/(n-2)} (gbar + t h) with R(g(t)) = 0.
//
// Fields are finite sums of polynomial tensors (times the conformal weight
// ((1+|x|^2)/2)^{n-2} on the sphere) and, on the sphere, DR*(f) for a
// polynomial f, which is divergence free on any constant-curvature
// background. Constraints are collocated at enough points that the
// polynomial constraint functions vanish identically.

#include "rigidity/operators.hpp"
#include "rigidity/poly.hpp"

#include <memory>
#include <random>

namespace rigidity {

struct ConstraintSpec {
  bool divergence_free = false;
  bool trace_free = false;
  bool boundary_tangential_zero = false;
  double tol_div = 1e-10;
  double tol_trace = 1e-10;
  double tol_tangential = 1e-10;

  void validate() const {
    if (!divergence_free && !trace_free && !boundary_tangential_zero)
      throw ConfigError("constraint spec needs at least one flag");
    if (!(tol_div > 0 && tol_trace > 0 && tol_tangential > 0)) throw ConfigError("constraint tolerances must be positive");
  }
  static ConstraintSpec all() { return {true, true, true}; }
  static ConstraintSpec gauge() { return {true, false, true}; }
};

template <int N>
class PolyTensorField {
 public:
  PolyTensorField() = default;
  PolyTensorField(const BackgroundSpace<N>& space, const ChartBall<N>& ball)
      : kappa_(space.kappa()), weighted_(space.is_sphere()), center_(ball.center), scale_(ball.radius) {
    if (space.chart() == ChartKind::Polar) throw ConfigError("polynomial fields need a conformally flat chart");
    for (auto& p : comp_) p = Polynomial<N>(center_, scale_);
    potential_ = Polynomial<N>(center_, scale_);
  }

  Polynomial<N>& component(int i, int j) { return comp_[sym_index(N, i, j)]; }
  const Polynomial<N>& component(int i, int j) const { return comp_[sym_index(N, i, j)]; }
  Polynomial<N>& potential() { return potential_; }
  const Polynomial<N>& potential() const { return potential_; }

  PolyTensorField& add(const PolyTensorField& o, double factor = 1.0) {
    for (int c = 0; c < sym_size(N); ++c) comp_[c].add(o.comp_[c], factor);
    potential_.add(o.potential_, factor);
    derived_.reset();
    return *this;
  }
  PolyTensorField& operator*=(double f) {
    for (auto& p : comp_) p *= f;
    potential_ *= f;
    derived_.reset();
    return *this;
  }

  SymJet<N> jet(const Vec<N>& x) const {
    SymJet<N> h;
    const ScalarJet<N> w = weight(x);
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) {
        const Polynomial<N>& p = component(i, j);
        if (p.empty()) continue;
        h.set_component(i, j, weighted_ ? w * p.jet(x) : p.jet(x));
      }
    if (!potential_.empty()) h += potential_jet(x);
    return h;
  }
  Mat<N> value(const Vec<N>& x) const { return jet(x).v; }

 private:
  // ((1 + |x|^2)/2)^{n-2}, the weight taking Euclidean TT tensors to gbar-TT ones.
  ScalarJet<N> weight(const Vec<N>& x) const {
    ScalarJet<N> s = ScalarJet<N>::constant(1.0);
    for (int i = 0; i < N; ++i) s += ScalarJet<N>::coordinate(x, i) * ScalarJet<N>::coordinate(x, i);
    return pow(0.5 * s, N - 2.0);
  }

  struct Derived {
    std::array<Polynomial<N>, N> d1;
    std::array<std::array<Polynomial<N>, N>, N> d2;
  };

  const Derived& derived() const {
    if (!derived_) {
      auto d = std::make_shared<Derived>();
      for (int i = 0; i < N; ++i) {
        d->d1[i] = potential_.derivative(i);
        for (int j = 0; j < N; ++j) d->d2[i][j] = d->d1[i].derivative(j);
      }
      derived_ = d;
    }
    return *derived_;
  }

  // DR*(f) in the conformal chart gbar = e^{2 phi} delta:
  // f_ij - phi_i f_j - phi_j f_i + delta_ij [(3-n) phi.df - Lap_0 f - (n-1) kappa e^{2 phi} f].
  SymJet<N> potential_jet(const Vec<N>& x) const {
    const Derived& d = derived();
    std::array<ScalarJet<N>, N> fi, phi;
    ScalarJet<N> q = ScalarJet<N>::constant(1.0);
    for (int i = 0; i < N; ++i) q += ScalarJet<N>::coordinate(x, i) * ScalarJet<N>::coordinate(x, i);
    const ScalarJet<N> iq = reciprocal(q);
    for (int i = 0; i < N; ++i) {
      fi[i] = d.d1[i].jet(x);
      phi[i] = weighted_ ? -2.0 * (ScalarJet<N>::coordinate(x, i) * iq) : ScalarJet<N>{};
    }
    ScalarJet<N> diag = ScalarJet<N>{};
    for (int k = 0; k < N; ++k) {
      diag += (3.0 - N) * (phi[k] * fi[k]);
      diag -= d.d2[k][k].jet(x);
    }
    if (kappa_ != 0.0) diag -= ((N - 1) * kappa_ * 4.0) * (iq * iq * potential_.jet(x));
    SymJet<N> h;
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) {
        ScalarJet<N> c = d.d2[i][j].jet(x) - phi[i] * fi[j] - phi[j] * fi[i];
        if (i == j) c += diag;
        h.set_component(i, j, c);
      }
    return h;
  }

  double kappa_ = 0.0;
  bool weighted_ = false;
  Vec<N> center_ = Vec<N>::Zero();
  double scale_ = 1.0;
  std::array<Polynomial<N>, sym_size(N)> comp_;
  Polynomial<N> potential_;
  mutable std::shared_ptr<const Derived> derived_;
};

/// Basis of the ansatz: polynomial tensors up to `degree` and, on the sphere
/// without the trace-free flag, DR*(f) for monomials f of degree 2..potential_degree.
template <int N>
std::vector<PolyTensorField<N>> tensor_basis(const BackgroundSpace<N>& space, const ChartBall<N>& ball, int degree,
                                             int potential_degree, bool with_potential) {
  std::vector<PolyTensorField<N>> basis;
  const auto exps = exponents_up_to<N>(degree);
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j)
      for (const auto& e : exps) {
        PolyTensorField<N> f(space, ball);
        f.component(i, j) = Polynomial<N>::monomial(e, ball.center, ball.radius);
        basis.push_back(f);
      }
  if (with_potential && space.is_sphere()) {
    for (const auto& e : exponents_up_to<N>(potential_degree)) {
      int d = 0;
      for (int k : e) d += k;
      if (d < 2) continue;
      PolyTensorField<N> f(space, ball);
      f.potential() = Polynomial<N>::monomial(e, ball.center, ball.radius);
      basis.push_back(f);
    }
  }
  return basis;
}

/// Constraint residuals of a field at independent nodes.
struct ConstraintResiduals {
  double div = 0.0;
  double trace = 0.0;
  double tangential = 0.0;
};

template <int N, class Field>
ConstraintResiduals constraint_residuals(const BackgroundSpace<N>& space, const Field& h,
                                         std::span<const Vec<N>> interior, const BoundaryGeometry<N>& boundary) {
  ConstraintResiduals r;
  for (const Vec<N>& x : interior) {
    const SymJet<N> j = h.jet(x);
    const Connection<N> c = space.connection_at(x);
    const Rank3<N> d = covariant_gradient<N>(j.v, j.d, c);
    r.div = std::max(r.div, std::sqrt(covector_norm2(divergence<N>(d, c.ginv), c.ginv)));
    r.trace = std::max(r.trace, std::abs(trace(j.v, c.ginv)));
  }
  for (const auto& node : boundary.nodes) r.tangential = std::max(r.tangential, boundary_components(node, h.value(node.x)).tangential);
  return r;
}

struct ProjectionOptions {
  int degree = 4;
  int potential_degree = 6;
  int interior_points = 0;  // 0: chosen from the basis size
  std::uint64_t seed = 20240917;
  QuadratureSize fit = {10, 10, 20};
  double null_tol = 1e-9;
};

template <int N>
struct ProjectionResult {
  PolyTensorField<N> field;
  std::vector<PolyTensorField<N>> basis;
  Eigen::MatrixXd null_space;  // columns: feasible coefficient directions
  int constraint_rows = 0;
  int rank = 0;
  double sigma_gap = 0.0;      // smallest kept over largest dropped singular value
  double seed_norm = 0.0;
  double distance = 0.0;       // L2 distance from the seed on the fitting rule

  PolyTensorField<N> feasible_direction(const Eigen::VectorXd& a) const {
    const Eigen::VectorXd c = null_space * a;
    PolyTensorField<N> f = basis.front();
    f *= 0.0;
    for (int k = 0; k < c.size(); ++k)
      if (c[k] != 0.0) f.add(basis[k], c[k]);
    return f;
  }
};

namespace detail {

template <int N>
std::vector<Vec<N>> interior_points(const ChartBall<N>& ball, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec<N>> pts;
  while (static_cast<int>(pts.size()) < count) {
    Vec<N> y;
    for (int i = 0; i < N; ++i) y[i] = u(rng);
    if (y.norm() < 0.98) pts.push_back(ball.center + ball.radius * y);
  }
  return pts;
}

/// Entries of the diagonal-metric scaling D with <A, B> = sum (D_i D_j A_ij)(D_i D_j B_ij).
template <int N>
Vec<N> inner_scaling(const Mat<N>& ginv) {
  Vec<N> d;
  for (int i = 0; i < N; ++i) d[i] = std::sqrt(ginv(i, i));
  return d;
}

}  // namespace detail

/// Closest field to the seed (L2 over the fitting rule) in the ansatz that
/// satisfies the flagged constraints.
template <int N, class SeedFn>
ProjectionResult<N> project_constraints(const BackgroundSpace<N>& space, const DomainSpec<N>& domain, SeedFn&& seed,
                                        const ConstraintSpec& spec, const ProjectionOptions& opt = {}) {
  spec.validate();
  check_domain(space, domain);
  const ChartBall<N> ball = domain.chart_ball();
  ProjectionResult<N> out;
  out.basis = tensor_basis(space, ball, opt.degree, opt.potential_degree, !spec.trace_free);
  const int K = static_cast<int>(out.basis.size());

  // Collocation rows.
  std::vector<Vec<N>> interior;
  if (spec.divergence_free || spec.trace_free)
    interior = detail::interior_points(ball, opt.interior_points > 0 ? opt.interior_points : std::max(200, K), opt.seed);
  std::vector<Vec<N>> bnodes;
  if (spec.boundary_tangential_zero) {
    const int deg = std::max(opt.degree, opt.potential_degree) + 4;
    QuadratureSize q{1, deg + 1, 2 * deg + 2};
    for (const Vec<N>& u : detail::sphere_directions<N>(q).first) bnodes.push_back(ball.center + ball.radius * u);
  }
  const int per_interior = (spec.divergence_free ? N : 0) + (spec.trace_free ? 1 : 0);
  const int per_boundary = spec.boundary_tangential_zero ? sym_size(N) : 0;
  const int rows = per_interior * static_cast<int>(interior.size()) + per_boundary * static_cast<int>(bnodes.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, K);
  parallel_for(K, [&](std::size_t k) {
    int r = 0;
    for (const Vec<N>& x : interior) {
      const SymJet<N> j = out.basis[k].jet(x);
      const Connection<N> c = space.connection_at(x);
      if (spec.divergence_free) {
        const Vec<N> div = divergence<N>(covariant_gradient<N>(j.v, j.d, c), c.ginv);
        for (int i = 0; i < N; ++i) A(r++, k) = div[i];
      }
      if (spec.trace_free) A(r++, k) = trace(j.v, c.ginv);
    }
    for (const Vec<N>& x : bnodes) {
      const Vec<N> u = (x - ball.center).normalized();
      const Mat<N> p = Mat<N>::Identity() - u * u.transpose();
      const Mat<N> t = p * out.basis[k].value(x) * p;
      for (int i = 0; i < N; ++i)
        for (int j = i; j < N; ++j) A(r++, k) = t(i, j);
    }
  });
  out.constraint_rows = rows;

  // Null space with unit-norm columns.
  Eigen::VectorXd colscale(K);
  for (int k = 0; k < K; ++k) {
    const double n = A.col(k).norm();
    colscale[k] = n > 0 ? 1.0 / n : 1.0;
    A.col(k) *= colscale[k];
  }
  Eigen::MatrixXd Z;
  if (rows > 0) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double smax = s.size() > 0 ? s[0] : 0.0;
    int rank = 0;
    while (rank < s.size() && s[rank] > opt.null_tol * smax) ++rank;
    out.rank = rank;
    if (rank < s.size() && rank > 0) out.sigma_gap = s[rank - 1] / std::max(s[rank], 1e-300);
    else out.sigma_gap = std::numeric_limits<double>::infinity();
    Z = svd.matrixV().rightCols(K - rank);
    Z = colscale.asDiagonal() * Z;
  } else {
    Z = Eigen::MatrixXd::Identity(K, K);
  }
  if (Z.cols() == 0) throw PreconditionError("constraint system has a trivial null space; raise the ansatz degree");
  for (int c = 0; c < Z.cols(); ++c) Z.col(c).normalize();
  out.null_space = Z;

  // Least-squares fit in the gbar inner product.
  const VolumeRule<N> rule = ball_volume_rule(space, domain, opt.fit);
  const int M = static_cast<int>(rule.nodes.size());
  const int E = N * N;
  Eigen::MatrixXd Phi(M * E, K);
  Eigen::VectorXd b(M * E);
  parallel_for(M, [&](std::size_t q) {
    const Vec<N>& x = rule.nodes[q];
    const Vec<N> d = detail::inner_scaling<N>(space.connection_at(x).ginv);
    const double sw = std::sqrt(rule.weights[q]);
    const Mat<N> sv = seed(x);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) b[q * E + i * N + j] = sw * d[i] * d[j] * sv(i, j);
    for (int k = 0; k < K; ++k) {
      const Mat<N> v = out.basis[k].value(x);
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) Phi(q * E + i * N + j, k) = sw * d[i] * d[j] * v(i, j);
    }
  });
  out.seed_norm = b.norm();
  if (!(out.seed_norm > 0.0)) throw PreconditionError("seed is zero");
  const Eigen::MatrixXd PZ = Phi * Z;
  const Eigen::VectorXd a = PZ.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd fitted = PZ * a;
  if (fitted.norm() < 1e-10 * out.seed_norm)
    throw PreconditionError("degenerate seed: orthogonal to every feasible direction");
  out.distance = (fitted - b).norm();
  out.field = out.feasible_direction(a);
  return out;
}

// ---------------------------------------------------------------------------
// Seeds. Both are supported in the inner half of the chart ball.

inline double bump(double t) {
  if (t >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - t * t));
}

/// Radial bump times a fixed symmetric tensor.
template <int N>
auto radial_bump_seed(const ChartBall<N>& ball, const Mat<N>& tensor) {
  return [ball, tensor](const Vec<N>& x) -> Mat<N> {
    return bump(2.0 * (x - ball.center).norm() / ball.radius) * tensor;
  };
}

/// (y_0^2 - y_1^2) bump(|y|) (e_0 e_1 + e_1 e_0), y scaled to the inner half.
/// Rotation-equivariant seeds project to zero, so this one is not.
template <int N>
auto quadrupole_seed(const ChartBall<N>& ball) {
  return [ball](const Vec<N>& x) -> Mat<N> {
    const Vec<N> y = 2.0 * (x - ball.center) / ball.radius;
    Mat<N> t = Mat<N>::Zero();
    t(0, 1) = t(1, 0) = (y[0] * y[0] - y[1] * y[1]) * bump(y.norm());
    return t;
  };
}

template <int N>
Mat<N> default_seed_tensor() {
  Mat<N> t = Mat<N>::Zero();
  for (int i = 0; i < N; ++i) {
    t(i, i) = 1.0 - 0.6 * i;
    for (int j = i + 1; j < N; ++j) t(i, j) = t(j, i) = 0.3 + 0.1 * (i + j);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Conformal family.

/// Metric jet of gbar + t h scaled by the jet of a conformal factor U.
template <int N>
MetricJet<N> conformal_metric(const MetricJet<N>& base, const ScalarJet<N>& U) {
  MetricJet<N> g;
  g.g = U.value * base.g;
  for (int k = 0; k < N; ++k) {
    g.dg[k] = U.grad[k] * base.g + U.value * base.dg[k];
    for (int l = 0; l < N; ++l)
      g.ddg[k][l] = U.hess(k, l) * base.g + U.grad[k] * base.dg[l] + U.grad[l] * base.dg[k] + U.value * base.ddg[k][l];
  }
  return g;
}

/// u = 1 + q(x) w(x), q = 1 - |x - c|^2 / rho^2 vanishing on the boundary.
template <int N>
struct ConformalFactor {
  Polynomial<N> w;
  Vec<N> center = Vec<N>::Zero();
  double radius = 1.0;

  ScalarJet<N> jet(const Vec<N>& x) const {
    ScalarJet<N> q = ScalarJet<N>::constant(1.0);
    for (int i = 0; i < N; ++i) {
      const ScalarJet<N> y = (ScalarJet<N>::coordinate(x, i) + (-center[i])) * (1.0 / radius);
      q -= y * y;
    }
    return 1.0 + q * w.jet(x);
  }
};

template <int N>
struct ConformalSolution {
  double t = 0.0;
  ConformalFactor<N> u;
  double scalar_residual = 0.0;  // max |R(g(t))| over the volume rule
  double condition = 0.0;        // condition estimate of the Galerkin matrix
  double min_u = 1.0;
};

struct ConformalOptions {
  int degree = 6;
  QuadratureSize quad = {16, 16, 32};
};

/// Solves -c_n Lap_{gt} u + R(gt) u = 0, u = 1 on the boundary, gt = gbar + t h,
/// by a Galerkin method on polynomials vanishing on the boundary.
template <int N, class Field>
ConformalSolution<N> conformal_zero_scalar(const BackgroundSpace<N>& space, const DomainSpec<N>& domain,
                                           const Field& h, double t, const ConformalOptions& opt = {}) {
  static_assert(N >= 3);
  const ChartBall<N> ball = domain.chart_ball();
  const double cn = 4.0 * (N - 1) / (N - 2.0);
  const double p = 4.0 / (N - 2.0);
  ConformalSolution<N> sol;
  sol.t = t;
  sol.u.center = ball.center;
  sol.u.radius = ball.radius;
  sol.u.w = Polynomial<N>(ball.center, ball.radius);

  const VolumeRule<N> rule = ball_volume_rule(space, domain, opt.quad);
  const auto exps = exponents_up_to<N>(opt.degree);
  const int K = static_cast<int>(exps.size());
  std::vector<ConformalFactor<N>> tests(K);
  for (int k = 0; k < K; ++k) {
    tests[k].center = ball.center;
    tests[k].radius = ball.radius;
    tests[k].w = Polynomial<N>::monomial(exps[k], ball.center, ball.radius);
  }
  const int M = static_cast<int>(rule.nodes.size());
  std::vector<MetricJet<N>> gt(M);
  std::vector<double> rt(M);
  std::vector<int> bad(M, 0);
  parallel_for(M, [&](std::size_t q) {
    SymJet<N> hj = h.jet(rule.nodes[q]);
    hj *= t;
    gt[q] = perturbed(space.metric_jet(rule.nodes[q]), hj);
    Eigen::SelfAdjointEigenSolver<Mat<N>> es(gt[q].g);
    if (!(es.eigenvalues().minCoeff() > 0.0)) {
      bad[q] = 1;
      return;
    }
    rt[q] = scalar_curvature(gt[q]);
  });
  for (int q = 0; q < M; ++q)
    if (bad[q]) throw BreakdownError("gbar + t h is not positive definite at t = " + std::to_string(t));

  Eigen::MatrixXd Kmat = Eigen::MatrixXd::Zero(K, K);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(K);
  for (int q = 0; q < M; ++q) {
    const Vec<N>& x = rule.nodes[q];
    const Mat<N> gi = gt[q].g.inverse();
    const double w = rule.weights[q] * std::sqrt(gt[q].g.determinant() / space.metric_at(x).determinant());
    std::vector<ScalarJet<N>> v(K);
    for (int k = 0; k < K; ++k) v[k] = tests[k].jet(x) + (-1.0);
    for (int k = 0; k < K; ++k) {
      rhs[k] -= w * rt[q] * v[k].value;
      for (int l = k; l < K; ++l) {
        const double a = w * (cn * v[k].grad.dot(gi * v[l].grad) + rt[q] * v[k].value * v[l].value);
        Kmat(k, l) += a;
        if (l != k) Kmat(l, k) += a;
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Kmat);
  const auto& ev = es.eigenvalues();
  sol.condition = ev.cwiseAbs().maxCoeff() / std::max(ev.cwiseAbs().minCoeff(), 1e-300);
  const Eigen::VectorXd b = Kmat.ldlt().solve(rhs);
  if (!b.allFinite()) throw NumericalError("conformal Galerkin solve failed");
  for (int k = 0; k < K; ++k) sol.u.w.add(tests[k].w, b[k]);

  std::vector<double> res(M), umin(M);
  parallel_for(M, [&](std::size_t q) {
    const ScalarJet<N> u = sol.u.jet(rule.nodes[q]);
    umin[q] = u.value;
    if (u.value <= 0.0) return;
    res[q] = scalar_curvature(conformal_metric(gt[q], pow(u, p)));
  });
  sol.min_u = *std::min_element(umin.begin(), umin.end());
  if (!(sol.min_u > 0.0)) throw BreakdownError("conformal factor lost positivity at t = " + std::to_string(t));
  sol.scalar_residual = max_abs(res);
  return sol;
}

/// Metric jet of the family member at x: linear (no factor) or conformal.
template <int N, class Field>
MetricJet<N> family_metric(const BackgroundSpace<N>& space, const Field& h, double t, const Vec<N>& x,
                           const ConformalSolution<N>* sol = nullptr) {
  SymJet<N> hj = h.jet(x);
  hj *= t;
  const MetricJet<N> base = perturbed(space.metric_jet(x), hj);
  if (!sol) return base;
  return conformal_metric(base, pow(sol->u.jet(x), 4.0 / (N - 2.0)));
}

template <int N>
struct ConformalFamily {
  std::vector<double> ts;
  std::vector<ConformalSolution<N>> solutions;
};

template <int N, class Field>
ConformalFamily<N> build_family(const BackgroundSpace<N>& space, const DomainSpec<N>& domain, const Field& h,
                                const std::vector<double>& ts, const ConformalOptions& opt = {}) {
  ConformalFamily<N> fam;
  fam.ts = ts;
  for (double t : ts) fam.solutions.push_back(conformal_zero_scalar(space, domain, h, t, opt));
  return fam;
}

}  // namespace rigidity
