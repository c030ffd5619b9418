#pragma once
// Constant-curvature backgrounds in closed form: charts, metric jets,
// connection, curvature, domains, boundary geometry and static potentials.

#include "rigidity/core.hpp"
#include "rigidity/gauss.hpp"
#include "rigidity/jet.hpp"

#include <optional>
#include <string>

namespace rigidity {

enum class ChartKind {
  Cartesian,      // flat, identity metric
  Polar,          // dr^2 + S(r)^2 (round metric in hyperspherical angles)
  Stereographic,  // unit sphere, 4/(1+|x|^2)^2 delta; the center q is x = 0
};

inline std::string to_string(ChartKind k) {
  switch (k) {
    case ChartKind::Cartesian: return "cartesian";
    case ChartKind::Polar: return "polar";
    case ChartKind::Stereographic: return "stereographic";
  }
  return "?";
}

/// Metric components with first and second coordinate derivatives.
/// dg[k](i, j) = d_k g_ij, ddg[k][l](i, j) = d_k d_l g_ij.
template <int N>
struct MetricJet {
  Mat<N> g = Mat<N>::Identity();
  Rank3<N> dg = zero_rank3<N>();
  Rank4<N> ddg = zero_rank4<N>();
};

/// Levi-Civita connection of a metric jet.
/// gamma[k](i, j) = Gamma^k_ij, dgamma[m][k](i, j) = d_m Gamma^k_ij.
template <int N>
struct Connection {
  Mat<N> ginv;
  Rank3<N> gamma;
  Rank4<N> dgamma;

  /// M(m, i) = Gamma^m_ki for fixed k.
  Mat<N> gamma_lower_slot(int k) const {
    Mat<N> m;
    for (int a = 0; a < N; ++a) m.row(a) = gamma[a].row(k);
    return m;
  }
};

template <int N>
Connection<N> connection_from_jet(const MetricJet<N>& jet) {
  Connection<N> c;
  Eigen::FullPivLU<Mat<N>> lu(jet.g);
  if (!lu.isInvertible() || std::abs(jet.g.determinant()) < 1e-300)
    throw MetricError("connection: metric not invertible");
  c.ginv = lu.inverse();
  // Lowered symbols low[l](i, j) = Gamma_{l,ij} and their derivatives.
  Rank3<N> low;
  Rank4<N> dlow;
  for (int l = 0; l < N; ++l)
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        low[l](i, j) = 0.5 * (jet.dg[i](j, l) + jet.dg[j](i, l) - jet.dg[l](i, j));
        for (int m = 0; m < N; ++m)
          dlow[m][l](i, j) =
              0.5 * (jet.ddg[m][i](j, l) + jet.ddg[m][j](i, l) - jet.ddg[m][l](i, j));
      }
  Rank3<N> dginv;
  for (int m = 0; m < N; ++m) dginv[m] = -c.ginv * jet.dg[m] * c.ginv;
  for (int k = 0; k < N; ++k) {
    c.gamma[k].setZero();
    for (int l = 0; l < N; ++l) c.gamma[k] += c.ginv(k, l) * low[l];
  }
  for (int m = 0; m < N; ++m)
    for (int k = 0; k < N; ++k) {
      c.dgamma[m][k].setZero();
      for (int l = 0; l < N; ++l)
        c.dgamma[m][k] += dginv[m](k, l) * low[l] + c.ginv(k, l) * dlow[m][l];
    }
  return c;
}

// ---------------------------------------------------------------------------

/// Constant-curvature background (kappa in {0, 1}) with a single chart.
template <int N>
class BackgroundSpace {
  static_assert(N >= 2, "dimension must be at least 2");

 public:
  static BackgroundSpace sphere(ChartKind chart = ChartKind::Stereographic) {
    if (chart == ChartKind::Cartesian)
      throw ConfigError("sphere background needs a polar or stereographic chart");
    return BackgroundSpace(1.0, chart);
  }
  static BackgroundSpace flat(ChartKind chart = ChartKind::Cartesian) {
    if (chart == ChartKind::Stereographic)
      throw ConfigError("flat background needs a cartesian or polar chart");
    return BackgroundSpace(0.0, chart);
  }

  static constexpr int dimension() { return N; }
  double kappa() const { return kappa_; }
  ChartKind chart() const { return chart_; }
  bool is_sphere() const { return kappa_ > 0.5; }

  /// Throws DomainError naming the offending coordinate.
  void check_point(const Vec<N>& x) const {
    for (int i = 0; i < N; ++i)
      if (!std::isfinite(x[i]))
        throw DomainError("coordinate x" + std::to_string(i) + " is not finite");
    if (chart_ != ChartKind::Polar) return;
    if (x[0] <= 0.0) throw DomainError("radial coordinate r = " + std::to_string(x[0]) + " must be > 0");
    if (is_sphere() && x[0] >= pi)
      throw DomainError("radial coordinate r = " + std::to_string(x[0]) + " must be < pi");
    for (int j = 1; j <= N - 2; ++j)
      if (x[j] <= 0.0 || x[j] >= pi)
        throw DomainError("angular coordinate theta" + std::to_string(j) + " = " +
                          std::to_string(x[j]) + " must lie in (0, pi)");
  }

  Mat<N> metric_at(const Vec<N>& x) const { return metric_jet(x).g; }

  /// Closed-form metric jet. Every chart here is diagonal with
  /// g_kk = exp(F_k), so derivatives follow from the jets of F_k.
  MetricJet<N> metric_jet(const Vec<N>& x) const {
    check_point(x);
    MetricJet<N> jet;
    jet.g.setZero();
    for (int k = 0; k < N; ++k) {
      const ScalarJet<N> f = log_diag_jet(x, k);
      const double gk = std::exp(f.value);
      jet.g(k, k) = gk;
      for (int a = 0; a < N; ++a) {
        jet.dg[a](k, k) = gk * f.grad[a];
        for (int b = 0; b < N; ++b)
          jet.ddg[a][b](k, k) = gk * (f.grad[a] * f.grad[b] + f.hess(a, b));
      }
    }
    return jet;
  }

  Connection<N> connection_at(const Vec<N>& x) const { return connection_from_jet(metric_jet(x)); }

  /// R_ikjl = kappa (g_ij g_kl - g_il g_kj), stored as R[i][k](j, l).
  Rank4<N> riemann_at(const Vec<N>& x) const {
    const Mat<N> g = metric_at(x);
    Rank4<N> r;
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < N; ++k)
        for (int j = 0; j < N; ++j)
          for (int l = 0; l < N; ++l)
            r[i][k](j, l) = kappa_ * (g(i, j) * g(k, l) - g(i, l) * g(k, j));
    return r;
  }

  Mat<N> ricci_at(const Vec<N>& x) const { return (N - 1) * kappa_ * metric_at(x); }
  double scalar_curvature() const { return N * (N - 1) * kappa_; }
  double ricci_factor() const { return (N - 1) * kappa_; }

  double volume_density(const Vec<N>& x) const { return std::sqrt(metric_at(x).determinant()); }

  /// Distance r to the chart center q with its coordinate derivatives.
  ScalarJet<N> distance_to_center(const Vec<N>& x) const {
    check_point(x);
    ScalarJet<N> j;
    if (chart_ == ChartKind::Polar) {
      j.value = x[0];
      j.grad[0] = 1.0;
      return j;
    }
    const double rho = x.norm();
    if (rho == 0.0) throw DomainError("distance function is not differentiable at the center");
    const Vec<N> u = x / rho;
    const Mat<N> proj = Mat<N>::Identity() - u * u.transpose();
    double d1 = 1.0, d2 = 0.0;
    if (chart_ == ChartKind::Stereographic) {
      j.value = 2.0 * std::atan(rho);
      d1 = 2.0 / (1.0 + rho * rho);
      d2 = -4.0 * rho / ((1.0 + rho * rho) * (1.0 + rho * rho));
    } else {
      j.value = rho;
    }
    j.grad = d1 * u;
    j.hess = d2 * u * u.transpose() + (d1 / rho) * proj;
    return j;
  }

 private:
  BackgroundSpace(double kappa, ChartKind chart) : kappa_(kappa), chart_(chart) {
    if (N < 3) throw ConfigError("background dimension must be at least 3");
  }

  /// F_k = log g_kk with coordinate gradient and Hessian.
  ScalarJet<N> log_diag_jet(const Vec<N>& x, int k) const {
    ScalarJet<N> f;
    switch (chart_) {
      case ChartKind::Cartesian:
        return f;
      case ChartKind::Stereographic: {
        const double s = x.squaredNorm();
        f.value = 2.0 * (std::log(2.0) - std::log1p(s));
        f.grad = -4.0 * x / (1.0 + s);
        f.hess = -4.0 * Mat<N>::Identity() / (1.0 + s) + 8.0 * x * x.transpose() / ((1.0 + s) * (1.0 + s));
        return f;
      }
      case ChartKind::Polar: {
        if (k == 0) return f;
        const double r = x[0];
        if (is_sphere()) {
          f.value = 2.0 * std::log(std::sin(r));
          f.grad[0] = 2.0 * std::cos(r) / std::sin(r);
          f.hess(0, 0) = -2.0 / (std::sin(r) * std::sin(r));
        } else {
          f.value = 2.0 * std::log(r);
          f.grad[0] = 2.0 / r;
          f.hess(0, 0) = -2.0 / (r * r);
        }
        for (int j = 1; j < k; ++j) {
          const double s = std::sin(x[j]);
          f.value += 2.0 * std::log(s);
          f.grad[j] += 2.0 * std::cos(x[j]) / s;
          f.hess(j, j) += -2.0 / (s * s);
        }
        return f;
      }
    }
    return f;
  }

  double kappa_;
  ChartKind chart_;
};

// ---------------------------------------------------------------------------
// Domains.

enum class DomainKind { SphereCap, EuclideanBall, Box };

/// A ball in chart coordinates; both cap and Euclidean-ball domains map to one.
template <int N>
struct ChartBall {
  Vec<N> center = Vec<N>::Zero();
  double radius = 1.0;
};

inline double unit_sphere_area(int n) {
  // Area of S^{n-1} in R^n.
  return 2.0 * std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n);
}

template <int N>
struct DomainSpec {
  DomainKind kind = DomainKind::EuclideanBall;
  double delta = 0.0;   // cap geodesic radius
  double offset = 0.0;  // geodesic distance from q to the cap center, along x0
  double radius = 1.0;  // Euclidean ball radius
  Vec<N> center = Vec<N>::Zero();
  Vec<N> base_point = Vec<N>::Zero();  // a, used by the flat quadratic potential
  Vec<N> lo = Vec<N>::Zero();
  Vec<N> hi = Vec<N>::Ones();

  static DomainSpec sphere_cap(double delta, double offset = 0.0) {
    if (!(delta > 0.0 && delta < pi)) throw DomainError("sphere cap radius delta must lie in (0, pi)");
    if (offset < 0.0 || offset + delta >= pi) throw DomainError("cap must not contain the antipode of q");
    DomainSpec d;
    d.kind = DomainKind::SphereCap;
    d.delta = delta;
    d.offset = offset;
    return d;
  }
  static DomainSpec hemisphere() { return sphere_cap(pi / 2); }

  static DomainSpec euclidean_ball(double radius, const Vec<N>& center = Vec<N>::Zero(),
                                   const Vec<N>& a = Vec<N>::Zero()) {
    if (!(radius > 0.0)) throw DomainError("ball radius must be positive");
    DomainSpec d;
    d.kind = DomainKind::EuclideanBall;
    d.radius = radius;
    d.center = center;
    d.base_point = a;
    return d;
  }

  static DomainSpec box(const Vec<N>& lo, const Vec<N>& hi) {
    for (int i = 0; i < N; ++i)
      if (!(hi[i] > lo[i])) throw DomainError("box must have positive extent on every axis");
    DomainSpec d;
    d.kind = DomainKind::Box;
    d.lo = lo;
    d.hi = hi;
    return d;
  }

  bool is_ball() const { return kind != DomainKind::Box; }

  /// The domain as a chart ball (stereographic chart for caps).
  ChartBall<N> chart_ball() const {
    ChartBall<N> b;
    if (kind == DomainKind::EuclideanBall) {
      b.center = center;
      b.radius = radius;
    } else if (kind == DomainKind::SphereCap) {
      const double far = std::tan(0.5 * (offset + delta));
      const double near = std::tan(0.5 * (offset - delta));
      b.center[0] = 0.5 * (far + near);
      b.radius = 0.5 * (far - near);
    } else {
      throw ShapeError("box domain has no chart ball");
    }
    return b;
  }

  bool contains(const Vec<N>& x) const {
    if (kind == DomainKind::Box) {
      for (int i = 0; i < N; ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
      return true;
    }
    const ChartBall<N> b = chart_ball();
    return (x - b.center).norm() <= b.radius;
  }

  /// Closed-form volume with respect to the background metric.
  double closed_form_volume() const {
    switch (kind) {
      case DomainKind::SphereCap:
        return unit_sphere_area(N) *
               integrate_1d([](double t) { return std::pow(std::sin(t), N - 1); }, 0.0, delta);
      case DomainKind::EuclideanBall:
        return unit_sphere_area(N) * std::pow(radius, N) / N;
      case DomainKind::Box:
        return (hi - lo).prod();
    }
    return 0.0;
  }

  double closed_form_boundary_area() const {
    switch (kind) {
      case DomainKind::SphereCap:
        return unit_sphere_area(N) * std::pow(std::sin(delta), N - 1);
      case DomainKind::EuclideanBall:
        return unit_sphere_area(N) * std::pow(radius, N - 1);
      case DomainKind::Box: {
        const Vec<N> e = hi - lo;
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += 2.0 * e.prod() / e[i];
        return s;
      }
    }
    return 0.0;
  }
};

/// Checks that the domain is expressible in the background's chart.
template <int N>
void check_domain(const BackgroundSpace<N>& space, const DomainSpec<N>& domain) {
  if (domain.kind == DomainKind::SphereCap &&
      !(space.is_sphere() && space.chart() == ChartKind::Stereographic))
    throw ConfigError("sphere cap domains need the stereographic sphere chart");
  if (domain.kind == DomainKind::EuclideanBall &&
      !(!space.is_sphere() && space.chart() == ChartKind::Cartesian))
    throw ConfigError("Euclidean ball domains need the flat cartesian chart");
}

// ---------------------------------------------------------------------------
// Boundary geometry.

/// Jet of the boundary level-set function f = |x - c| (f = radius on the boundary).
template <int N>
ScalarJet<N> level_set_jet(const ChartBall<N>& ball, const Vec<N>& x) {
  ScalarJet<N> f;
  const Vec<N> d = x - ball.center;
  const double r = d.norm();
  if (r == 0.0) throw DomainError("level set is singular at the ball center");
  const Vec<N> u = d / r;
  f.value = r;
  f.grad = u;
  f.hess = (Mat<N>::Identity() - u * u.transpose()) / r;
  return f;
}

template <int N>
using FrameMat = Eigen::Matrix<double, N - 1, N - 1>;

template <int N>
struct BoundaryNode {
  Vec<N> x;
  Vec<N> normal;                     // outward unit normal, contravariant components
  std::array<Vec<N>, N - 1> frame;   // orthonormal tangent frame e_alpha
  FrameMat<N> second_form;           // II(e_a, e_b); the induced metric is the identity in this frame
  double mean_curvature = 0.0;       // trace of II
  double c_lower = 0.0;              // smallest c >= 0 with II >= -c gamma
  double r = 0.0;                    // distance to the chart center q
  double cos_theta = 1.0;            // cosine of the angle between normal and grad r
  double theta = 0.0;
  bool has_angle = false;            // false at the center q
};

template <int N>
struct BoundaryGeometry {
  std::vector<BoundaryNode<N>> nodes;
};

/// Hessian of a scalar with respect to a connection: d_i d_j f - Gamma^k_ij d_k f.
template <int N>
Mat<N> covariant_hessian(const ScalarJet<N>& f, const Connection<N>& con) {
  Mat<N> h = f.hess;
  for (int k = 0; k < N; ++k) h -= con.gamma[k] * f.grad[k];
  return h;
}

template <int N>
BoundaryNode<N> boundary_node(const BackgroundSpace<N>& space, const ChartBall<N>& ball, const Vec<N>& x) {
  const MetricJet<N> jet = space.metric_jet(x);
  const Connection<N> con = connection_from_jet(jet);
  const ScalarJet<N> f = level_set_jet(ball, x);
  BoundaryNode<N> node;
  node.x = x;
  const double df_norm = std::sqrt(f.grad.dot(con.ginv * f.grad));
  node.normal = con.ginv * f.grad / df_norm;

  // Euclidean tangent basis completing grad f, then ḡ-orthonormalized.
  const Vec<N> u = f.grad.normalized();
  Mat<N> basis = Mat<N>::Identity();
  int pivot = 0;
  for (int i = 1; i < N; ++i)
    if (std::abs(u[i]) > std::abs(u[pivot])) pivot = i;
  Eigen::Matrix<double, N, N - 1> t;
  int col = 0;
  for (int i = 0; i < N; ++i) {
    if (i == pivot) continue;
    Vec<N> v = basis.col(i) - basis.col(i).dot(u) * u;
    for (int c = 0; c < col; ++c) v -= v.dot(t.col(c)) * t.col(c);
    t.col(col++) = v.normalized();
  }
  const FrameMat<N> gram = t.transpose() * jet.g * t;
  Eigen::SelfAdjointEigenSolver<FrameMat<N>> es(gram);
  const double cond = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
  if (!(cond < 1e8)) throw FrameError("boundary frame Gram matrix condition number " + std::to_string(cond));
  const FrameMat<N> lower = gram.llt().matrixL();
  const Eigen::Matrix<double, N, N - 1> e = t * lower.transpose().inverse();
  for (int a = 0; a < N - 1; ++a) node.frame[a] = e.col(a);

  const Mat<N> hess = covariant_hessian(f, con);
  node.second_form = e.transpose() * hess * e / df_norm;
  node.mean_curvature = node.second_form.trace();
  Eigen::SelfAdjointEigenSolver<FrameMat<N>> ii(node.second_form);
  node.c_lower = std::max(0.0, -ii.eigenvalues().minCoeff());

  if (x.norm() > 1e-14 || space.chart() == ChartKind::Polar) {
    const ScalarJet<N> r = space.distance_to_center(x);
    node.r = r.value;
    node.cos_theta = std::clamp(node.normal.dot(r.grad), -1.0, 1.0);
    node.theta = std::acos(node.cos_theta);
    node.has_angle = true;
  }
  return node;
}

/// Boundary geometry at closed-form boundary nodes of a ball-type domain.
template <int N>
BoundaryGeometry<N> boundary_geometry(const BackgroundSpace<N>& space, const DomainSpec<N>& domain,
                                      std::span<const Vec<N>> nodes) {
  if (!domain.is_ball()) throw ShapeError("boundary geometry is available for ball-type domains only");
  check_domain(space, domain);
  const ChartBall<N> ball = domain.chart_ball();
  BoundaryGeometry<N> bg;
  bg.nodes.reserve(nodes.size());
  for (const Vec<N>& x : nodes) {
    const double miss = std::abs((x - ball.center).norm() - ball.radius);
    if (miss > 1e-12 * std::max(1.0, ball.radius))
      throw PreconditionError("boundary node off the boundary by " + std::to_string(miss));
    bg.nodes.push_back(boundary_node(space, ball, x));
  }
  return bg;
}

// ---------------------------------------------------------------------------
// Closed-form predicates.

struct GeodesicBallCondition {
  bool cos_condition = false;   // cos(delta) >= 2 / sqrt(n + 3)
  bool mean_condition = false;  // Hbar >= 4 tan(delta)
  double cos_margin = 0.0;
  double mean_margin = 0.0;
  bool agree = false;
};

/// Both forms of the small-cap condition; predicates hold within 1e-12 of equality.
inline GeodesicBallCondition geodesic_ball_condition(int n, double delta) {
  if (n < 2) throw DomainError("dimension must be at least 2");
  if (!(delta > 0.0 && delta < pi / 2)) throw DomainError("delta must lie in (0, pi/2)");
  GeodesicBallCondition c;
  c.cos_margin = std::cos(delta) - 2.0 / std::sqrt(n + 3.0);
  const double hbar = (n - 1) * std::cos(delta) / std::sin(delta);
  c.mean_margin = hbar - 4.0 * std::tan(delta);
  c.cos_condition = c.cos_margin >= -1e-12;
  c.mean_condition = c.mean_margin >= -1e-12 * std::max(1.0, hbar);
  c.agree = c.cos_condition == c.mean_condition;
  return c;
}

// ---------------------------------------------------------------------------
// Static potentials.

enum class PotentialKind {
  SphereCos,       // cos r, DR*(lambda) = 0
  SphereConstant,  // -1/(n-1), DR*(lambda) = gbar
  FlatQuadratic,   // -|x-a|^2/(2(n-1)) + L, DR*(lambda) = gbar
};

template <int N>
class StaticPotential {
 public:
  PotentialKind kind() const { return kind_; }
  double level() const { return level_; }
  const Vec<N>& base_point() const { return a_; }

  ScalarJet<N> jet(const Vec<N>& x) const {
    ScalarJet<N> j;
    switch (kind_) {
      case PotentialKind::SphereCos:
        if (chart_ == ChartKind::Polar) {
          j.value = std::cos(x[0]);
          j.grad[0] = -std::sin(x[0]);
          j.hess(0, 0) = -std::cos(x[0]);
        } else {
          const double s = x.squaredNorm();
          const double q = 1.0 + s;
          j.value = (1.0 - s) / q;
          j.grad = -4.0 * x / (q * q);
          j.hess = -4.0 * Mat<N>::Identity() / (q * q) + 16.0 * x * x.transpose() / (q * q * q);
        }
        return j;
      case PotentialKind::SphereConstant:
        j.value = -1.0 / (N - 1);
        return j;
      case PotentialKind::FlatQuadratic: {
        const Vec<N> d = x - a_;
        j.value = -d.squaredNorm() / (2.0 * (N - 1)) + level_;
        j.grad = -d / (N - 1.0);
        j.hess = -Mat<N>::Identity() / (N - 1.0);
        return j;
      }
    }
    return j;
  }

  double operator()(const Vec<N>& x) const { return jet(x).value; }

  template <int M>
  friend StaticPotential<M> static_potential_field(const BackgroundSpace<M>&, const DomainSpec<M>&,
                                                   PotentialKind, double);

 private:
  PotentialKind kind_ = PotentialKind::SphereConstant;
  ChartKind chart_ = ChartKind::Stereographic;
  Vec<N> a_ = Vec<N>::Zero();
  double level_ = 0.0;
};

/// Smallest admissible L for the flat quadratic potential to be positive on the closure.
template <int N>
double minimal_level(const DomainSpec<N>& domain) {
  double far = 0.0;
  if (domain.kind == DomainKind::Box) {
    for (int corner = 0; corner < (1 << N); ++corner) {
      Vec<N> q;
      for (int i = 0; i < N; ++i) q[i] = (corner >> i & 1) ? domain.hi[i] : domain.lo[i];
      far = std::max(far, (q - domain.base_point).norm());
    }
  } else {
    const ChartBall<N> b = domain.chart_ball();
    far = (b.center - domain.base_point).norm() + b.radius;
  }
  return far * far / (2.0 * (N - 1));
}

template <int N>
StaticPotential<N> static_potential_field(const BackgroundSpace<N>& space, const DomainSpec<N>& domain,
                                          PotentialKind kind, double level = 0.0) {
  StaticPotential<N> p;
  p.kind_ = kind;
  p.chart_ = space.chart();
  switch (kind) {
    case PotentialKind::SphereCos:
    case PotentialKind::SphereConstant:
      if (!space.is_sphere()) throw ConfigError("sphere potential on a flat background");
      break;
    case PotentialKind::FlatQuadratic: {
      if (space.is_sphere() || space.chart() != ChartKind::Cartesian)
        throw ConfigError("flat quadratic potential needs the flat cartesian chart");
      const double lmin = minimal_level(domain);
      if (!(level > lmin))
        throw PreconditionError("level L = " + std::to_string(level) + " too small; need L > " +
                                std::to_string(lmin));
      p.a_ = domain.base_point;
      p.level_ = level;
      break;
    }
  }
  return p;
}

}  // namespace rigidity
