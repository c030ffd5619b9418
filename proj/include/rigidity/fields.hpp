#pragma once
// Tensor-product grids with half-cell offsets, fourth-order finite
// differences with one-sided closures, and degree-5 interpolation of the
// resulting jets to arbitrary points.

#include "rigidity/calculus.hpp"

#include <fstream>
#include <iomanip>

namespace rigidity {

/// Uniform grid; node k on an axis sits at lo + (k + 1/2) * spacing.
template <int N>
class Grid {
 public:
  static constexpr int min_nodes = 7;

  Grid(const Vec<N>& lo, const Vec<N>& hi, std::array<int, N> counts) : lo_(lo), counts_(counts) {
    for (int a = 0; a < N; ++a) {
      if (counts[a] < min_nodes)
        throw SizeError("grid needs at least " + std::to_string(min_nodes) + " nodes per axis, got " +
                        std::to_string(counts[a]));
      if (!(hi[a] > lo[a])) throw SizeError("grid extent must be positive");
      spacing_[a] = (hi[a] - lo[a]) / counts[a];
    }
    stride_[0] = 1;
    for (int a = 1; a < N; ++a) stride_[a] = stride_[a - 1] * counts_[a - 1];
    size_ = stride_[N - 1] * counts_[N - 1];
  }

  /// Cube of half-width `half` around `center` with `count` nodes per axis.
  static Grid cube(const Vec<N>& center, double half, int count) {
    std::array<int, N> c;
    c.fill(count);
    return Grid(center - Vec<N>::Constant(half), center + Vec<N>::Constant(half), c);
  }

  std::size_t size() const { return size_; }
  int count(int axis) const { return counts_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double max_spacing() const { return spacing_.maxCoeff(); }
  std::size_t stride(int axis) const { return stride_[axis]; }
  const Vec<N>& lo() const { return lo_; }
  Vec<N> hi() const {
    Vec<N> h;
    for (int a = 0; a < N; ++a) h[a] = lo_[a] + counts_[a] * spacing_[a];
    return h;
  }

  std::array<int, N> unflatten(std::size_t flat) const {
    std::array<int, N> idx;
    for (int a = 0; a < N; ++a) {
      idx[a] = static_cast<int>(flat % counts_[a]);
      flat /= counts_[a];
    }
    return idx;
  }
  std::size_t flatten(const std::array<int, N>& idx) const {
    std::size_t f = 0;
    for (int a = 0; a < N; ++a) f += idx[a] * stride_[a];
    return f;
  }
  Vec<N> node(std::size_t flat) const {
    const auto idx = unflatten(flat);
    Vec<N> x;
    for (int a = 0; a < N; ++a) x[a] = lo_[a] + (idx[a] + 0.5) * spacing_[a];
    return x;
  }

  /// Nodes on the outermost layer, with the axis and side (-1 or +1) they face.
  struct EdgeNode {
    std::size_t index;
    int axis;
    int side;
  };
  std::vector<EdgeNode> edge_nodes() const {
    std::vector<EdgeNode> out;
    for (std::size_t f = 0; f < size_; ++f) {
      const auto idx = unflatten(f);
      for (int a = 0; a < N; ++a) {
        if (idx[a] == 0) out.push_back({f, a, -1});
        if (idx[a] == counts_[a] - 1) out.push_back({f, a, +1});
      }
    }
    return out;
  }

  bool same_shape(const Grid& o) const {
    return counts_ == o.counts_ && (lo_ - o.lo_).norm() == 0.0 && (spacing_ - o.spacing_).norm() == 0.0;
  }

 private:
  Vec<N> lo_;
  Vec<N> spacing_;
  std::array<int, N> counts_;
  std::array<std::size_t, N> stride_;
  std::size_t size_ = 0;
};

/// Grid covering a ball-type domain's chart ball (half-width 1.3 radius), or a box.
template <int N>
Grid<N> grid_for_domain(const DomainSpec<N>& domain, int count) {
  if (domain.kind == DomainKind::Box) {
    std::array<int, N> c;
    c.fill(count);
    return Grid<N>(domain.lo, domain.hi, c);
  }
  const ChartBall<N> b = domain.chart_ball();
  return Grid<N>::cube(b.center, 1.3 * b.radius, count);
}

// ---------------------------------------------------------------------------
// Finite differences along one axis.

namespace fd {

struct Stencil {
  int offset;                 // first point relative to i
  std::array<double, 6> w;    // weights, unused tail entries zero
  int width;
};

/// Fourth-order first derivative (times 12 h).
inline Stencil first(int i, int n) {
  if (i >= 2 && i <= n - 3) return {-2, {1, -8, 0, 8, -1, 0}, 5};
  if (i == 0) return {0, {-25, 48, -36, 16, -3, 0}, 5};
  if (i == 1) return {-1, {-3, -10, 18, -6, 1, 0}, 5};
  if (i == n - 1) return {-4, {3, -16, 36, -48, 25, 0}, 5};
  return {-3, {-1, 6, -18, 10, 3, 0}, 5};  // i == n - 2
}

/// Fourth-order second derivative (times 12 h^2).
inline Stencil second(int i, int n) {
  if (i >= 2 && i <= n - 3) return {-2, {-1, 16, -30, 16, -1, 0}, 5};
  if (i == 0) return {0, {45, -154, 214, -156, 61, -10}, 6};
  if (i == 1) return {-1, {10, -15, -4, 14, -6, 1}, 6};
  if (i == n - 1) return {-5, {-10, 61, -156, 214, -154, 45}, 6};
  return {-4, {1, -6, 14, -4, -15, 10}, 6};  // i == n - 2
}

template <int N>
std::vector<double> apply(const Grid<N>& grid, std::span<const double> f, int axis, bool second_order) {
  if (f.size() != grid.size()) throw ShapeError("finite difference: field does not match grid");
  std::vector<double> out(f.size());
  const int n = grid.count(axis);
  const std::size_t st = grid.stride(axis);
  const double h = grid.spacing(axis);
  const double scale = second_order ? 1.0 / (12.0 * h * h) : 1.0 / (12.0 * h);
  parallel_for(f.size(), [&](std::size_t p) {
    const int i = static_cast<int>((p / st) % n);
    const Stencil s = second_order ? second(i, n) : first(i, n);
    const std::size_t base = p - static_cast<std::size_t>(i) * st;
    // Weights sum to zero; differencing against f[p] keeps constant data exactly flat.
    double acc = 0.0;
    for (int q = 0; q < s.width; ++q) acc += s.w[q] * (f[base + static_cast<std::size_t>(i + s.offset + q) * st] - f[p]);
    out[p] = acc * scale;
  });
  return out;
}

}  // namespace fd

// ---------------------------------------------------------------------------
// Sampled fields.

/// Scalar samples on a grid.
template <int N>
struct GridScalar {
  const Grid<N>* grid = nullptr;
  std::vector<double> values;
};

template <int N, class F>
GridScalar<N> sample_scalar(const Grid<N>& grid, F&& f) {
  GridScalar<N> s{&grid, std::vector<double>(grid.size())};
  parallel_for(grid.size(), [&](std::size_t p) { s.values[p] = f(grid.node(p)); });
  return s;
}

/// Symmetric 2-tensor samples; only i <= j is stored.
template <int N>
struct SymTensorField {
  static constexpr int components = sym_size(N);
  const Grid<N>* grid = nullptr;
  std::vector<std::array<double, components>> values;
  bool is_metric = false;

  Mat<N> at_node(std::size_t p) const {
    Mat<N> m;
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) m(i, j) = m(j, i) = values[p][sym_index(N, i, j)];
    return m;
  }

  std::vector<double> component(int c) const {
    std::vector<double> out(values.size());
    for (std::size_t p = 0; p < values.size(); ++p) out[p] = values[p][c];
    return out;
  }
};

template <int N, class F>
SymTensorField<N> sample_tensor(const Grid<N>& grid, F&& f, bool is_metric = false) {
  SymTensorField<N> t;
  t.grid = &grid;
  t.is_metric = is_metric;
  t.values.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t p) {
    const Mat<N> m = f(grid.node(p));
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) t.values[p][sym_index(N, i, j)] = m(i, j);
  });
  if (is_metric) {
    for (std::size_t p = 0; p < grid.size(); ++p) {
      Eigen::SelfAdjointEigenSolver<Mat<N>> es(t.at_node(p), Eigen::EigenvaluesOnly);
      if (!(es.eigenvalues().minCoeff() > 0.0)) {
        const Vec<N> x = grid.node(p);
        std::string where;
        for (int a = 0; a < N; ++a) where += (a ? ", " : "") + std::to_string(x[a]);
        throw MetricError("metric not positive definite at node (" + where + ")");
      }
    }
  }
  return t;
}

/// Finite-difference jets of a scalar: value, gradient and Hessian arrays.
template <int N>
struct ScalarJetArrays {
  const Grid<N>* grid = nullptr;
  std::vector<double> value;
  std::array<std::vector<double>, N> grad;
  std::array<std::array<std::vector<double>, N>, N> hess;  // hess[a][b] shared storage for a > b avoided

  ScalarJet<N> at_node(std::size_t p) const {
    ScalarJet<N> j;
    j.value = value[p];
    for (int a = 0; a < N; ++a) {
      j.grad[a] = grad[a][p];
      for (int b = 0; b < N; ++b) j.hess(a, b) = hess[std::min(a, b)][std::max(a, b)][p];
    }
    return j;
  }
};

template <int N>
ScalarJetArrays<N> fd_jets(const Grid<N>& grid, std::vector<double> values) {
  if (values.size() != grid.size()) throw ShapeError("fd_jets: field does not match grid");
  ScalarJetArrays<N> j;
  j.grid = &grid;
  j.value = std::move(values);
  for (int a = 0; a < N; ++a) j.grad[a] = fd::apply(grid, std::span<const double>(j.value), a, false);
  for (int a = 0; a < N; ++a) {
    j.hess[a][a] = fd::apply(grid, std::span<const double>(j.value), a, true);
    for (int b = a + 1; b < N; ++b) j.hess[a][b] = fd::apply(grid, std::span<const double>(j.grad[a]), b, false);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Degree-5 tensor Lagrange interpolation.

template <int N>
struct InterpStencil {
  std::array<int, N> base;
  std::array<std::array<double, 6>, N> w;
};

template <int N>
InterpStencil<N> interp_stencil(const Grid<N>& grid, const Vec<N>& x) {
  InterpStencil<N> s;
  for (int a = 0; a < N; ++a) {
    const double u = (x[a] - grid.lo()[a]) / grid.spacing(a) - 0.5;  // fractional node index
    if (u < -0.5 - 1e-9 || u > grid.count(a) - 0.5 + 1e-9)
      throw DomainError("interpolation point outside grid on axis " + std::to_string(a));
    int b = static_cast<int>(std::floor(u)) - 2;
    b = std::clamp(b, 0, grid.count(a) - 6);
    s.base[a] = b;
    for (int q = 0; q < 6; ++q) {
      double w = 1.0;
      for (int r = 0; r < 6; ++r)
        if (r != q) w *= (u - (b + r)) / static_cast<double>(q - r);
      s.w[a][q] = w;
    }
  }
  return s;
}

template <int N, class Visit>
void for_each_stencil_point(const Grid<N>& grid, const InterpStencil<N>& s, Visit&& visit) {
  std::array<int, N> q{};
  int total = 1;
  for (int a = 0; a < N; ++a) total *= 6;
  for (int t = 0; t < total; ++t) {
    int rem = t;
    double w = 1.0;
    std::array<int, N> idx;
    for (int a = 0; a < N; ++a) {
      q[a] = rem % 6;
      rem /= 6;
      idx[a] = s.base[a] + q[a];
      w *= s.w[a][q[a]];
    }
    visit(grid.flatten(idx), w);
  }
}

template <int N>
double interpolate(const Grid<N>& grid, std::span<const double> f, const Vec<N>& x) {
  const auto s = interp_stencil(grid, x);
  double acc = 0.0;
  for_each_stencil_point(grid, s, [&](std::size_t p, double w) { acc += w * f[p]; });
  return acc;
}

/// Scalar field known through grid samples, evaluated off-grid via interpolated FD jets.
template <int N>
class GridScalarJetField {
 public:
  GridScalarJetField(const Grid<N>& grid, std::vector<double> values) : jets_(fd_jets(grid, std::move(values))) {}

  ScalarJet<N> operator()(const Vec<N>& x) const {
    const Grid<N>& g = *jets_.grid;
    const auto s = interp_stencil(g, x);
    ScalarJet<N> out;
    for_each_stencil_point(g, s, [&](std::size_t p, double w) {
      out.value += w * jets_.value[p];
      for (int a = 0; a < N; ++a) {
        out.grad[a] += w * jets_.grad[a][p];
        for (int b = a; b < N; ++b) out.hess(a, b) += w * jets_.hess[a][b][p];
      }
    });
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < a; ++b) out.hess(a, b) = out.hess(b, a);
    return out;
  }

  ScalarJet<N> at_node(std::size_t p) const { return jets_.at_node(p); }
  const Grid<N>& grid() const { return *jets_.grid; }

 private:
  ScalarJetArrays<N> jets_;
};

/// Symmetric tensor field known through grid samples.
template <int N>
class GridTensorJetField {
 public:
  explicit GridTensorJetField(const SymTensorField<N>& t) : grid_(t.grid) {
    for (int c = 0; c < sym_size(N); ++c) comps_.push_back(fd_jets(*grid_, t.component(c)));
  }

  SymJet<N> at_node(std::size_t p) const {
    SymJet<N> h;
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) h.set_component(i, j, comps_[sym_index(N, i, j)].at_node(p));
    return h;
  }

  SymJet<N> operator()(const Vec<N>& x) const {
    const auto s = interp_stencil(*grid_, x);
    constexpr int C = sym_size(N);
    std::array<ScalarJet<N>, C> acc{};
    for_each_stencil_point(*grid_, s, [&](std::size_t p, double w) {
      for (int c = 0; c < C; ++c) {
        const auto& cj = comps_[c];
        acc[c].value += w * cj.value[p];
        for (int a = 0; a < N; ++a) {
          acc[c].grad[a] += w * cj.grad[a][p];
          for (int b = a; b < N; ++b) acc[c].hess(a, b) += w * cj.hess[a][b][p];
        }
      }
    });
    SymJet<N> h;
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) {
        ScalarJet<N>& sj = acc[sym_index(N, i, j)];
        for (int a = 0; a < N; ++a)
          for (int b = 0; b < a; ++b) sj.hess(a, b) = sj.hess(b, a);
        h.set_component(i, j, sj);
      }
    return h;
  }

  const Grid<N>& grid() const { return *grid_; }

 private:
  const Grid<N>* grid_;
  std::vector<ScalarJetArrays<N>> comps_;
};

/// ∇̄h at every grid node (rank 3, d[k](i, j) = h_{ij;k}).
template <int N>
std::vector<Rank3<N>> covariant_derivative(const SymTensorField<N>& h, const BackgroundSpace<N>& space) {
  const GridTensorJetField<N> jets(h);
  std::vector<Rank3<N>> out(h.grid->size());
  parallel_for(out.size(), [&](std::size_t p) {
    const SymJet<N> j = jets.at_node(p);
    out[p] = covariant_gradient(j.v, j.d, space.connection_at(h.grid->node(p)));
  });
  return out;
}

/// ∇̄²λ at every grid node.
template <int N>
std::vector<Mat<N>> covariant_hessian(const GridScalar<N>& f, const BackgroundSpace<N>& space) {
  const GridScalarJetField<N> jets(*f.grid, f.values);
  std::vector<Mat<N>> out(f.grid->size());
  parallel_for(out.size(), [&](std::size_t p) {
    out[p] = covariant_hessian(jets.at_node(p), space.connection_at(f.grid->node(p)));
  });
  return out;
}

// ---------------------------------------------------------------------------
// CSV export.

template <int N>
void write_csv(const SymTensorField<N>& t, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os << std::setprecision(17);
  for (int a = 0; a < N; ++a) os << "x" << a << ",";
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) os << "h" << i << j << (i == N - 1 && j == N - 1 ? "\n" : ",");
  for (std::size_t p = 0; p < t.values.size(); ++p) {
    const Vec<N> x = t.grid->node(p);
    for (int a = 0; a < N; ++a) os << x[a] << ",";
    for (int c = 0; c < sym_size(N); ++c) os << t.values[p][c] << (c + 1 == sym_size(N) ? "\n" : ",");
  }
}

template <int N>
void write_csv(const GridScalar<N>& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os << std::setprecision(17);
  for (int a = 0; a < N; ++a) os << "x" << a << ",";
  os << "value\n";
  for (std::size_t p = 0; p < f.values.size(); ++p) {
    const Vec<N> x = f.grid->node(p);
    for (int a = 0; a < N; ++a) os << x[a] << ",";
    os << f.values[p] << "\n";
  }
}

}  // namespace rigidity
