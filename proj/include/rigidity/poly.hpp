#pragma once
// Polynomials in scaled chart coordinates y = (x - c)/R with exact jets.
// Derivatives of polynomials are polynomials, so jets of any order are
// available by differentiating first.

#include "rigidity/jet.hpp"

#include <map>

namespace rigidity {

template <int N>
using Exponent = std::array<int, N>;

/// All exponents of total degree <= degree, graded then lexicographic.
template <int N>
std::vector<Exponent<N>> exponents_up_to(int degree) {
  std::vector<Exponent<N>> out;
  for (int d = 0; d <= degree; ++d) {
    Exponent<N> e{};
    std::function<void(int, int)> rec = [&](int axis, int left) {
      if (axis == N - 1) {
        e[axis] = left;
        out.push_back(e);
        return;
      }
      for (int k = left; k >= 0; --k) {
        e[axis] = k;
        rec(axis + 1, left - k);
      }
    };
    rec(0, d);
  }
  return out;
}

template <int N>
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(const Vec<N>& center, double scale) : center_(center), scale_(scale) {}

  static Polynomial monomial(const Exponent<N>& e, const Vec<N>& center, double scale, double coef = 1.0) {
    Polynomial p(center, scale);
    p.terms_[e] = coef;
    return p;
  }

  const Vec<N>& center() const { return center_; }
  double scale() const { return scale_; }
  const std::map<Exponent<N>, double>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int k : e) s += k;
      d = std::max(d, s);
    }
    return d;
  }

  Polynomial& add(const Polynomial& o, double factor = 1.0) {
    if (terms_.empty()) {
      center_ = o.center_;
      scale_ = o.scale_;
    } else if (!o.terms_.empty() && ((center_ - o.center_).norm() > 0.0 || scale_ != o.scale_)) {
      throw ShapeError("polynomials with different coordinates");
    }
    for (const auto& [e, c] : o.terms_) terms_[e] += factor * c;
    return *this;
  }

  Polynomial& operator*=(double f) {
    for (auto& [e, c] : terms_) c *= f;
    return *this;
  }

  /// d/dx_i (chain rule through the scaling).
  Polynomial derivative(int i) const {
    Polynomial p(center_, scale_);
    for (const auto& [e, c] : terms_) {
      if (e[i] == 0) continue;
      Exponent<N> f = e;
      --f[i];
      p.terms_[f] += c * e[i] / scale_;
    }
    return p;
  }

  double value(const Vec<N>& x) const { return jet(x).value; }

  ScalarJet<N> jet(const Vec<N>& x) const {
    ScalarJet<N> out;
    if (terms_.empty()) return out;
    const int deg = degree();
    const Vec<N> y = (x - center_) / scale_;
    std::array<std::vector<double>, N> pw;
    for (int i = 0; i < N; ++i) {
      pw[i].assign(deg + 1, 1.0);
      for (int k = 1; k <= deg; ++k) pw[i][k] = pw[i][k - 1] * y[i];
    }
    const double r1 = 1.0 / scale_, r2 = r1 * r1;
    auto powr = [&](int i, int k) { return k < 0 ? 0.0 : pw[i][k]; };
    for (const auto& [e, c] : terms_) {
      if (c == 0.0) continue;
      // Product of all factors except those listed.
      auto prod_except = [&](int a, int b) {
        double p = 1.0;
        for (int j = 0; j < N; ++j)
          if (j != a && j != b) p *= pw[j][e[j]];
        return p;
      };
      out.value += c * prod_except(-1, -1);
      for (int i = 0; i < N; ++i) {
        if (e[i] == 0) continue;
        const double rest = prod_except(i, -1);
        out.grad[i] += c * e[i] * powr(i, e[i] - 1) * rest * r1;
        if (e[i] >= 2) out.hess(i, i) += c * e[i] * (e[i] - 1) * powr(i, e[i] - 2) * rest * r2;
        for (int j = i + 1; j < N; ++j) {
          if (e[j] == 0) continue;
          const double v = c * e[i] * e[j] * powr(i, e[i] - 1) * powr(j, e[j] - 1) * prod_except(i, j) * r2;
          out.hess(i, j) += v;
          out.hess(j, i) += v;
        }
      }
    }
    return out;
  }

 private:
  Vec<N> center_ = Vec<N>::Zero();
  double scale_ = 1.0;
  std::map<Exponent<N>, double> terms_;
};

}  // namespace rigidity
