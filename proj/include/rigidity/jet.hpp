#pragma once
// Second-order jets: value, coordinate gradient and coordinate Hessian.
// Scalar jets carry forward-mode arithmetic so closed-form fields can be
// assembled from simpler pieces without hand-differentiating.

#include "rigidity/core.hpp"

namespace rigidity {

template <int N>
struct ScalarJet {
  double value = 0.0;
  Vec<N> grad = Vec<N>::Zero();
  Mat<N> hess = Mat<N>::Zero();

  static ScalarJet constant(double c) {
    ScalarJet j;
    j.value = c;
    return j;
  }
  static ScalarJet coordinate(const Vec<N>& x, int i) {
    ScalarJet j;
    j.value = x[i];
    j.grad[i] = 1.0;
    return j;
  }

  ScalarJet& operator+=(const ScalarJet& o) {
    value += o.value;
    grad += o.grad;
    hess += o.hess;
    return *this;
  }
  ScalarJet& operator-=(const ScalarJet& o) {
    value -= o.value;
    grad -= o.grad;
    hess -= o.hess;
    return *this;
  }
  ScalarJet& operator*=(double c) {
    value *= c;
    grad *= c;
    hess *= c;
    return *this;
  }
};

template <int N>
ScalarJet<N> operator+(ScalarJet<N> a, const ScalarJet<N>& b) { return a += b; }
template <int N>
ScalarJet<N> operator-(ScalarJet<N> a, const ScalarJet<N>& b) { return a -= b; }
template <int N>
ScalarJet<N> operator-(ScalarJet<N> a) { return a *= -1.0; }
template <int N>
ScalarJet<N> operator*(ScalarJet<N> a, double c) { return a *= c; }
template <int N>
ScalarJet<N> operator*(double c, ScalarJet<N> a) { return a *= c; }
template <int N>
ScalarJet<N> operator+(ScalarJet<N> a, double c) {
  a.value += c;
  return a;
}
template <int N>
ScalarJet<N> operator+(double c, ScalarJet<N> a) { return a + c; }

template <int N>
ScalarJet<N> operator*(const ScalarJet<N>& a, const ScalarJet<N>& b) {
  ScalarJet<N> r;
  r.value = a.value * b.value;
  r.grad = a.grad * b.value + b.grad * a.value;
  r.hess = a.hess * b.value + b.hess * a.value + a.grad * b.grad.transpose() + b.grad * a.grad.transpose();
  return r;
}

/// Composition phi(a) given phi, phi', phi'' at a.value.
template <int N>
ScalarJet<N> compose(const ScalarJet<N>& a, double f0, double f1, double f2) {
  ScalarJet<N> r;
  r.value = f0;
  r.grad = f1 * a.grad;
  r.hess = f1 * a.hess + f2 * a.grad * a.grad.transpose();
  return r;
}

template <int N>
ScalarJet<N> reciprocal(const ScalarJet<N>& a) {
  const double v = a.value;
  return compose(a, 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
}

template <int N>
ScalarJet<N> operator/(const ScalarJet<N>& a, const ScalarJet<N>& b) { return a * reciprocal(b); }

template <int N>
ScalarJet<N> exp(const ScalarJet<N>& a) {
  const double e = std::exp(a.value);
  return compose(a, e, e, e);
}

template <int N>
ScalarJet<N> log(const ScalarJet<N>& a) {
  const double v = a.value;
  return compose(a, std::log(v), 1.0 / v, -1.0 / (v * v));
}

template <int N>
ScalarJet<N> sqrt(const ScalarJet<N>& a) {
  const double s = std::sqrt(a.value);
  return compose(a, s, 0.5 / s, -0.25 / (s * a.value));
}

template <int N>
ScalarJet<N> pow(const ScalarJet<N>& a, double p) {
  const double v = a.value;
  return compose(a, std::pow(v, p), p * std::pow(v, p - 1.0), p * (p - 1.0) * std::pow(v, p - 2.0));
}

/// Jet of a symmetric 2-tensor: v(i, j), d[k](i, j) = d_k v_ij, dd[k][l](i, j).
template <int N>
struct SymJet {
  Mat<N> v = Mat<N>::Zero();
  Rank3<N> d = zero_rank3<N>();
  Rank4<N> dd = zero_rank4<N>();

  SymJet& operator+=(const SymJet& o) {
    v += o.v;
    for (int k = 0; k < N; ++k) {
      d[k] += o.d[k];
      for (int l = 0; l < N; ++l) dd[k][l] += o.dd[k][l];
    }
    return *this;
  }
  SymJet& operator*=(double c) {
    v *= c;
    for (int k = 0; k < N; ++k) {
      d[k] *= c;
      for (int l = 0; l < N; ++l) dd[k][l] *= c;
    }
    return *this;
  }

  ScalarJet<N> component(int i, int j) const {
    ScalarJet<N> s;
    s.value = v(i, j);
    for (int k = 0; k < N; ++k) {
      s.grad[k] = d[k](i, j);
      for (int l = 0; l < N; ++l) s.hess(k, l) = dd[k][l](i, j);
    }
    return s;
  }
  void set_component(int i, int j, const ScalarJet<N>& s) {
    for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
      v(a, b) = s.value;
      for (int k = 0; k < N; ++k) {
        d[k](a, b) = s.grad[k];
        for (int l = 0; l < N; ++l) dd[k][l](a, b) = s.hess(k, l);
      }
    }
  }
};

template <int N>
SymJet<N> operator+(SymJet<N> a, const SymJet<N>& b) { return a += b; }
template <int N>
SymJet<N> operator*(double c, SymJet<N> a) { return a *= c; }

}  // namespace rigidity
