#pragma once
// Pointwise tensor calculus on jets: covariant derivatives, traces and
// ḡ-norms. Everything here acts on a single point.

#include "rigidity/geometry.hpp"

#include <type_traits>

namespace rigidity {

/// Covariant derivatives of a symmetric 2-tensor.
/// d[k](i, j) = h_{ij;k}; dd[k][l](i, j) = h_{ij;kl} = (∇_l ∇_k h)_{ij}.
template <int N>
struct CovJet {
  Mat<N> v;
  Rank3<N> d;
  Rank4<N> dd;
};

template <int N>
CovJet<N> covariant_derivative(const SymJet<N>& h, const Connection<N>& c) {
  CovJet<N> out;
  out.v = h.v;
  // T_{ijk} = d_k h_ij - G^m_ki h_mj - G^m_kj h_im, stored t[k](i, j).
  Rank3<N> t;
  for (int k = 0; k < N; ++k) {
    const Mat<N> gk = c.gamma_lower_slot(k);  // gk(m, i) = G^m_ki
    t[k] = h.d[k] - gk.transpose() * h.v - h.v * gk;
  }
  // dT[l][k](i, j) = d_l T_{ijk}.
  for (int k = 0; k < N; ++k) {
    const Mat<N> gk = c.gamma_lower_slot(k);
    for (int l = 0; l < N; ++l) {
      Mat<N> dgk;  // dgk(m, i) = d_l G^m_ki
      for (int m = 0; m < N; ++m) dgk.row(m) = c.dgamma[l][m].row(k);
      Mat<N> dt = h.dd[l][k] - dgk.transpose() * h.v - h.v * dgk - gk.transpose() * h.d[l] - h.d[l] * gk;
      // Covariant derivative in slot l of the rank-3 tensor T.
      const Mat<N> gl = c.gamma_lower_slot(l);
      dt -= gl.transpose() * t[k] + t[k] * gl;
      for (int m = 0; m < N; ++m) dt -= c.gamma[m](l, k) * t[m];
      out.dd[k][l] = dt;
    }
  }
  out.d = t;
  return out;
}

/// First covariant derivative only.
template <int N>
Rank3<N> covariant_gradient(const Mat<N>& v, const std::type_identity_t<Rank3<N>>& d, const Connection<N>& c) {
  Rank3<N> t;
  for (int k = 0; k < N; ++k) {
    const Mat<N> gk = c.gamma_lower_slot(k);
    t[k] = d[k] - gk.transpose() * v - v * gk;
  }
  return t;
}

/// ḡ-inner product of two symmetric 2-tensors.
template <int N>
double inner(const Mat<N>& a, const Mat<N>& b, const Mat<N>& ginv) {
  return (ginv * a * ginv * b).trace();
}

template <int N>
double trace(const Mat<N>& a, const Mat<N>& ginv) {
  return (ginv * a).trace();
}

/// |∇h|² = ḡ^{kk'} ḡ^{ii'} ḡ^{jj'} h_{ij;k} h_{i'j';k'}.
template <int N>
double norm2(const std::type_identity_t<Rank3<N>>& t, const Mat<N>& ginv) {
  double s = 0.0;
  for (int k = 0; k < N; ++k)
    for (int m = 0; m < N; ++m)
      if (ginv(k, m) != 0.0) s += ginv(k, m) * inner(t[k], t[m], ginv);
  return s;
}

/// Covariant gradient of tr h: (tr h)_{;k} = ḡ^{ij} h_{ij;k}.
template <int N>
Vec<N> trace_gradient(const std::type_identity_t<Rank3<N>>& t, const Mat<N>& ginv) {
  Vec<N> g;
  for (int k = 0; k < N; ++k) g[k] = trace(t[k], ginv);
  return g;
}

/// (div h)_j = ḡ^{ik} h_{ij;k}.
template <int N>
Vec<N> divergence(const std::type_identity_t<Rank3<N>>& t, const Mat<N>& ginv) {
  Vec<N> out = Vec<N>::Zero();
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < N; ++k) out[j] += ginv(i, k) * t[k](i, j);
  return out;
}

/// Squared ḡ-length of a covector.
template <int N>
double covector_norm2(const Vec<N>& w, const Mat<N>& ginv) {
  return w.dot(ginv * w);
}

}  // namespace rigidity
