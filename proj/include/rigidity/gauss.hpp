#pragma once
// One-dimensional Gauss-Legendre rules.

#include "rigidity/core.hpp"

namespace rigidity {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with `count` nodes on [lo, hi]. Newton iteration on
/// the Legendre recurrence; nodes accurate to machine precision.
inline Rule1D gauss_legendre(int count, double lo = -1.0, double hi = 1.0) {
  if (count < 1) throw SizeError("gauss_legendre: need at least one node");
  Rule1D rule;
  rule.nodes.resize(count);
  rule.weights.resize(count);
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  for (int i = 0; i < (count + 1) / 2; ++i) {
    double z = std::cos(pi * (i + 0.75) / (count + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= count; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = count * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = 0.0;
    for (int k = 1; k <= count; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = count * (z * p0 - p1) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = mid - half * z;
    rule.nodes[count - 1 - i] = mid + half * z;
    rule.weights[i] = half * w;
    rule.weights[count - 1 - i] = half * w;
  }
  return rule;
}

/// Integral of f over [lo, hi] with a composite Gauss rule (panels x 20 nodes).
template <class F>
double integrate_1d(F&& f, double lo, double hi, int panels = 16) {
  const Rule1D ref = gauss_legendre(20);
  std::vector<double> parts(static_cast<std::size_t>(panels));
  const double w = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * w;
    double s = 0.0;
    for (std::size_t k = 0; k < ref.nodes.size(); ++k)
      s += ref.weights[k] * f(a + 0.5 * w * (ref.nodes[k] + 1.0));
    parts[p] = 0.5 * w * s;
  }
  return pairwise_sum(parts);
}

}  // namespace rigidity
