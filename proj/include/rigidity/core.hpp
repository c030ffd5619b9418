#pragma once
// Shared vocabulary: error types, fixed-size linear algebra aliases,
// deterministic reductions and the node-parallel loop.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rigidity {

inline constexpr double pi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Errors. The CLI maps UsageError-derived failures to exit code 2 and
// NumericalError-derived failures to exit code 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
};

/// Grid or problem too small for the requested stencils.
class SizeError : public UsageError {
 public:
  using UsageError::UsageError;
};

/// A perturbation too large for the expansion terms (|s h| > 1/2 somewhere).
class RangeError : public UsageError {
 public:
  using UsageError::UsageError;
};

/// A chart point outside the valid region of the chart.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An operation precondition (constraint, hypothesis, admissible constant) failed.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class MetricError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FrameError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BracketError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Solver breakdown (non-convergence, loss of positivity).
class BreakdownError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// ---------------------------------------------------------------------------
// Fixed-size algebra. Rank-3 arrays are indexed [k](i, j) with k the
// derivative slot; rank-4 arrays [k][l](i, j).

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;
template <int N>
using Mat = Eigen::Matrix<double, N, N>;
template <int N>
using Rank3 = std::array<Mat<N>, N>;
template <int N>
using Rank4 = std::array<std::array<Mat<N>, N>, N>;

template <int N>
Rank3<N> zero_rank3() {
  Rank3<N> t;
  for (auto& m : t) m.setZero();
  return t;
}

template <int N>
Rank4<N> zero_rank4() {
  Rank4<N> t;
  for (auto& row : t)
    for (auto& m : row) m.setZero();
  return t;
}

/// Number of independent components of a symmetric N x N tensor.
constexpr int sym_size(int n) { return n * (n + 1) / 2; }

/// Packed (i <= j) index of a symmetric pair.
constexpr int sym_index(int n, int i, int j) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i - 1) / 2 + (j - i);
}

// ---------------------------------------------------------------------------
// Deterministic reductions.

/// Pairwise (tree) summation with a fixed split, independent of scheduling.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Worker count: RIGIDITYLAB_THREADS caps it, default is the hardware count.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RIGIDITYLAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return hw;
}

/// Runs body(i) for i in [0, count). Each index is written by exactly one
/// worker, so results do not depend on the worker count. The exception of the
/// lowest-numbered failing chunk is rethrown after all workers join.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                         unsigned workers = 0) {
  if (workers == 0) workers = worker_count();
  if (workers <= 1 || count < 256) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(count, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([lo, hi, &body, &err = errors[w]] {
        try {
          for (std::size_t i = lo; i < hi; ++i) body(i);
        } catch (...) {
          err = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Least-squares slope of log(y) against log(x), with the RMS residual of the fit.
struct LogLogFit {
  double slope = 0.0;
  double fit_residual = 0.0;
};

inline LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = x.size();
  if (m < 2 || y.size() != m) throw ShapeError("fit_loglog: need at least two matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::max(std::abs(y[i]), 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = m * sxx - sx * sx;
  LogLogFit fit;
  fit.slope = (m * sxy - sx * sy) / den;
  const double icpt = (sy - fit.slope * sx) / m;
  double ss = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = std::log(std::max(std::abs(y[i]), 1e-300)) - (icpt + fit.slope * std::log(x[i]));
    ss += r * r;
  }
  fit.fit_residual = std::sqrt(ss / m);
  return fit;
}

}  // namespace rigidity
