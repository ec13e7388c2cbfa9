#pragma once

// Small fixed-size dense linear algebra: Gaussian elimination with partial
// pivoting for real or complex N x N systems, with a 1-norm condition
// estimate from the explicit inverse (N is at most 4 here).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>

#include "hcv/errors.hpp"

namespace hcv::linalg {

template <class T, std::size_t N>
using Vector = std::array<T, N>;

template <class T, std::size_t N>
using Matrix = std::array<std::array<T, N>, N>;

template <class T, std::size_t N>
struct SolveResult {
  Vector<T, N> x;
  double condition;          // kappa_1(A)
  double relative_residual;  // ||A x - b||_inf / (||A||_inf ||x||_inf + ||b||_inf)
};

template <class T>
double magnitude(const T& v) {
  return std::abs(v);
}

template <class T, std::size_t N>
Vector<T, N> multiply(const Matrix<T, N>& a, const Vector<T, N>& x) {
  Vector<T, N> y{};
  for (std::size_t i = 0; i < N; ++i) {
    T acc{};
    for (std::size_t j = 0; j < N; ++j) acc += a[i][j] * x[j];
    y[i] = acc;
  }
  return y;
}

template <class T, std::size_t N>
double norm_inf(const Vector<T, N>& x) {
  double m = 0.0;
  for (const auto& v : x) m = std::max(m, magnitude(v));
  return m;
}

template <class T, std::size_t N>
double norm_inf(const Matrix<T, N>& a) {
  double m = 0.0;
  for (const auto& row : a) {
    double s = 0.0;
    for (const auto& v : row) s += magnitude(v);
    m = std::max(m, s);
  }
  return m;
}

template <class T, std::size_t N>
double norm_1(const Matrix<T, N>& a) {
  double m = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += magnitude(a[i][j]);
    m = std::max(m, s);
  }
  return m;
}

/// LU factorization with row pivoting, stored in place.
template <class T, std::size_t N>
class LuFactor {
 public:
  explicit LuFactor(const Matrix<T, N>& a, double singular_tol = 1e-12) : lu_(a) {
    const double scale = norm_inf(a);
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw NumericalFailure("linear system matrix is zero or non-finite");
    }
    for (std::size_t i = 0; i < N; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < N; ++k) {
      std::size_t piv = k;
      double best = magnitude(lu_[k][k]);
      for (std::size_t i = k + 1; i < N; ++i) {
        const double m = magnitude(lu_[i][k]);
        if (m > best) {
          best = m;
          piv = i;
        }
      }
      if (best <= singular_tol * scale) {
        throw NumericalFailure("linear system is singular to working tolerance (pivot " +
                               std::to_string(k) + ")");
      }
      if (piv != k) {
        std::swap(lu_[piv], lu_[k]);
        std::swap(perm_[piv], perm_[k]);
      }
      for (std::size_t i = k + 1; i < N; ++i) {
        const T f = lu_[i][k] / lu_[k][k];
        lu_[i][k] = f;
        for (std::size_t j = k + 1; j < N; ++j) lu_[i][j] -= f * lu_[k][j];
      }
    }
  }

  Vector<T, N> solve(const Vector<T, N>& b) const {
    Vector<T, N> y{};
    for (std::size_t i = 0; i < N; ++i) {
      T acc = b[perm_[i]];
      for (std::size_t j = 0; j < i; ++j) acc -= lu_[i][j] * y[j];
      y[i] = acc;
    }
    Vector<T, N> x{};
    for (std::size_t ii = N; ii-- > 0;) {
      T acc = y[ii];
      for (std::size_t j = ii + 1; j < N; ++j) acc -= lu_[ii][j] * x[j];
      x[ii] = acc / lu_[ii][ii];
    }
    return x;
  }

  Matrix<T, N> inverse() const {
    Matrix<T, N> inv{};
    for (std::size_t j = 0; j < N; ++j) {
      Vector<T, N> e{};
      e[j] = T(1);
      const auto col = solve(e);
      for (std::size_t i = 0; i < N; ++i) inv[i][j] = col[i];
    }
    return inv;
  }

 private:
  Matrix<T, N> lu_;
  std::array<std::size_t, N> perm_{};
};

/// Solves A x = b. Throws NumericalFailure when A is singular within
/// `singular_tol` (relative pivot size) or its condition number exceeds
/// 1 / singular_tol.
template <class T, std::size_t N>
SolveResult<T, N> solve(const Matrix<T, N>& a, const Vector<T, N>& b,
                        double singular_tol = 1e-12) {
  const LuFactor<T, N> lu(a, singular_tol);
  SolveResult<T, N> out;
  out.x = lu.solve(b);
  out.condition = norm_1(a) * norm_1(lu.inverse());
  if (!std::isfinite(out.condition) || out.condition * singular_tol > 1.0) {
    throw NumericalFailure("linear system is ill-conditioned (kappa_1 = " +
                           std::to_string(out.condition) + ")");
  }
  auto r = multiply(a, out.x);
  for (std::size_t i = 0; i < N; ++i) r[i] -= b[i];
  const double denom = norm_inf(a) * norm_inf(out.x) + norm_inf(b);
  out.relative_residual = denom > 0.0 ? norm_inf(r) / denom : 0.0;
  return out;
}

}  // namespace hcv::linalg
