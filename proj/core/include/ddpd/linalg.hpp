#pragma once

#include <cmath>
#include <vector>

#include "ddpd/dual.hpp"
#include "ddpd/errors.hpp"

namespace ddpd {

// In-place lower Cholesky factor of a symmetric positive definite matrix
// (row-major n x n). Works on any scalar with sqrt/div; positivity is
// checked on the primal value.
template <class T>
void cholesky(std::vector<T>& a, int n) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      T s = a[i * n + j];
      for (int k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      if (i == j) {
        if (!(val(s) > 0.0))
          throw SingularCovariance("cholesky: nonpositive pivot " +
                                   std::to_string(val(s)));
        a[i * n + j] = sqrt(s);
      } else {
        a[i * n + j] = s / a[j * n + j];
      }
    }
    for (int j = i + 1; j < n; ++j) a[i * n + j] = const_like(a[0], 0.0);
  }
}

template <class T>
T cholesky_logdet(const std::vector<T>& chol, int n) {
  T s = log(chol[0]);
  for (int i = 1; i < n; ++i) s += log(chol[i * n + i]);
  return 2.0 * s;
}

// Solves L L^T x = b given the Cholesky factor.
template <class T, class B>
std::vector<T> cholesky_solve(const std::vector<T>& chol, int n,
                              const std::vector<B>& b) {
  std::vector<T> y;
  y.reserve(n);
  for (int i = 0; i < n; ++i) {
    T s = const_like(chol[0], 0.0) + b[i];
    for (int k = 0; k < i; ++k) s -= chol[i * n + k] * y[k];
    y.push_back(s / chol[i * n + i]);
  }
  for (int i = n - 1; i >= 0; --i) {
    T s = y[i];
    for (int k = i + 1; k < n; ++k) s -= chol[k * n + i] * y[k];
    y[i] = s / chol[i * n + i];
  }
  return y;
}

// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n);

// Gaussian elimination with partial pivoting for small dense systems;
// returns false on (numerically) singular input.
bool solve_dense(std::vector<double> a, std::vector<double>& b, int n);

}  // namespace ddpd
