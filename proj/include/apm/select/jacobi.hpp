#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "apm/core/matrix.hpp"

namespace apm::select {

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // descending
  core::Matrix eigenvectors;        // column i pairs with eigenvalues[i]
  std::size_t sweeps = 0;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cyclic Jacobi rotations for real symmetric matrices. Converged when the
// off-diagonal Frobenius norm drops below 1e-10 (at most 100 sweeps).
// Asymmetry beyond 1e-8 is rejected; smaller asymmetry is symmetrized away.
inline EigenDecomposition eigendecompose_symmetric(const core::Matrix& input) {
  if (input.rows() != input.cols() || input.rows() == 0)
    throw std::invalid_argument("eigendecompose_symmetric: square matrix required");
  const std::size_t n = input.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::fabs(input(i, j) - input(j, i)) > 1e-8)
        throw std::invalid_argument("eigendecompose_symmetric: matrix is not symmetric");

  core::Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (input(i, j) + input(j, i));
  core::Matrix v = core::Matrix::identity(n);

  const double tol = 1e-10;
  const std::size_t max_sweeps = 100;
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  std::size_t sweep = 0;
  while (off_norm() > tol) {
    if (sweep >= max_sweeps)
      throw ConvergenceError("jacobi eigensolver did not converge in 100 sweeps");
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (apq == 0.0) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        double tau = s / (1.0 + c);
        double app = a(p, p), aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (i != p && i != q) {
            double aip = a(i, p), aiq = a(i, q);
            a(i, p) = a(p, i) = aip - s * (aiq + tau * aip);
            a(i, q) = a(q, i) = aiq + s * (aip - tau * aiq);
          }
          double vip = v(i, p), viq = v(i, q);
          v(i, p) = vip * c - viq * s;
          v(i, q) = vip * s + viq * c;
        }
      }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  EigenDecomposition out;
  out.sweeps = sweep;
  out.eigenvalues.resize(n);
  out.eigenvectors = core::Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
  }
  return out;
}

// || M - V diag(lambda) V^T ||_inf, the reconstruction residual.
inline double reconstruction_error(const core::Matrix& m, const EigenDecomposition& e) {
  std::size_t n = m.rows();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += e.eigenvectors(i, k) * e.eigenvalues[k] * e.eigenvectors(j, k);
      worst = std::max(worst, std::fabs(m(i, j) - s));
    }
  return worst;
}

// max | V^T V - I |, the orthonormality residual.
inline double orthonormality_error(const EigenDecomposition& e) {
  std::size_t n = e.eigenvectors.rows();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += e.eigenvectors(k, i) * e.eigenvectors(k, j);
      worst = std::max(worst, std::fabs(s - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

}  // namespace apm::select
