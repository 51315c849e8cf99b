#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "apm/core/matrix.hpp"

namespace apm::select {

struct VarimaxResult {
  core::Matrix rotated;           // loadings * rotation
  core::Matrix rotation;          // orthogonal, accumulated pairwise rotations
  std::vector<double> criterion_trace;  // one entry per sweep, nondecreasing
  std::size_t sweeps = 0;
  bool converged = false;
};

class VarimaxError : public std::runtime_error {
 public:
  VarimaxError(const std::string& what, VarimaxResult last)
      : std::runtime_error(what), last_iterate(std::move(last)) {}
  VarimaxResult last_iterate;
};

// Simplicity criterion: sum over components of the variance of squared
// loadings down the column.
inline double varimax_criterion(const core::Matrix& l) {
  double total = 0.0;
  double n = static_cast<double>(l.rows());
  for (std::size_t j = 0; j < l.cols(); ++j) {
    double s2 = 0.0, s4 = 0.0;
    for (std::size_t i = 0; i < l.rows(); ++i) {
      double sq = l(i, j) * l(i, j);
      s2 += sq;
      s4 += sq * sq;
    }
    total += s4 / n - (s2 / n) * (s2 / n);
  }
  return total;
}

// Pairwise-rotation varimax. With kaiser_normalize (default) rows are scaled
// to unit communality before rotating and scaled back afterwards; zero rows
// are left untouched. Row communalities are invariant under the rotation.
// Converges when a full sweep improves the criterion by at most `tol`;
// exceeding max_sweeps raises VarimaxError carrying the last iterate.
inline VarimaxResult varimax_rotate(const core::Matrix& loadings, double tol = 1e-8,
                                    std::size_t max_sweeps = 1000,
                                    bool kaiser_normalize = true) {
  if (loadings.rows() == 0 || loadings.cols() == 0)
    throw std::invalid_argument("varimax_rotate: empty loading matrix");

  const std::size_t n = loadings.rows(), k = loadings.cols();
  core::Matrix work = loadings;
  std::vector<double> row_norm(n, 1.0);
  if (kaiser_normalize) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += work(i, j) * work(i, j);
      double h = std::sqrt(s);
      if (h > 0.0) {
        row_norm[i] = h;
        for (std::size_t j = 0; j < k; ++j) work(i, j) /= h;
      }
    }
  }

  VarimaxResult res;
  res.rotation = core::Matrix::identity(k);

  auto finish = [&](bool converged, std::size_t sweeps) {
    res.sweeps = sweeps;
    res.converged = converged;
    res.rotated = work;
    if (kaiser_normalize)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) res.rotated(i, j) *= row_norm[i];
  };

  if (k == 1) {
    res.criterion_trace.push_back(varimax_criterion(work));
    finish(true, 0);
    return res;
  }

  double prev = varimax_criterion(work);
  res.criterion_trace.push_back(prev);
  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (std::size_t p = 0; p + 1 < k; ++p)
      for (std::size_t q = p + 1; q < k; ++q) {
        double a = 0.0, b = 0.0, cc = 0.0, d = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          double x = work(i, p), y = work(i, q);
          double u = x * x - y * y, v = 2.0 * x * y;
          a += u;
          b += v;
          cc += u * u - v * v;
          d += 2.0 * u * v;
        }
        double nn = static_cast<double>(n);
        double num = d - 2.0 * a * b / nn;
        double den = cc - (a * a - b * b) / nn;
        if (num == 0.0 && den == 0.0) continue;
        double phi = 0.25 * std::atan2(num, den);
        if (std::fabs(phi) < 1e-14) continue;
        double c = std::cos(phi), s = std::sin(phi);
        for (std::size_t i = 0; i < n; ++i) {
          double x = work(i, p), y = work(i, q);
          work(i, p) = c * x + s * y;
          work(i, q) = -s * x + c * y;
        }
        for (std::size_t i = 0; i < k; ++i) {
          double x = res.rotation(i, p), y = res.rotation(i, q);
          res.rotation(i, p) = c * x + s * y;
          res.rotation(i, q) = -s * x + c * y;
        }
      }
    double cur = varimax_criterion(work);
    res.criterion_trace.push_back(cur);
    if (cur - prev <= tol) {
      finish(true, sweep);
      return res;
    }
    prev = cur;
  }

  finish(false, max_sweeps);
  throw VarimaxError("varimax did not converge within the sweep limit", res);
}

}  // namespace apm::select
