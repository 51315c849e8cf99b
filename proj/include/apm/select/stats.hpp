#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "apm/core/matrix.hpp"

namespace apm::select {

struct ColumnStats {
  std::vector<double> means;
  std::vector<double> sds;  // sample sd, ddof = 1
};

inline ColumnStats column_stats(const core::Matrix& data) {
  if (data.rows() < 2)
    throw std::invalid_argument("column_stats: need at least two rows");
  ColumnStats s;
  s.means.resize(data.cols());
  s.sds.resize(data.cols());
  for (std::size_t c = 0; c < data.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < data.rows(); ++r) sum += data(r, c);
    double mean = sum / static_cast<double>(data.rows());
    double ss = 0.0;
    for (std::size_t r = 0; r < data.rows(); ++r) {
      double d = data(r, c) - mean;
      ss += d * d;
    }
    s.means[c] = mean;
    s.sds[c] = std::sqrt(ss / static_cast<double>(data.rows() - 1));
  }
  return s;
}

// Standardizes columns to zero mean / unit sample variance and returns
// Z^T Z / (rows - 1). Unit diagonal by construction. Columns with zero
// variance cannot be standardized and are rejected.
inline core::Matrix correlation_matrix(const core::Matrix& data) {
  ColumnStats st = column_stats(data);
  for (double sd : st.sds)
    if (sd <= 0.0)
      throw std::invalid_argument("correlation_matrix: zero-variance column");
  std::size_t n = data.rows(), p = data.cols();
  core::Matrix z(n, p);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c)
      z(r, c) = (data(r, c) - st.means[c]) / st.sds[c];
  core::Matrix corr(p, p);
  double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += z(r, i) * z(r, j);
      corr(i, j) = corr(j, i) = s / denom;
    }
  return corr;
}

}  // namespace apm::select
