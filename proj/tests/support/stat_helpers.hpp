#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace testsupport {

// Two-sample Kolmogorov-Smirnov test. Returns true when the null hypothesis
// of a common distribution is rejected at level alpha.
inline bool ks_two_sample_reject(std::vector<double> a, std::vector<double> b,
                                 double alpha) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks test: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  double c_alpha = std::sqrt(-0.5 * std::log(alpha / 2.0));
  double critical = c_alpha * std::sqrt((na + nb) / (na * nb));
  return d > critical;
}

}  // namespace testsupport
