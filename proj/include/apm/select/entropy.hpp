#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace apm::select {

// Shannon entropy (bits) of the empirical distribution of a score column.
// Values are binned by exact value; 0 * log 0 contributes 0.
inline double shannon_entropy(const std::vector<double>& column) {
  if (column.empty()) throw std::invalid_argument("shannon_entropy: empty column");
  std::map<double, std::size_t> counts;
  for (double v : column) ++counts[v];
  double n = static_cast<double>(column.size());
  double h = 0.0;
  for (const auto& [value, count] : counts) {
    (void)value;
    double p = static_cast<double>(count) / n;
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

}  // namespace apm::select
