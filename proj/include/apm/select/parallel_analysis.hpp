#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "apm/core/random.hpp"
#include "apm/select/jacobi.hpp"
#include "apm/select/stats.hpp"

namespace apm::select {

struct ParallelAnalysisResult {
  std::vector<double> thresholds;  // per-rank percentile of surrogate eigenvalues
  std::size_t surrogates = 0;
  double percentile = 0.95;
};

// Horn-style null model: T standard-normal datasets of the observed shape, each
// run through the same correlation + eigendecomposition path. The per-rank
// threshold is the nearest-rank percentile of that rank's surrogate
// eigenvalues; the retained component count is how many observed eigenvalues
// exceed their rank's threshold.
inline ParallelAnalysisResult parallel_analysis(std::size_t n_rows, std::size_t n_cols,
                                                std::size_t surrogates, double percentile,
                                                std::uint64_t seed) {
  if (n_rows < 2 || n_cols == 0)
    throw std::invalid_argument("parallel_analysis: need >= 2 rows and >= 1 column");
  if (surrogates == 0) throw std::invalid_argument("parallel_analysis: need >= 1 surrogate");
  if (!(percentile > 0.0 && percentile < 1.0))
    throw std::invalid_argument("parallel_analysis: percentile in (0,1)");

  std::vector<std::vector<double>> per_rank(n_cols,
                                            std::vector<double>(surrogates, 0.0));
  for (std::size_t t = 0; t < surrogates; ++t) {
    core::Rng rng(core::derive_seed(seed, "surrogate", t));
    core::Matrix data(n_rows, n_cols);
    for (double& v : data.data()) v = rng.normal();
    EigenDecomposition e = eigendecompose_symmetric(correlation_matrix(data));
    for (std::size_t r = 0; r < n_cols; ++r) per_rank[r][t] = e.eigenvalues[r];
  }

  ParallelAnalysisResult out;
  out.surrogates = surrogates;
  out.percentile = percentile;
  out.thresholds.resize(n_cols);
  // Nearest-rank percentile: the ceil(q * T)-th smallest value.
  std::size_t rank_index = static_cast<std::size_t>(
      std::ceil(percentile * static_cast<double>(surrogates)));
  rank_index = std::min(std::max<std::size_t>(rank_index, 1), surrogates) - 1;
  for (std::size_t r = 0; r < n_cols; ++r) {
    std::sort(per_rank[r].begin(), per_rank[r].end());
    out.thresholds[r] = per_rank[r][rank_index];
  }
  return out;
}

inline std::size_t components_above_threshold(const std::vector<double>& observed,
                                              const ParallelAnalysisResult& pa) {
  if (observed.size() != pa.thresholds.size())
    throw std::invalid_argument("components_above_threshold: rank count mismatch");
  std::size_t k = 0;
  for (std::size_t r = 0; r < observed.size(); ++r)
    if (observed[r] > pa.thresholds[r]) ++k;
  return k;
}

}  // namespace apm::select
