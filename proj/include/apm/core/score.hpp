#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "apm/core/random.hpp"

namespace apm::core {

// Judge scores live on a 1..10 scale; 5.5 is the scale midpoint.
inline constexpr double kScoreMin = 1.0;
inline constexpr double kScoreMax = 10.0;
inline constexpr double kScoreMidpoint = 5.5;

using ScoreVector = std::vector<double>;

inline void validate_scores(const ScoreVector& s) {
  if (s.empty()) throw std::invalid_argument("score vector is empty");
  for (double v : s)
    if (!(v >= kScoreMin && v <= kScoreMax))
      throw std::invalid_argument("score outside the 1..10 scale");
}

// Sign-balanced aggregate: each principle's score is independently replaced by
// its scale reflection 11-s with probability 1/2, then the vector is averaged.
// Any policy whose scores do not depend on the flip pattern averages to 5.5.
inline double sign_balanced_principle_score(const ScoreVector& scores, std::uint64_t seed) {
  validate_scores(scores);
  Rng rng(seed);
  double sum = 0.0;
  for (double s : scores) sum += rng.bernoulli(0.5) ? (11.0 - s) : s;
  return sum / static_cast<double>(scores.size());
}

}  // namespace apm::core
