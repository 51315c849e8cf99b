#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace apm::core {

inline constexpr double kDefaultTieEpsilon = 1e-9;

struct MetricsSummary {
  std::size_t users = 0;
  std::size_t wins = 0;
  std::size_t losses = 0;
  std::size_t ties = 0;
  double mean_delta = 0.0;
  // Ties excluded; empty when there are no losses (a ratio, not infinity).
  std::optional<double> wl_ratio;
  // (wins + 0.5 * ties) / users: ties split evenly, so a no-signal method
  // centers on 0.5.
  double half_tie_winrate = 0.0;
  double tie_epsilon = kDefaultTieEpsilon;
};

inline MetricsSummary compute_metrics(const std::vector<double>& personalized,
                                      const std::vector<double>& baseline,
                                      double tie_epsilon = kDefaultTieEpsilon) {
  if (personalized.size() != baseline.size())
    throw std::invalid_argument("compute_metrics: length mismatch");
  if (personalized.empty()) throw std::invalid_argument("compute_metrics: empty input");
  if (tie_epsilon < 0.0) throw std::invalid_argument("compute_metrics: negative tie epsilon");

  MetricsSummary m;
  m.users = personalized.size();
  m.tie_epsilon = tie_epsilon;
  double sum = 0.0;
  for (std::size_t i = 0; i < personalized.size(); ++i) {
    double delta = personalized[i] - baseline[i];
    sum += delta;
    if (delta > tie_epsilon)
      ++m.wins;
    else if (delta < -tie_epsilon)
      ++m.losses;
    else
      ++m.ties;
  }
  m.mean_delta = sum / static_cast<double>(m.users);
  if (m.losses > 0)
    m.wl_ratio = static_cast<double>(m.wins) / static_cast<double>(m.losses);
  m.half_tie_winrate =
      (static_cast<double>(m.wins) + 0.5 * static_cast<double>(m.ties)) /
      static_cast<double>(m.users);
  return m;
}

}  // namespace apm::core
