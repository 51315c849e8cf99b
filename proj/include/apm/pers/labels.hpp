#pragma once

// Routing-label strategies.  All four operate on a per-user score table over
// the 2M diagonal candidates: follow[j] and avoid[j] hold principle j's judge
// score for the candidate generated under "follow j" / "avoid j".
//
// The ops are pure functions of the table they are given.  The benchmark
// feeds them user-perceived scores via weighted_score_table: a user with
// preference weight p_j perceives a raw judge score s as c + p_j*(s - c),
// which for p_j = -1 is exactly the 11 - s flip convention and for p_j = 0
// collapses to the neutral midpoint.  Raw judge scores are user-blind by
// design (the judge never sees the user), so the weighting step is where a
// simulated user's reaction enters the labels.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "apm/core/score.hpp"

namespace apm::pers {

struct RoutingLabel {
  std::size_t principle = 0;  // 0-based index into the principle catalog
  int direction = +1;         // +1 follow / -1 avoid
  bool degenerate = false;    // no usable signal; index/direction are fallback

  bool operator==(const RoutingLabel& o) const {
    return principle == o.principle && direction == o.direction;
  }
};

// Class id layout shared by the classifier and the regression targets:
// class 2j = (j, follow), class 2j+1 = (j, avoid).
inline std::size_t encode_class(std::size_t principle, int direction) {
  return 2 * principle + (direction > 0 ? 0 : 1);
}

inline std::pair<std::size_t, int> decode_class(std::size_t cls) {
  return {cls / 2, cls % 2 == 0 ? +1 : -1};
}

struct CandidateScoreTable {
  std::vector<double> follow;  // follow[j] = J_j(candidate following j)
  std::vector<double> avoid;   // avoid[j]  = J_j(candidate avoiding j)

  std::size_t num_principles() const { return follow.size(); }

  void validate() const {
    if (follow.empty() || follow.size() != avoid.size())
      throw std::invalid_argument("score table: follow/avoid sizes must match");
  }
};

// User-perceived table: s -> c + p_j * (s - c) per principle on both sides.
inline CandidateScoreTable weighted_score_table(const std::vector<double>& preference,
                                                const CandidateScoreTable& raw) {
  raw.validate();
  if (preference.size() != raw.num_principles())
    throw std::invalid_argument("weighted_score_table: preference size mismatch");
  const double c = core::kScoreMidpoint;
  CandidateScoreTable out = raw;
  for (std::size_t j = 0; j < preference.size(); ++j) {
    out.follow[j] = c + preference[j] * (raw.follow[j] - c);
    out.avoid[j] = c + preference[j] * (raw.avoid[j] - c);
  }
  return out;
}

// Within-principle margin m_j = follow[j] - avoid[j]; label = (argmax |m_j|,
// sign of that margin).  Ties on |m_j| go to the lowest index; an all-zero
// margin vector falls back to (0, +1) and is flagged.
inline RoutingLabel margin_label(const CandidateScoreTable& table) {
  table.validate();
  std::size_t best = 0;
  double best_abs = -1.0;
  for (std::size_t j = 0; j < table.num_principles(); ++j) {
    double m = std::abs(table.follow[j] - table.avoid[j]);
    if (m > best_abs) {
      best_abs = m;
      best = j;
    }
  }
  double margin = table.follow[best] - table.avoid[best];
  if (margin == 0.0) return RoutingLabel{0, +1, true};
  return RoutingLabel{best, margin > 0 ? +1 : -1, false};
}

// All 2M candidates ranked independently by raw score; ties resolved in
// (j asc, follow before avoid) order.  Flagged only when every score is
// identical (no signal at all).
inline RoutingLabel two_sided_argmax_label(const CandidateScoreTable& table) {
  table.validate();
  std::size_t best_j = 0;
  int best_dir = +1;
  double best_score = table.follow[0];
  bool any_different = false;
  for (std::size_t j = 0; j < table.num_principles(); ++j) {
    for (int dir : {+1, -1}) {
      double s = dir > 0 ? table.follow[j] : table.avoid[j];
      if (s != best_score) any_different = true;
      if (s > best_score) {
        best_score = s;
        best_j = j;
        best_dir = dir;
      }
    }
  }
  return RoutingLabel{best_j, best_dir, !any_different};
}

// Follow-side only: pick the principle deviating most from the scale
// midpoint; the direction is the deviation's sign.  Scores exactly at the
// midpoint carry no signal and are excluded; if every score sits at the
// midpoint the label degenerates to (0, +1), flagged.
inline RoutingLabel one_sided_argmax_label(const std::vector<double>& follow_scores,
                                           double midpoint = core::kScoreMidpoint) {
  if (follow_scores.empty())
    throw std::invalid_argument("one_sided_argmax_label: empty scores");
  std::size_t best = 0;
  double best_abs = 0.0;
  for (std::size_t j = 0; j < follow_scores.size(); ++j) {
    double dev = std::abs(follow_scores[j] - midpoint);
    if (dev > best_abs) {
      best_abs = dev;
      best = j;
    }
  }
  if (best_abs == 0.0) return RoutingLabel{0, +1, true};
  return RoutingLabel{best, follow_scores[best] > midpoint ? +1 : -1, false};
}

// Regression supervision: the full 2M score vector in class-id order
// (index 2j = follow[j], 2j+1 = avoid[j]).
inline std::vector<double> regression_targets(const CandidateScoreTable& table) {
  table.validate();
  std::vector<double> out(2 * table.num_principles());
  for (std::size_t j = 0; j < table.num_principles(); ++j) {
    out[2 * j] = table.follow[j];
    out[2 * j + 1] = table.avoid[j];
  }
  return out;
}

}  // namespace apm::pers
