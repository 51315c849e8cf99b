#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "apm/calib/judge.hpp"
#include "apm/core/attribute.hpp"
#include "apm/core/mapping.hpp"
#include "apm/core/matrix.hpp"
#include "apm/core/random.hpp"
#include "apm/core/statutil.hpp"

namespace apm::calib {

struct SimulationOptions {
  core::MappingKind kind = core::MappingKind::SignedPermutation;
  std::size_t n_attributes = 10;
  std::size_t m_principles = 10;
  std::size_t k_active = 1;
  std::size_t n_samples = 100000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  // Negative-control switches: freezing the mapping (and optionally the user)
  // removes the resampling that the zero-mean cancellation argument needs.
  bool freeze_mapping = false;
  bool freeze_user = false;
  double confidence = 0.99;
};

struct SimulationReport {
  std::string name;
  std::size_t n_samples = 0;
  double mean_reward = 0.0;
  double reward_std_error = 0.0;
  double half_tie_winrate = 0.0;
  double winrate_std_error = 0.0;
  double strict_winrate = 0.0;
  double tie_fraction = 0.0;
  double confidence = 0.99;
  std::vector<std::string> flags;

  double z() const { return core::z_for_confidence(confidence); }
  bool reward_ci_contains_zero() const {
    return std::fabs(mean_reward) <= z() * reward_std_error;
  }
  bool winrate_ci_contains_half() const {
    return std::fabs(half_tie_winrate - 0.5) <= z() * winrate_std_error;
  }
};

namespace detail {

struct Accum {
  core::StreamingMoments reward;
  core::StreamingMoments wtilde;
  std::size_t strict_wins = 0;
  std::size_t ties = 0;

  void merge(const Accum& o) {
    reward.merge(o.reward);
    wtilde.merge(o.wtilde);
    strict_wins += o.strict_wins;
    ties += o.ties;
  }
};

// Work is split into a fixed number of seed chunks so results depend only on
// the seed, never on the worker count or thread scheduling; chunk accumulators
// merge in index order.
inline constexpr std::size_t kChunks = 64;

template <class Body>
Accum run_chunked(const SimulationOptions& o, Body body) {
  std::vector<Accum> acc(kChunks);
  std::vector<std::size_t> counts(kChunks, o.n_samples / kChunks);
  for (std::size_t c = 0; c < o.n_samples % kChunks; ++c) ++counts[c];
  auto run_chunk = [&](std::size_t c) {
    core::Rng rng(core::derive_seed(o.seed, "chunk", c));
    for (std::size_t i = 0; i < counts[c]; ++i) body(rng, acc[c]);
  };
  if (o.workers <= 1) {
    for (std::size_t c = 0; c < kChunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    unsigned n_threads = std::min<unsigned>(o.workers, kChunks);
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t c = next.fetch_add(1); c < kChunks; c = next.fetch_add(1))
          run_chunk(c);
      });
    for (auto& th : pool) th.join();
  }
  Accum total;
  for (const Accum& a : acc) total.merge(a);
  return total;
}

// Draws a fresh user and their preference vector. Only the active attribute
// columns of a dense Gaussian mapping enter p = C * a, so those columns are
// drawn lazily; the law of p is unchanged. Signed permutations are sampled in
// full (they are O(n) anyway).
struct PreferenceSampler {
  const SimulationOptions& opts;
  core::MappingMatrix frozen_mapping;  // used when opts.freeze_mapping
  core::AttributeVector frozen_user;   // used when opts.freeze_user

  explicit PreferenceSampler(const SimulationOptions& o) : opts(o) {
    if (o.freeze_mapping)
      frozen_mapping = core::sample_mapping(o.kind, o.m_principles, o.n_attributes,
                                            core::derive_seed(o.seed, "frozen-mapping"));
    if (o.freeze_user)
      frozen_user = core::sample_attribute_vector(o.n_attributes, o.k_active,
                                                  core::derive_seed(o.seed, "frozen-user"));
  }

  core::AttributeVector sample_user(core::Rng& rng) const {
    if (opts.freeze_user) return frozen_user;
    return core::sample_attribute_vector(opts.n_attributes, opts.k_active, rng);
  }

  std::vector<double> preference(core::Rng& rng, const core::AttributeVector& a) const {
    if (opts.freeze_mapping) return core::preference_vector(frozen_mapping, a);
    std::vector<double> p(opts.m_principles, 0.0);
    if (opts.kind == core::MappingKind::SignedPermutation) {
      core::MappingMatrix c = core::sample_signed_permutation(opts.n_attributes, rng);
      return core::preference_vector(c, a);
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.values[i] == 0) continue;
      double ai = static_cast<double>(a.values[i]);
      for (std::size_t j = 0; j < opts.m_principles; ++j) p[j] += ai * rng.normal();
    }
    return p;
  }
};

}  // namespace detail

// Mean reward of a history-blind policy under an arbitrary judge. With the
// mapping resampled zero-mean and independent of users and scores, the mean
// converges to 0 regardless of judge bias or noise.
inline SimulationReport simulate_baseline_reward(const SimulationOptions& opts,
                                                 const SyntheticJudge& judge) {
  detail::PreferenceSampler sampler(opts);
  detail::Accum total = detail::run_chunked(opts, [&](core::Rng& rng, detail::Accum& acc) {
    core::AttributeVector a = sampler.sample_user(rng);
    std::vector<double> p = sampler.preference(rng, a);
    core::ScoreVector s = judge.score_response(rng, {}, &a.values);
    acc.reward.add(core::dot(p, s));
  });
  SimulationReport r;
  r.name = "baseline_reward";
  r.n_samples = total.reward.count();
  r.mean_reward = total.reward.mean();
  r.reward_std_error = total.reward.std_error();
  r.confidence = opts.confidence;
  if (opts.freeze_mapping) r.flags.push_back("mapping_frozen");
  if (opts.freeze_user) r.flags.push_back("user_frozen");
  return r;
}

// Half-tie win rate of one history-blind response against another, with the
// judge's bias applied to side A only (a judge that favors A on every
// principle). S = p . (scores_a - scores_b) is symmetric around 0, so the
// half-tie rate centers on 0.5 and the strict rate cannot exceed it.
inline SimulationReport simulate_baseline_winrate(const SimulationOptions& opts,
                                                  const SyntheticJudge& judge) {
  SyntheticJudge judge_b = judge;
  judge_b.bias.assign(judge.bias.size(), 0.0);
  detail::PreferenceSampler sampler(opts);
  detail::Accum total = detail::run_chunked(opts, [&](core::Rng& rng, detail::Accum& acc) {
    core::AttributeVector a = sampler.sample_user(rng);
    std::vector<double> p = sampler.preference(rng, a);
    core::ScoreVector sa = judge.score_response(rng, {}, &a.values);
    core::ScoreVector sb = judge_b.score_response(rng, {}, &a.values);
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) s += p[j] * (sa[j] - sb[j]);
    if (s > 0.0) {
      acc.wtilde.add(1.0);
      ++acc.strict_wins;
    } else if (s == 0.0) {
      acc.wtilde.add(0.5);
      ++acc.ties;
    } else {
      acc.wtilde.add(0.0);
    }
  });
  SimulationReport r;
  r.name = "baseline_winrate";
  r.n_samples = total.wtilde.count();
  r.half_tie_winrate = total.wtilde.mean();
  r.winrate_std_error = total.wtilde.std_error();
  r.strict_winrate =
      static_cast<double>(total.strict_wins) / static_cast<double>(total.wtilde.count());
  r.tie_fraction =
      static_cast<double>(total.ties) / static_cast<double>(total.wtilde.count());
  r.confidence = opts.confidence;
  return r;
}

// Oracle policy: instructs the generator with the user's strongest principle
// and its sign, modeled as a compliance boost on that principle. With k = 1
// signed permutations and zero noise the mean reward equals the gain exactly.
inline SimulationReport simulate_oracle_policy(const SimulationOptions& opts,
                                               const SyntheticJudge& judge) {
  detail::PreferenceSampler sampler(opts);
  detail::Accum total = detail::run_chunked(opts, [&](core::Rng& rng, detail::Accum& acc) {
    core::AttributeVector a = sampler.sample_user(rng);
    std::vector<double> p = sampler.preference(rng, a);
    std::size_t best = 0;
    for (std::size_t j = 1; j < p.size(); ++j)
      if (std::fabs(p[j]) > std::fabs(p[best])) best = j;
    int dir = p[best] >= 0.0 ? 1 : -1;
    core::ScoreVector s =
        judge.score_response(rng, std::make_pair(best, dir), &a.values);
    acc.reward.add(core::dot(p, s));
  });
  SimulationReport r;
  r.name = "oracle_policy";
  r.n_samples = total.reward.count();
  r.mean_reward = total.reward.mean();
  r.reward_std_error = total.reward.std_error();
  r.confidence = opts.confidence;
  if (judge.compliance_gain == 0.0) r.flags.push_back("indistinguishable_from_baseline");
  return r;
}

}  // namespace apm::calib
