#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "apm/core/random.hpp"
#include "apm/core/score.hpp"

namespace apm::calib {

// Parametric stand-in for an LLM judge. Scores a response on every principle:
//   score_j = post(5.5 + bias_j + compliance + leakage + noise)
// where `compliance` is +/- gain on the principle the response was instructed
// to follow or avoid, and `leakage` optionally couples scores to the user's
// attribute vector through a fixed identity-shaped channel (the knob that
// negative-control runs use to violate judge/user independence).
struct SyntheticJudge {
  std::vector<double> bias;  // one entry per principle
  double noise_sd = 0.0;
  double compliance_gain = 0.0;
  bool clamp = true;
  bool quantize = false;  // emit integers like a real 1..10 judge
  double attribute_leak_gain = 0.0;

  std::size_t num_principles() const { return bias.size(); }

  static SyntheticJudge uniform_bias(std::size_t m, double level, double noise,
                                     double gain = 0.0) {
    SyntheticJudge j;
    j.bias.assign(m, level);
    j.noise_sd = noise;
    j.compliance_gain = gain;
    return j;
  }

  double finalize(double raw) const {
    double v = raw;
    if (quantize) v = std::round(v);
    if (clamp) v = std::min(core::kScoreMax, std::max(core::kScoreMin, v));
    return v;
  }

  // Pre-finalize scores (no rounding/clamping); one noise draw per principle
  // in index order, so two calls with equally-seeded generators agree.
  // `instructed`: principle index and direction (+1 follow / -1 avoid) the
  // response was generated under; empty for history-blind responses.
  // `attributes`: the scored user's attribute entries, used only when
  // attribute_leak_gain is nonzero.
  core::ScoreVector raw_scores(
      core::Rng& rng, std::optional<std::pair<std::size_t, int>> instructed = {},
      const std::vector<int>* attributes = nullptr) const {
    if (bias.empty()) throw std::invalid_argument("SyntheticJudge: empty bias vector");
    core::ScoreVector out(bias.size());
    for (std::size_t j = 0; j < bias.size(); ++j) {
      double raw = core::kScoreMidpoint + bias[j];
      if (instructed && instructed->first == j)
        raw += compliance_gain * static_cast<double>(instructed->second);
      if (attribute_leak_gain != 0.0 && attributes && j < attributes->size())
        raw += attribute_leak_gain * static_cast<double>((*attributes)[j]);
      if (noise_sd > 0.0) raw += rng.normal(0.0, noise_sd);
      out[j] = raw;
    }
    return out;
  }

  core::ScoreVector score_response(
      core::Rng& rng, std::optional<std::pair<std::size_t, int>> instructed = {},
      const std::vector<int>* attributes = nullptr) const {
    core::ScoreVector out = raw_scores(rng, instructed, attributes);
    for (double& v : out) v = finalize(v);
    return out;
  }
};

}  // namespace apm::calib
