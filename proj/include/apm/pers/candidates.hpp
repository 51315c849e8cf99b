#pragma once

// Candidate-pool construction for preference supervision: for each principle
// one response generated under a follow instruction and one under an avoid
// instruction (2M total, ordered j ascending with follow before avoid), plus
// best/worst selection by a caller-supplied reward value per candidate.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "apm/gateway/gateway.hpp"
#include "apm/gateway/judge_client.hpp"
#include "apm/gateway/templates.hpp"
#include "apm/pers/labels.hpp"

namespace apm::pers {

struct Candidate {
  std::size_t principle = 0;
  int direction = +1;
  std::string text;
};

// `context` is an optional personalization block appended to the system
// prompt; `variant` distinguishes otherwise-identical generation calls.
inline std::vector<Candidate> generate_candidates(
    gateway::Gateway& gw, const gateway::PromptTemplates& templates,
    const std::vector<std::string>& principle_names, const std::string& prompt,
    const std::string& context = "", const std::string& variant = "") {
  if (principle_names.empty())
    throw std::invalid_argument("generate_candidates: empty principle catalog");
  std::vector<Candidate> out;
  out.reserve(2 * principle_names.size());
  for (std::size_t j = 0; j < principle_names.size(); ++j) {
    for (int dir : {+1, -1}) {
      gateway::ChatCall call;
      call.endpoint = "generator";
      call.system = templates.generate_system + "\n" +
                    gateway::style_instruction(templates, principle_names[j], dir);
      if (!context.empty()) call.system += "\n" + context;
      call.user = prompt;
      call.variant = variant;
      out.push_back(Candidate{j, dir, gw.complete(call)});
    }
  }
  return out;
}

// Plain generation without a style instruction (the history-blind baseline
// and the backbone of the RAG methods, which personalize via `context`).
inline std::string generate_response(gateway::Gateway& gw,
                                     const gateway::PromptTemplates& templates,
                                     const std::string& prompt,
                                     const std::string& context = "",
                                     const std::string& variant = "") {
  gateway::ChatCall call;
  call.endpoint = "generator";
  call.system = templates.generate_system;
  if (!context.empty()) call.system += "\n" + context;
  call.user = prompt;
  call.variant = variant;
  return gw.complete(call);
}

// Diagonal judge table over a standard 2M candidate pool: principle j's
// judge (always asked in the follow direction, i.e. "does this follow j")
// scores the two candidates generated for j.  Scores are raw judge output;
// any user weighting happens downstream on the table.
inline CandidateScoreTable diagonal_score_table(
    gateway::Gateway& gw, const gateway::PromptTemplates& templates,
    const std::vector<std::string>& principle_names,
    const std::vector<Candidate>& pool, int max_reasks = 3) {
  if (pool.size() != 2 * principle_names.size())
    throw std::invalid_argument("diagonal_score_table: pool must hold 2M candidates");
  CandidateScoreTable table;
  table.follow.resize(principle_names.size());
  table.avoid.resize(principle_names.size());
  for (std::size_t j = 0; j < principle_names.size(); ++j) {
    const Candidate& plus = pool[2 * j];
    const Candidate& minus = pool[2 * j + 1];
    if (plus.principle != j || plus.direction != +1 || minus.principle != j ||
        minus.direction != -1)
      throw std::invalid_argument("diagonal_score_table: pool out of standard order");
    gateway::JudgeRequest rq;
    rq.principle = principle_names[j];
    rq.direction = +1;
    rq.response = plus.text;
    table.follow[j] =
        gateway::judge_principle(gw, templates, rq, max_reasks).score;
    rq.response = minus.text;
    table.avoid[j] =
        gateway::judge_principle(gw, templates, rq, max_reasks).score;
  }
  return table;
}

struct PreferencePair {
  std::string prompt;
  Candidate best;
  Candidate worst;
  std::vector<double> rewards;  // parallel to the candidate pool
  bool degenerate = false;      // every candidate scored identically
};

// Best/worst by reward; ties keep the earliest candidate, so the result is
// deterministic in pool order.  Every candidate's reward lies in
// [reward(worst), reward(best)] by construction.
inline PreferencePair build_preference_pair(const std::string& prompt,
                                            const std::vector<Candidate>& candidates,
                                            const std::vector<double>& rewards) {
  if (candidates.size() < 2)
    throw std::invalid_argument("build_preference_pair: need at least 2 candidates");
  if (candidates.size() != rewards.size())
    throw std::invalid_argument("build_preference_pair: reward count mismatch");
  std::size_t best = 0, worst = 0;
  for (std::size_t i = 1; i < rewards.size(); ++i) {
    if (rewards[i] > rewards[best]) best = i;
    if (rewards[i] < rewards[worst]) worst = i;
  }
  PreferencePair pair;
  pair.prompt = prompt;
  pair.best = candidates[best];
  pair.worst = candidates[worst];
  pair.rewards = rewards;
  pair.degenerate = rewards[best] == rewards[worst];
  return pair;
}

}  // namespace apm::pers
