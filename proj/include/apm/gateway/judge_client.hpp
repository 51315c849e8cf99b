#pragma once

// Judge-side client: renders the scoring prompt, parses the integer verdict,
// and re-asks (with a fresh variant, so the retry is a genuinely new draw)
// when a reply does not contain a standalone integer in [1, 10].  Also the
// two judge-quality diagnostics computed over (follow, avoid) score pairs.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "apm/core/statutil.hpp"
#include "apm/gateway/gateway.hpp"
#include "apm/gateway/templates.hpp"
#include "apm/gateway/types.hpp"

namespace apm::gateway {

struct JudgeParseError : GatewayError {
  using GatewayError::GatewayError;
};

// First standalone integer in [1, 10]: a maximal digit run that is not part
// of a decimal number ("3.5" yields nothing, "7/10" yields 7, "100" yields
// nothing).
inline std::optional<int> parse_verdict(const std::string& text) {
  const std::size_t n = text.size();
  auto is_digit = [&](std::size_t i) {
    return i < n && std::isdigit(static_cast<unsigned char>(text[i])) != 0;
  };
  for (std::size_t i = 0; i < n;) {
    if (!is_digit(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (is_digit(j)) ++j;
    bool decimal_left = i >= 2 && text[i - 1] == '.' && is_digit(i - 2);
    bool decimal_right = j < n && text[j] == '.' && is_digit(j + 1);
    if (!decimal_left && !decimal_right && j - i <= 2) {
      int v = std::stoi(text.substr(i, j - i));
      if (v >= 1 && v <= 10) return v;
    }
    i = j;
  }
  return std::nullopt;
}

struct JudgeRequest {
  std::string principle;
  int direction = +1;  // +1 follow / -1 avoid
  std::string response;
  std::string variant;  // caller-chosen tag; re-asks append to it
};

inline ChatCall make_judge_call(const PromptTemplates& t, const JudgeRequest& req) {
  ChatCall call;
  call.endpoint = "judge";
  call.system = t.judge_system;
  call.user = render(t.judge_user,
                     {{"principle", req.principle},
                      {"direction", req.direction >= 0 ? "follow" : "avoid"},
                      {"direction_phrase", req.direction >= 0 ? "follows" : "avoids"},
                      {"response", req.response}});
  call.variant = req.variant;
  return call;
}

inline JudgeVerdict judge_principle(Gateway& gw, const PromptTemplates& t,
                                    const JudgeRequest& req, int max_reasks = 3) {
  std::string raw;
  for (int attempt = 0; attempt <= max_reasks; ++attempt) {
    ChatCall call = make_judge_call(t, req);
    if (attempt > 0) call.variant += "|reask" + std::to_string(attempt);
    raw = gw.complete(call);
    if (auto v = parse_verdict(raw))
      return JudgeVerdict{*v, attempt + 1, raw};
  }
  throw JudgeParseError("judge reply unparseable after " +
                        std::to_string(max_reasks + 1) + " attempts; last: " +
                        raw.substr(0, 200));
}

// Mean |s_follow + s_avoid - 11| over score pairs for the same (response,
// principle); 0 for a perfectly sign-balanced judge.
inline double judge_balance(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("judge_balance: no pairs");
  double acc = 0.0;
  for (const auto& [follow, avoid] : pairs)
    acc += std::abs(follow + avoid - 11.0);
  return acc / static_cast<double>(pairs.size());
}

// Pearson correlation between follow and avoid scores; strongly negative for
// a judge that actually reads the direction.  Empty when either side has no
// variance (the caller reports it as undefined rather than guessing).
inline std::optional<double> judge_anticorrelation(
    const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 2) return std::nullopt;
  std::vector<double> a, b;
  a.reserve(pairs.size());
  b.reserve(pairs.size());
  for (const auto& [follow, avoid] : pairs) {
    a.push_back(follow);
    b.push_back(avoid);
  }
  return core::pearson(a, b);
}

}  // namespace apm::gateway
