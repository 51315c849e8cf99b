#pragma once

// Deterministic offline backend.  Each role implements a small textual law:
//
//   rewriter    echoes the user message and appends one [[style:Name:+/-]]
//               token per trait named in the system prompt, so the "styled"
//               text carries the user's attribute signature verbatim.
//   generator   emits a short content-hashed reply; if the system prompt
//               contains a follow/avoid style instruction it appends the
//               matching [[principle:Name:+/-]] marker, and otherwise copies
//               the dominant principle marker from any preference notes
//               embedded in the system prompt.
//   judge       parses the "Principle:"/"Direction:"/"Response:" headers of
//               the judge template and scores the response with the shared
//               parametric judge model, noise seeded by the response text.
//   summarizer  extracts the style tokens or preference markers it sees.
//   embedder    returns a unit vector dominated by per-style-token basis
//               vectors, so texts written under the same traits are close.
//
// All outputs are pure functions of (config, request), which is what makes
// cached runs byte-identical and re-runs with different worker counts agree.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "apm/calib/judge.hpp"
#include "apm/core/catalog.hpp"
#include "apm/core/random.hpp"
#include "apm/gateway/backend.hpp"
#include "apm/gateway/sha256.hpp"
#include "apm/gateway/templates.hpp"
#include "apm/gateway/types.hpp"

namespace apm::gateway {

struct Marker {
  std::string name;
  int sign = +1;       // +1 follow / -1 avoid
  std::string token;   // the literal [[...]] text
};

// Scans for prefix + name + ":" + sign + "]]" occurrences, in text order.
inline std::vector<Marker> extract_markers(const std::string& text,
                                           const std::string& prefix) {
  std::vector<Marker> out;
  std::size_t pos = 0;
  while ((pos = text.find(prefix, pos)) != std::string::npos) {
    auto end = text.find("]]", pos);
    if (end == std::string::npos) break;
    std::string inner = text.substr(pos + prefix.size(), end - pos - prefix.size());
    auto colon = inner.rfind(':');
    if (colon != std::string::npos && colon + 1 < inner.size()) {
      char s = inner[colon + 1];
      if (s == '+' || s == '-') {
        out.push_back(Marker{inner.substr(0, colon), s == '+' ? +1 : -1,
                             text.substr(pos, end + 2 - pos)});
      }
    }
    pos = end + 2;
  }
  return out;
}

inline std::string style_token(const std::string& name, int sign) {
  return "[[style:" + name + ":" + (sign >= 0 ? "+" : "-") + "]]";
}

inline std::string principle_marker(const std::string& name, int sign) {
  return "[[principle:" + name + ":" + (sign >= 0 ? "+" : "-") + "]]";
}

struct SyntheticWorldConfig {
  std::uint64_t seed = 1;
  std::vector<std::string> attribute_names = core::default_attribute_names();
  std::vector<std::string> principle_names = core::default_principle_names();
  PromptTemplates templates;
  calib::SyntheticJudge judge;   // quantize is forced on
  std::size_t embedding_dim = 64;
  double content_weight = 0.35;  // embedder: weight of the content hash vector

  static SyntheticWorldConfig defaults(std::uint64_t seed = 1, double noise_sd = 1.0,
                                       double gain = 2.0) {
    SyntheticWorldConfig c;
    c.seed = seed;
    c.judge = calib::SyntheticJudge::uniform_bias(c.principle_names.size(), 0.0,
                                                  noise_sd, gain);
    return c;
  }
};

class SyntheticBackend : public Backend {
 public:
  explicit SyntheticBackend(SyntheticWorldConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.judge.bias.size() != cfg_.principle_names.size())
      throw GatewayError("synthetic judge bias size must match principle count");
    cfg_.judge.quantize = true;
    cfg_.judge.clamp = true;
  }

  const SyntheticWorldConfig& config() const { return cfg_; }

  std::string complete(const ChatCall& call) override {
    if (call.endpoint == "rewriter") return rewrite(call);
    if (call.endpoint == "generator") return generate(call);
    if (call.endpoint == "judge") return judge(call);
    if (call.endpoint == "summarizer") return summarize(call);
    throw GatewayError("synthetic backend: unknown role " + call.endpoint);
  }

  std::vector<double> embed(const EmbeddingCall& call) override {
    std::vector<double> v(cfg_.embedding_dim, 0.0);
    add_hash_direction(v, core::fnv1a64(call.input), cfg_.content_weight);
    for (const auto& m : extract_markers(call.input, "[[style:"))
      add_hash_direction(v, core::fnv1a64(m.token), 1.0);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      v[0] = 1.0;
      return v;
    }
    for (double& x : v) x /= norm;
    return v;
  }

  // Noise-seed convention shared with the cross-check tests: the judge's
  // noise stream depends on the response text only, never on the principle
  // or direction being asked about, so one response yields one consistent
  // latent score vector.
  std::uint64_t judge_noise_seed(const std::string& response) const {
    return core::derive_seed(cfg_.seed, "judge-noise", core::fnv1a64(response));
  }

  struct ParsedJudgeCall {
    std::string principle;
    int direction = +1;
    std::string response;
  };

  static ParsedJudgeCall parse_judge_call(const std::string& user) {
    ParsedJudgeCall p;
    p.principle = find_header(user, "Principle: ");
    std::string dir = find_header(user, "Direction: ");
    if (dir == "follow")
      p.direction = +1;
    else if (dir == "avoid")
      p.direction = -1;
    else
      throw GatewayError("judge call: bad Direction header: " + dir);
    const std::string tag = "Response:\n";
    auto pos = user.find(tag);
    if (pos == std::string::npos)
      throw GatewayError("judge call: missing Response section");
    p.response = user.substr(pos + tag.size());
    return p;
  }

 private:
  static std::string find_header(const std::string& text, const std::string& label) {
    auto pos = text.find(label);
    if (pos != 0) {
      pos = text.find("\n" + label);
      if (pos == std::string::npos)
        throw GatewayError("judge call: missing header " + label);
      pos += 1;
    }
    pos += label.size();
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    return text.substr(pos, end - pos);
  }

  static std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }

  std::string rewrite(const ChatCall& call) const {
    const std::string sys = lower(call.system);
    const std::string negation = "the opposite of ";
    std::string out = call.user;
    for (const auto& name : cfg_.attribute_names) {
      auto pos = sys.find(lower(name));
      if (pos == std::string::npos) continue;
      bool negated = pos >= negation.size() &&
                     sys.compare(pos - negation.size(), negation.size(), negation) == 0;
      out += " " + style_token(name, negated ? -1 : +1);
    }
    return out;
  }

  std::string generate(const ChatCall& call) const {
    std::string reply =
        "[reply " +
        sha256_hex(call.system + '\x1f' + call.user + '\x1f' + call.variant).substr(0, 12) +
        "]";
    // Explicit instruction wins; otherwise adopt the dominant preference
    // marker visible in the personalization context.
    for (std::size_t j = 0; j < cfg_.principle_names.size(); ++j) {
      for (int dir : {+1, -1}) {
        auto instr = style_instruction(cfg_.templates, cfg_.principle_names[j], dir);
        if (call.system.find(instr) != std::string::npos)
          return reply + " " + principle_marker(cfg_.principle_names[j], dir);
      }
    }
    auto ctx = extract_markers(call.system, "[[principle:");
    if (!ctx.empty()) {
      std::map<std::string, int> counts;
      for (const auto& m : ctx) counts[m.token]++;
      const Marker* best = &ctx.front();
      for (const auto& m : ctx)
        if (counts[m.token] > counts[best->token]) best = &m;
      return reply + " " + best->token;
    }
    return reply;
  }

  std::string judge(const ChatCall& call) const {
    auto parsed = parse_judge_call(call.user);
    std::size_t principle_idx = index_of(cfg_.principle_names, parsed.principle);

    std::optional<std::pair<std::size_t, int>> instructed;
    for (const auto& m : extract_markers(parsed.response, "[[principle:")) {
      instructed = {index_of(cfg_.principle_names, m.name), m.sign};
      break;
    }

    core::Rng rng(judge_noise_seed(parsed.response));
    double raw = cfg_.judge.raw_scores(rng, instructed)[principle_idx];
    if (parsed.direction < 0) raw = 11.0 - raw;
    int verdict = static_cast<int>(std::llround(cfg_.judge.finalize(raw)));
    // Occasional prose wrapper keeps the integer parser honest end to end.
    if (core::fnv1a64(parsed.response + parsed.principle) % 7 == 0)
      return "Score: " + std::to_string(verdict) + ".";
    return std::to_string(verdict);
  }

  std::string summarize(const ChatCall& call) const {
    if (call.user.find("Preferred:") != std::string::npos) return summarize_prefs(call);
    std::vector<std::string> tokens;
    for (const auto& m : extract_markers(call.user, "[[style:"))
      if (std::find(tokens.begin(), tokens.end(), m.token) == tokens.end())
        tokens.push_back(m.token);
    if (tokens.empty()) return "Neutral writing style.";
    return "Writing style profile: " + join(tokens) + ".";
  }

  std::string summarize_prefs(const ChatCall& call) const {
    std::vector<std::string> liked, disliked;
    std::size_t pos = 0;
    bool in_preferred = false;
    // Walk "Preferred:"/"Dispreferred:" section labels in order, assigning
    // the markers that follow each label to that section.
    while (pos < call.user.size()) {
      auto p_pref = call.user.find("Preferred:", pos);
      auto p_dis = call.user.find("Dispreferred:", pos);
      auto p_marker = call.user.find("[[principle:", pos);
      std::size_t next = std::min({p_pref, p_dis, p_marker});
      if (next == std::string::npos) break;
      if (next == p_marker) {
        auto ms = extract_markers(call.user.substr(next), "[[principle:");
        if (!ms.empty()) {
          auto& bucket = in_preferred ? liked : disliked;
          if (std::find(bucket.begin(), bucket.end(), ms.front().token) == bucket.end())
            bucket.push_back(ms.front().token);
          pos = next + ms.front().token.size();
          continue;
        }
        pos = next + 1;
        continue;
      }
      if (next == p_dis) {
        in_preferred = false;
        pos = next + 13;  // len("Dispreferred:")
      } else {
        in_preferred = true;
        pos = next + 10;  // len("Preferred:")
      }
    }
    std::string out = "This user prefers responses like";
    out += liked.empty() ? " (none)" : " " + join(liked);
    if (!disliked.empty()) out += " and dislikes " + join(disliked);
    return out + ".";
  }

  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += " ";
      out += v[i];
    }
    return out;
  }

  std::size_t index_of(const std::vector<std::string>& names,
                       const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end())
      throw GatewayError("synthetic backend: unknown name " + name);
    return static_cast<std::size_t>(it - names.begin());
  }

  void add_hash_direction(std::vector<double>& v, std::uint64_t h, double w) const {
    core::Rng rng(core::derive_seed(cfg_.seed, "embed", h));
    std::vector<double> g(v.size());
    double norm = 0.0;
    for (auto& x : g) {
      x = rng.normal(0.0, 1.0);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += w * g[i] / norm;
  }

  SyntheticWorldConfig cfg_;
};

}  // namespace apm::gateway
