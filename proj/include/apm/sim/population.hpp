#pragma once

// Synthetic user population: per user an attribute vector, plus a short
// conversation history of neutral corpus prompts rewritten in that user's
// style through the gateway.  Records round-trip through JSONL so a
// population can be built once and reused across mappings and runs.

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apm/core/attribute.hpp"
#include "apm/core/catalog.hpp"
#include "apm/core/random.hpp"
#include "apm/core/serialize.hpp"
#include "apm/gateway/gateway.hpp"
#include "apm/gateway/templates.hpp"

namespace apm::sim {

struct PromptPair {
  std::string neutral;
  std::string styled;

  bool operator==(const PromptPair& o) const {
    return neutral == o.neutral && styled == o.styled;
  }
};

struct UserRecord {
  std::string id;
  core::AttributeVector attributes;
  std::vector<PromptPair> history;  // length == configured turns
  std::string split;                // "train" | "test"

  bool operator==(const UserRecord& o) const {
    return id == o.id && attributes.values == o.attributes.values &&
           history == o.history && split == o.split;
  }
};

struct PopulationConfig {
  std::size_t n_train = 4000;
  std::size_t n_test = 1000;
  std::size_t n_attributes = 10;
  std::size_t k_active = 1;
  std::size_t turns = 2;
  std::uint64_t seed = 1;
  std::vector<std::string> attribute_names = core::default_attribute_names();
};

// Styles one neutral prompt for the given attribute vector.  All-zero
// vectors pass through unchanged without a gateway call; otherwise the
// rewriter is asked to apply each active trait (or its opposite pole).
inline std::string rewrite_prompt(gateway::Gateway& gw,
                                  const gateway::PromptTemplates& templates,
                                  const std::vector<std::string>& attribute_names,
                                  const std::string& neutral,
                                  const core::AttributeVector& a) {
  if (a.size() != attribute_names.size())
    throw std::invalid_argument("rewrite_prompt: attribute/name count mismatch");
  std::string traits;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.values[i] == 0) continue;
    if (!traits.empty()) traits += "; ";
    traits += gateway::trait_phrase(attribute_names[i], a.values[i]);
  }
  if (traits.empty()) return neutral;  // no active attributes: pass-through

  gateway::ChatCall call;
  call.endpoint = "rewriter";
  call.system = gateway::render(templates.rewrite_system, {{"traits", traits}});
  call.user = neutral;
  std::string styled = gw.complete(call);
  if (styled.empty())
    throw std::runtime_error("rewrite_prompt: rewriter returned empty text");
  return styled;
}

inline std::vector<UserRecord> build_population(
    gateway::Gateway& gw, const gateway::PromptTemplates& templates,
    const PopulationConfig& cfg, const std::vector<std::string>& corpus) {
  if (cfg.attribute_names.size() != cfg.n_attributes)
    throw std::invalid_argument("build_population: attribute catalog size mismatch");
  if (corpus.size() < cfg.turns)
    throw std::invalid_argument("build_population: corpus smaller than turns");
  if (cfg.turns == 0) throw std::invalid_argument("build_population: turns must be > 0");

  const std::size_t total = cfg.n_train + cfg.n_test;
  std::vector<UserRecord> users;
  users.reserve(total);
  for (std::size_t u = 0; u < total; ++u) {
    const std::uint64_t user_seed = core::derive_seed(cfg.seed, "user", u);
    core::Rng rng(user_seed);

    UserRecord rec;
    rec.id = "u" + std::to_string(u);
    rec.split = u < cfg.n_train ? "train" : "test";
    rec.attributes = core::sample_attribute_vector(cfg.n_attributes, cfg.k_active, rng);
    rec.attributes.seed = user_seed;

    // Distinct prompt indices per user (partial Fisher-Yates); prompts may
    // repeat across users.
    std::vector<std::size_t> idx(corpus.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t t = 0; t < cfg.turns; ++t) {
      auto j = static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(t),
                          static_cast<std::int64_t>(idx.size()) - 1));
      std::swap(idx[t], idx[j]);
      const std::string& neutral = corpus[idx[t]];
      rec.history.push_back(PromptPair{
          neutral,
          rewrite_prompt(gw, templates, cfg.attribute_names, neutral, rec.attributes)});
    }
    users.push_back(std::move(rec));
  }
  return users;
}

inline nlohmann::json user_to_record(const UserRecord& u) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : u.history)
    hist.push_back({{"neutral", h.neutral}, {"styled", h.styled}});
  return {{"id", u.id},
          {"split", u.split},
          {"attributes", core::to_record(u.attributes)},
          {"history", hist}};
}

inline UserRecord user_from_record(const nlohmann::json& j) {
  UserRecord u;
  u.id = j.at("id").get<std::string>();
  u.split = j.at("split").get<std::string>();
  u.attributes = core::attribute_from_record(j.at("attributes"));
  for (const auto& h : j.at("history")) {
    PromptPair p;
    p.neutral = h.at("neutral").get<std::string>();
    p.styled = h.at("styled").get<std::string>();
    if (p.styled.empty())
      throw std::invalid_argument("user record: empty styled prompt");
    u.history.push_back(std::move(p));
  }
  return u;
}

inline void write_population(std::ostream& out, const std::vector<UserRecord>& users) {
  for (const auto& u : users) out << user_to_record(u).dump() << "\n";
}

inline std::vector<UserRecord> read_population(std::istream& in) {
  std::vector<UserRecord> users;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    users.push_back(user_from_record(nlohmann::json::parse(line)));
  }
  return users;
}

// One prompt per non-empty line; '#' lines are comments.
inline std::vector<std::string> read_prompt_corpus(std::istream& in) {
  std::vector<std::string> corpus;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    corpus.push_back(line);
  }
  return corpus;
}

}  // namespace apm::sim
