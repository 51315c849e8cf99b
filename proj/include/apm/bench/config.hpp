#pragma once

// Experiment configuration: one JSON file drives a whole benchmark run.  The
// schema is strict (unknown keys are rejected so typos cannot silently fall
// back to defaults) and every field has a baked-in default, so the minimal
// valid config is `{}`.  The run identity is the SHA-256 of the normalized
// config with the `paths` block removed: relocating run/cache directories
// never changes what the experiment means.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apm/core/catalog.hpp"
#include "apm/core/mapping.hpp"
#include "apm/core/metrics.hpp"
#include "apm/gateway/gateway.hpp"
#include "apm/gateway/sha256.hpp"
#include "apm/gateway/types.hpp"

namespace apm::bench {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m = {"non-personalized", "routing",
                                             "routing-oracle", "rag-exemplar",
                                             "rag-summary"};
  return m;
}

inline const std::vector<std::string>& known_strategies() {
  static const std::vector<std::string> s = {"margin", "two-sided", "one-sided",
                                             "regression"};
  return s;
}

struct ExperimentConfig {
  std::uint64_t seed = 1;

  // population
  std::size_t n_attributes = 10;  // N
  std::size_t n_principles = 10;  // M
  std::size_t k_active = 1;
  std::size_t n_train = 4000;
  std::size_t n_test = 1000;
  std::size_t turns = 2;

  // mappings
  core::MappingKind mapping_kind = core::MappingKind::SignedPermutation;
  std::size_t n_mappings = 10;

  // evaluation
  double tie_epsilon = core::kDefaultTieEpsilon;
  std::vector<std::string> methods = known_methods();
  std::string labeling_strategy = "margin";
  std::size_t retrieval_k = 3;
  std::string retrieval_key = "history";  // or "style-summary"

  // paths (excluded from the config hash)
  std::string corpus_path = "assets/prompts.txt";
  std::string attributes_path;  // empty: built-in catalog
  std::string principles_path;  // empty: built-in catalog
  std::string templates_dir;    // empty: built-in templates
  std::string run_root = "runs";
  std::string cache_dir = "cache";

  // gateway
  std::string backend = "synthetic";  // "synthetic" or "http"
  std::uint64_t world_seed = 1;
  double judge_noise_sd = 1.0;
  double judge_compliance_gain = 2.0;
  std::vector<double> judge_bias;  // empty: all zeros
  std::map<std::string, gateway::RoleConfig> roles;
};

namespace detail {

inline void require_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline gateway::RoleConfig parse_role(const json& obj, const std::string& where,
                                      const gateway::RoleConfig& base) {
  require_keys(obj, where,
               {"base_url", "path_prefix", "model", "token_env", "concurrency",
                "max_retries", "backoff_initial_ms", "backoff_multiplier",
                "temperature", "top_p", "max_tokens", "extra"});
  gateway::RoleConfig r = base;
  read_field(obj, "base_url", r.base_url, where);
  read_field(obj, "path_prefix", r.path_prefix, where);
  read_field(obj, "model", r.model, where);
  read_field(obj, "token_env", r.token_env, where);
  read_field(obj, "concurrency", r.concurrency, where);
  read_field(obj, "max_retries", r.max_retries, where);
  read_field(obj, "backoff_initial_ms", r.backoff_initial_ms, where);
  read_field(obj, "backoff_multiplier", r.backoff_multiplier, where);
  read_field(obj, "temperature", r.temperature, where);
  read_field(obj, "top_p", r.top_p, where);
  read_field(obj, "max_tokens", r.max_tokens, where);
  read_field(obj, "extra", r.extra, where);
  return r;
}

inline json role_to_json(const gateway::RoleConfig& r) {
  json j;
  j["base_url"] = r.base_url;
  j["path_prefix"] = r.path_prefix;
  j["model"] = r.model;
  j["token_env"] = r.token_env;
  j["concurrency"] = r.concurrency;
  j["max_retries"] = r.max_retries;
  j["backoff_initial_ms"] = r.backoff_initial_ms;
  j["backoff_multiplier"] = r.backoff_multiplier;
  j["temperature"] = r.temperature;
  j["top_p"] = r.top_p;
  j["max_tokens"] = r.max_tokens;
  j["extra"] = r.extra;
  return j;
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& c) {
  if (c.n_attributes == 0 || c.n_principles == 0)
    throw ConfigError("population: n_attributes and n_principles must be positive");
  if (c.mapping_kind == core::MappingKind::SignedPermutation &&
      c.n_attributes != c.n_principles)
    throw ConfigError("mappings: signed_permutation requires n_attributes == n_principles");
  if (c.n_mappings < 1) throw ConfigError("mappings: count must be >= 1");
  if (c.k_active < 1 || c.k_active > c.n_attributes)
    throw ConfigError("population: need 1 <= k_active <= n_attributes");
  if (c.turns < 1) throw ConfigError("population: turns must be >= 1");
  if (c.n_test < 1) throw ConfigError("population: n_test must be >= 1");
  if (c.tie_epsilon < 0.0) throw ConfigError("evaluation: tie_epsilon must be >= 0");
  if (c.methods.empty()) throw ConfigError("evaluation: methods must be nonempty");
  for (const auto& m : c.methods) {
    const auto& known = known_methods();
    if (std::find(known.begin(), known.end(), m) == known.end())
      throw ConfigError("evaluation: unknown method \"" + m + "\"");
  }
  {
    const auto& known = known_strategies();
    if (std::find(known.begin(), known.end(), c.labeling_strategy) == known.end())
      throw ConfigError("evaluation: unknown labeling_strategy \"" +
                        c.labeling_strategy + "\"");
  }
  if (c.retrieval_k < 1) throw ConfigError("evaluation: retrieval_k must be >= 1");
  if (c.retrieval_key != "history" && c.retrieval_key != "style-summary")
    throw ConfigError("evaluation: retrieval_key must be history or style-summary");
  if (c.backend != "synthetic" && c.backend != "http")
    throw ConfigError("gateway: backend must be synthetic or http");
  if (!c.judge_bias.empty() && c.judge_bias.size() != c.n_principles)
    throw ConfigError("gateway.synthetic: judge_bias length must equal n_principles");
  bool needs_train = false;
  for (const auto& m : c.methods)
    if (m == "routing" || m == "rag-exemplar" || m == "rag-summary")
      needs_train = true;
  if (needs_train && c.n_train < 1)
    throw ConfigError("population: learned methods require n_train >= 1");
}

inline ExperimentConfig config_from_json(const json& root) {
  detail::require_keys(root, "config",
                       {"seed", "population", "mappings", "evaluation", "paths",
                        "gateway"});
  ExperimentConfig c;
  detail::read_field(root, "seed", c.seed, "config");

  if (root.contains("population")) {
    const json& p = root.at("population");
    detail::require_keys(p, "population",
                         {"n_attributes", "n_principles", "k_active", "n_train",
                          "n_test", "turns"});
    detail::read_field(p, "n_attributes", c.n_attributes, "population");
    detail::read_field(p, "n_principles", c.n_principles, "population");
    detail::read_field(p, "k_active", c.k_active, "population");
    detail::read_field(p, "n_train", c.n_train, "population");
    detail::read_field(p, "n_test", c.n_test, "population");
    detail::read_field(p, "turns", c.turns, "population");
  }

  if (root.contains("mappings")) {
    const json& m = root.at("mappings");
    detail::require_keys(m, "mappings", {"kind", "count"});
    if (m.contains("kind")) {
      std::string kind = m.at("kind").get<std::string>();
      try {
        c.mapping_kind = core::mapping_kind_from_string(kind);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("mappings.kind: ") + e.what());
      }
    }
    detail::read_field(m, "count", c.n_mappings, "mappings");
  }

  if (root.contains("evaluation")) {
    const json& e = root.at("evaluation");
    detail::require_keys(e, "evaluation",
                         {"tie_epsilon", "methods", "labeling_strategy",
                          "retrieval_k", "retrieval_key"});
    detail::read_field(e, "tie_epsilon", c.tie_epsilon, "evaluation");
    detail::read_field(e, "methods", c.methods, "evaluation");
    detail::read_field(e, "labeling_strategy", c.labeling_strategy, "evaluation");
    detail::read_field(e, "retrieval_k", c.retrieval_k, "evaluation");
    detail::read_field(e, "retrieval_key", c.retrieval_key, "evaluation");
  }

  if (root.contains("paths")) {
    const json& p = root.at("paths");
    detail::require_keys(p, "paths",
                         {"corpus", "attributes", "principles", "templates_dir",
                          "run_root", "cache_dir"});
    detail::read_field(p, "corpus", c.corpus_path, "paths");
    detail::read_field(p, "attributes", c.attributes_path, "paths");
    detail::read_field(p, "principles", c.principles_path, "paths");
    detail::read_field(p, "templates_dir", c.templates_dir, "paths");
    detail::read_field(p, "run_root", c.run_root, "paths");
    detail::read_field(p, "cache_dir", c.cache_dir, "paths");
  }

  if (root.contains("gateway")) {
    const json& g = root.at("gateway");
    detail::require_keys(g, "gateway", {"backend", "synthetic", "roles"});
    detail::read_field(g, "backend", c.backend, "gateway");
    if (g.contains("synthetic")) {
      const json& s = g.at("synthetic");
      detail::require_keys(s, "gateway.synthetic",
                           {"seed", "judge_noise_sd", "judge_compliance_gain",
                            "judge_bias"});
      detail::read_field(s, "seed", c.world_seed, "gateway.synthetic");
      detail::read_field(s, "judge_noise_sd", c.judge_noise_sd, "gateway.synthetic");
      detail::read_field(s, "judge_compliance_gain", c.judge_compliance_gain,
                         "gateway.synthetic");
      detail::read_field(s, "judge_bias", c.judge_bias, "gateway.synthetic");
    }
    if (g.contains("roles")) {
      const json& roles = g.at("roles");
      if (!roles.is_object()) throw ConfigError("gateway.roles: expected an object");
      gateway::RoleConfig base;
      base.backend = c.backend;
      if (roles.contains("default"))
        base = detail::parse_role(roles.at("default"), "gateway.roles.default", base);
      for (auto it = roles.begin(); it != roles.end(); ++it) {
        const auto& known = gateway::gateway_roles();
        bool ok = it.key() == "default" ||
                  std::find(known.begin(), known.end(), it.key()) != known.end();
        if (!ok)
          throw ConfigError("gateway.roles: unknown role \"" + it.key() + "\"");
        if (it.key() != "default")
          c.roles[it.key()] = detail::parse_role(
              it.value(), "gateway.roles." + it.key(), base);
      }
      // Roles not listed explicitly inherit the default entry.
      for (const auto& role : gateway::gateway_roles())
        if (!c.roles.count(role)) c.roles[role] = base;
    }
  }

  validate_config(c);
  return c;
}

inline json config_to_json(const ExperimentConfig& c) {
  json root;
  root["seed"] = c.seed;
  root["population"] = {{"n_attributes", c.n_attributes},
                        {"n_principles", c.n_principles},
                        {"k_active", c.k_active},
                        {"n_train", c.n_train},
                        {"n_test", c.n_test},
                        {"turns", c.turns}};
  root["mappings"] = {{"kind", core::to_string(c.mapping_kind)},
                      {"count", c.n_mappings}};
  root["evaluation"] = {{"tie_epsilon", c.tie_epsilon},
                        {"methods", c.methods},
                        {"labeling_strategy", c.labeling_strategy},
                        {"retrieval_k", c.retrieval_k},
                        {"retrieval_key", c.retrieval_key}};
  root["paths"] = {{"corpus", c.corpus_path},
                   {"attributes", c.attributes_path},
                   {"principles", c.principles_path},
                   {"templates_dir", c.templates_dir},
                   {"run_root", c.run_root},
                   {"cache_dir", c.cache_dir}};
  // Emit every role so configs that spell out defaults hash the same as
  // configs that omit them.
  json roles = json::object();
  for (const auto& role : gateway::gateway_roles())
    roles[role] = detail::role_to_json(
        c.roles.count(role) ? c.roles.at(role) : gateway::RoleConfig{});
  root["gateway"] = {{"backend", c.backend},
                     {"synthetic",
                      {{"seed", c.world_seed},
                       {"judge_noise_sd", c.judge_noise_sd},
                       {"judge_compliance_gain", c.judge_compliance_gain},
                       {"judge_bias", c.judge_bias}}},
                     {"roles", roles}};
  return root;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return config_from_json(root);
}

// Run identity: normalized config minus filesystem locations.
inline std::string config_hash(const ExperimentConfig& c) {
  json j = config_to_json(c);
  j.erase("paths");
  return gateway::sha256_hex(j.dump());
}

}  // namespace apm::bench
