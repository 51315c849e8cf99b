#pragma once

// Request/response types shared by the chat gateway, its backends, and the
// disk cache.  A call's cache key is the SHA-256 of a canonical JSON encoding
// of every field, so any change to the request (including `variant`, which
// exists purely to force an independent draw of an otherwise identical call)
// produces a distinct cache entry.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apm/gateway/sha256.hpp"

namespace apm::gateway {

struct GatewayError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Retryable failure: timeouts, connection errors, HTTP 408/429/5xx.
struct TransientError : GatewayError {
  using GatewayError::GatewayError;
};

struct ChatCall {
  std::string endpoint;  // role id: generator, rewriter, judge, summarizer
  std::string model;
  std::string system;
  std::string user;
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 512;
  // Opaque provider-specific parameters, forwarded verbatim (JSON object).
  std::string extra = "{}";
  // Cache-busting tag: identical prompts with different variants are
  // independent draws (used for baseline re-rolls and judge re-asks).
  std::string variant;

  std::string cache_key() const {
    nlohmann::json j{{"kind", "chat"},
                     {"endpoint", endpoint},
                     {"model", model},
                     {"system", system},
                     {"user", user},
                     {"temperature", temperature},
                     {"top_p", top_p},
                     {"max_tokens", max_tokens},
                     {"extra", extra},
                     {"variant", variant}};
    return sha256_hex(j.dump());
  }
};

struct EmbeddingCall {
  std::string endpoint = "embedder";
  std::string model;
  std::string input;

  std::string cache_key() const {
    nlohmann::json j{{"kind", "embedding"},
                     {"endpoint", endpoint},
                     {"model", model},
                     {"input", input}};
    return sha256_hex(j.dump());
  }
};

// Outcome of scoring one (response, principle, direction) triple.
struct JudgeVerdict {
  int score = 0;      // integer in [1, 10]
  int attempts = 1;   // completions consumed, including re-asks
  std::string raw;    // raw text of the reply that parsed
};

struct RoleConfig {
  std::string backend = "synthetic";  // "synthetic" or "http"
  std::string base_url;               // http backend only, e.g. http://host:8000
  std::string path_prefix = "/v1";
  std::string model = "default";
  std::string token_env;              // env var holding the bearer token
  int concurrency = 4;                // max in-flight requests for this role
  int max_retries = 3;
  int backoff_initial_ms = 250;
  double backoff_multiplier = 2.0;
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 512;
  std::string extra = "{}";
};

}  // namespace apm::gateway
