#pragma once

// Backend interface plus the OpenAI-compatible HTTP implementation.  A
// backend performs exactly one request; retry/backoff, caching, and
// concurrency limits are the gateway's job.  Backends signal retryable
// failures (connect errors, timeouts, HTTP 408/429/5xx) with TransientError
// and everything else with GatewayError.

#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "apm/gateway/types.hpp"

namespace apm::gateway {

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const ChatCall& call) = 0;
  virtual std::vector<double> embed(const EmbeddingCall& call) = 0;
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(RoleConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty())
      throw GatewayError("http backend for role requires base_url");
    if (!cfg_.token_env.empty()) {
      if (const char* v = std::getenv(cfg_.token_env.c_str())) token_ = v;
    }
  }

  std::string complete(const ChatCall& call) override {
    nlohmann::json body{
        {"model", call.model},
        {"messages",
         nlohmann::json::array({{{"role", "system"}, {"content", call.system}},
                                {{"role", "user"}, {"content", call.user}}})},
        {"temperature", call.temperature},
        {"top_p", call.top_p},
        {"max_tokens", call.max_tokens}};
    merge_extra(body, call.extra);
    auto j = post_json(cfg_.path_prefix + "/chat/completions", body);
    try {
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw GatewayError(std::string("chat response missing fields: ") + e.what());
    }
  }

  std::vector<double> embed(const EmbeddingCall& call) override {
    nlohmann::json body{{"model", call.model}, {"input", call.input}};
    auto j = post_json(cfg_.path_prefix + "/embeddings", body);
    try {
      return j.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw GatewayError(std::string("embedding response missing fields: ") + e.what());
    }
  }

 private:
  static void merge_extra(nlohmann::json& body, const std::string& extra) {
    if (extra.empty() || extra == "{}") return;
    auto j = nlohmann::json::parse(extra, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw GatewayError("extra parameters must be a JSON object: " + extra);
    for (auto& [k, v] : j.items()) body[k] = v;
  }

  nlohmann::json post_json(const std::string& path, const nlohmann::json& body) {
    // One client per request: trivially thread-safe under the gateway's
    // per-role concurrency cap.
    httplib::Client cli(cfg_.base_url);
    cli.set_connection_timeout(10, 0);
    cli.set_read_timeout(300, 0);
    cli.set_write_timeout(30, 0);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res)
      throw TransientError("http " + cfg_.base_url + path + ": " +
                           httplib::to_string(res.error()));
    if (res->status == 408 || res->status == 429 || res->status >= 500)
      throw TransientError("http " + std::to_string(res->status) + " from " + path);
    if (res->status != 200)
      throw GatewayError("http " + std::to_string(res->status) + " from " + path +
                         ": " + res->body.substr(0, 200));
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded())
      throw GatewayError("non-JSON response from " + path);
    return j;
  }

  RoleConfig cfg_;
  std::string token_;
};

}  // namespace apm::gateway
