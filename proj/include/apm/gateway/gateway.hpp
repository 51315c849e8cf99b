#pragma once

// Front door for all chat/embedding traffic.  Per role (generator, rewriter,
// judge, summarizer, embedder) the gateway owns a backend, a concurrency cap,
// and instrumentation counters; every request flows
//
//   cache lookup -> per-key single-flight lock -> re-check -> semaphore ->
//   backend call with retry/backoff on transient errors -> cache write.
//
// Sampling parameters are role properties: the gateway stamps model,
// temperature, top_p, max_tokens, and extra from the role config onto each
// call before the cache key is computed, so callers only supply endpoint,
// prompts, and variant.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "apm/gateway/backend.hpp"
#include "apm/gateway/cache.hpp"
#include "apm/gateway/synthetic.hpp"
#include "apm/gateway/types.hpp"

namespace apm::gateway {

struct CounterSnapshot {
  long requests = 0;
  long cache_hits = 0;
  long network_calls = 0;
  long retries = 0;
  int max_in_flight = 0;

  CounterSnapshot& operator+=(const CounterSnapshot& o) {
    requests += o.requests;
    cache_hits += o.cache_hits;
    network_calls += o.network_calls;
    retries += o.retries;
    max_in_flight = std::max(max_in_flight, o.max_in_flight);
    return *this;
  }
};

namespace detail {

class Semaphore {
 public:
  explicit Semaphore(int n) : avail_(n) {}

  void acquire() {
    std::unique_lock<std::mutex> l(m_);
    cv_.wait(l, [&] { return avail_ > 0; });
    --avail_;
  }

  void release() {
    {
      std::lock_guard<std::mutex> l(m_);
      ++avail_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex m_;
  std::condition_variable cv_;
  int avail_;
};

struct RoleCounters {
  std::atomic<long> requests{0};
  std::atomic<long> cache_hits{0};
  std::atomic<long> network_calls{0};
  std::atomic<long> retries{0};
  std::atomic<int> in_flight{0};
  std::atomic<int> max_in_flight{0};

  void enter() {
    int v = ++in_flight;
    int m = max_in_flight.load();
    while (v > m && !max_in_flight.compare_exchange_weak(m, v)) {
    }
  }
  void leave() { --in_flight; }

  CounterSnapshot snapshot() const {
    CounterSnapshot s;
    s.requests = requests.load();
    s.cache_hits = cache_hits.load();
    s.network_calls = network_calls.load();
    s.retries = retries.load();
    s.max_in_flight = max_in_flight.load();
    return s;
  }
};

}  // namespace detail

class Gateway {
 public:
  explicit Gateway(std::shared_ptr<DiskCache> cache = nullptr)
      : cache_(std::move(cache)) {}

  // Roles must be registered before traffic starts; registration is not
  // synchronized against in-flight calls.
  void add_role(const std::string& role, RoleConfig cfg,
                std::shared_ptr<Backend> backend) {
    if (!backend) throw GatewayError("add_role: null backend for " + role);
    if (cfg.concurrency < 1) throw GatewayError("add_role: concurrency must be >= 1");
    auto rt = std::make_unique<RoleRuntime>();
    rt->cfg = std::move(cfg);
    rt->backend = std::move(backend);
    rt->sem = std::make_unique<detail::Semaphore>(rt->cfg.concurrency);
    rt->counters = std::make_unique<detail::RoleCounters>();
    roles_[role] = std::move(rt);
  }

  bool has_role(const std::string& role) const { return roles_.count(role) != 0; }

  std::string complete(ChatCall call) {
    RoleRuntime& rt = role_for(call.endpoint);
    stamp(call, rt.cfg);
    const std::string key = call.cache_key();
    rt.counters->requests++;

    if (auto hit = cache_get(key, "response")) {
      rt.counters->cache_hits++;
      return hit->get<std::string>();
    }
    KeyLocks::Guard guard(locks_, key);
    if (auto hit = cache_get(key, "response")) {
      rt.counters->cache_hits++;
      return hit->get<std::string>();
    }
    std::string text = with_retries(rt, [&] { return rt.backend->complete(call); });
    cache_put(key, {{"kind", "chat"}, {"response", text}});
    return text;
  }

  std::vector<double> embed(EmbeddingCall call) {
    RoleRuntime& rt = role_for(call.endpoint);
    if (call.model.empty()) call.model = rt.cfg.model;
    const std::string key = call.cache_key();
    rt.counters->requests++;

    if (auto hit = cache_get(key, "embedding")) {
      rt.counters->cache_hits++;
      return hit->get<std::vector<double>>();
    }
    KeyLocks::Guard guard(locks_, key);
    if (auto hit = cache_get(key, "embedding")) {
      rt.counters->cache_hits++;
      return hit->get<std::vector<double>>();
    }
    std::vector<double> v = with_retries(rt, [&] { return rt.backend->embed(call); });
    cache_put(key, {{"kind", "embedding"}, {"embedding", v}});
    return v;
  }

  std::vector<double> embed_text(const std::string& text) {
    EmbeddingCall call;
    call.input = text;
    return embed(std::move(call));
  }

  CounterSnapshot counters(const std::string& role) const {
    return role_for(role).counters->snapshot();
  }

  CounterSnapshot totals() const {
    CounterSnapshot s;
    for (const auto& [_, rt] : roles_) s += rt->counters->snapshot();
    return s;
  }

  const DiskCache* cache() const { return cache_.get(); }

 private:
  struct RoleRuntime {
    RoleConfig cfg;
    std::shared_ptr<Backend> backend;
    std::unique_ptr<detail::Semaphore> sem;
    std::unique_ptr<detail::RoleCounters> counters;
  };

  static void stamp(ChatCall& call, const RoleConfig& cfg) {
    if (call.model.empty()) call.model = cfg.model;
    call.temperature = cfg.temperature;
    call.top_p = cfg.top_p;
    call.max_tokens = cfg.max_tokens;
    call.extra = cfg.extra;
  }

  RoleRuntime& role_for(const std::string& role) const {
    auto it = roles_.find(role);
    if (it == roles_.end()) throw GatewayError("no such gateway role: " + role);
    return *it->second;
  }

  std::optional<nlohmann::json> cache_get(const std::string& key,
                                          const char* field) const {
    if (!cache_) return std::nullopt;
    auto j = cache_->get(key);
    if (!j || !j->contains(field)) return std::nullopt;  // corrupt entry == miss
    return (*j)[field];
  }

  void cache_put(const std::string& key, nlohmann::json value) {
    if (cache_) cache_->put(key, value);
  }

  template <typename Fn>
  auto with_retries(RoleRuntime& rt, Fn&& fn) -> decltype(fn()) {
    rt.sem->acquire();
    struct SemRelease {
      detail::Semaphore* s;
      ~SemRelease() { s->release(); }
    } sem_release{rt.sem.get()};

    double backoff_ms = static_cast<double>(rt.cfg.backoff_initial_ms);
    for (int attempt = 0;; ++attempt) {
      try {
        rt.counters->network_calls++;
        rt.counters->enter();
        struct Leave {
          detail::RoleCounters* c;
          ~Leave() { c->leave(); }
        } leave{rt.counters.get()};
        return fn();
      } catch (const TransientError&) {
        if (attempt >= rt.cfg.max_retries) throw;
        rt.counters->retries++;
        std::this_thread::sleep_for(
            std::chrono::milliseconds(static_cast<long>(backoff_ms)));
        backoff_ms *= rt.cfg.backoff_multiplier;
      }
    }
  }

  std::shared_ptr<DiskCache> cache_;
  KeyLocks locks_;
  std::unordered_map<std::string, std::unique_ptr<RoleRuntime>> roles_;
};

inline const std::vector<std::string>& gateway_roles() {
  static const std::vector<std::string> roles = {"generator", "rewriter", "judge",
                                                 "summarizer", "embedder"};
  return roles;
}

// Offline gateway: every role backed by one shared deterministic world.
inline std::shared_ptr<Gateway> make_synthetic_gateway(
    const SyntheticWorldConfig& world, std::shared_ptr<DiskCache> cache = nullptr,
    int concurrency = 4) {
  auto backend = std::make_shared<SyntheticBackend>(world);
  auto gw = std::make_shared<Gateway>(std::move(cache));
  for (const auto& role : gateway_roles()) {
    RoleConfig cfg;
    cfg.backend = "synthetic";
    cfg.concurrency = concurrency;
    gw->add_role(role, cfg, backend);
  }
  return gw;
}

}  // namespace apm::gateway
