#pragma once

// Content-addressed response cache: one JSON file per key under a flat
// directory, written via temp-file + rename so readers never observe a
// partial entry.  KeyLocks provides per-key single-flight locking so that
// concurrent misses on the same key result in exactly one backend call.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "apm/gateway/types.hpp"

namespace apm::gateway {

class DiskCache {
 public:
  explicit DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::optional<nlohmann::json> get(const std::string& key) const {
    std::ifstream in(entry_path(key));
    if (!in) return std::nullopt;
    try {
      nlohmann::json j;
      in >> j;
      return j;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;  // corrupt entry behaves as a miss
    }
  }

  void put(const std::string& key, const nlohmann::json& value) const {
    auto final_path = entry_path(key);
    auto tmp_path = final_path;
    tmp_path += ".tmp." + std::to_string(tmp_counter());
    {
      std::ofstream out(tmp_path, std::ios::trunc);
      if (!out) throw GatewayError("cache: cannot write " + tmp_path.string());
      out << value.dump();
    }
    std::filesystem::rename(tmp_path, final_path);
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir_))
      if (e.is_regular_file() && e.path().extension() == ".json") ++n;
    return n;
  }

  std::size_t clear() const {
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir_))
      if (e.is_regular_file() && e.path().extension() == ".json") {
        std::filesystem::remove(e.path());
        ++n;
      }
    return n;
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path entry_path(const std::string& key) const {
    return dir_ / (key + ".json");
  }

  static std::uint64_t tmp_counter() {
    static std::atomic<std::uint64_t> c{0};
    return c.fetch_add(1) ^ (static_cast<std::uint64_t>(::getpid()) << 32);
  }

  std::filesystem::path dir_;
};

// Per-key mutex table.  Guards are cheap to create; entries are reclaimed
// when the last guard for a key is destroyed.
class KeyLocks {
  struct Entry {
    std::mutex m;
    int refs = 0;
  };

 public:
  class Guard {
   public:
    Guard(KeyLocks& owner, const std::string& key) : owner_(owner), key_(key) {
      {
        std::lock_guard<std::mutex> l(owner_.mu_);
        auto& slot = owner_.map_[key_];
        if (!slot) slot = std::make_shared<Entry>();
        slot->refs++;
        entry_ = slot;
      }
      entry_->m.lock();
    }

    ~Guard() {
      entry_->m.unlock();
      std::lock_guard<std::mutex> l(owner_.mu_);
      if (--entry_->refs == 0) owner_.map_.erase(key_);
    }

    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    KeyLocks& owner_;
    std::string key_;
    std::shared_ptr<Entry> entry_;
  };

 private:
  friend class Guard;
  std::mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> map_;
};

}  // namespace apm::gateway
