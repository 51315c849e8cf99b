#pragma once

// Run manifest and artifact plumbing.  A run directory (named by config hash)
// holds line-delimited artifacts per stage plus manifest.json recording, for
// every stage, its status and the content hash of each artifact it wrote.  A
// stage is skipped on resume only when the manifest says completed AND every
// artifact still hashes to the recorded value, so truncated or hand-edited
// files trigger a clean re-run instead of silent corruption.
//
// Timestamps live only in the manifest; artifacts and reports carry none, so
// repeated runs are byte-identical.

#include <ctime>
#include <iomanip>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apm/gateway/sha256.hpp"

namespace apm::bench {

struct StageError : std::runtime_error {
  std::string stage;
  StageError(std::string stage_name, const std::string& what)
      : std::runtime_error("stage " + stage_name + " failed: " + what),
        stage(std::move(stage_name)) {}
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string utc_now_iso8601() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

struct StageRecord {
  std::string status;  // "completed" or "failed"
  std::map<std::string, std::string> artifacts;  // file name -> sha256
  std::string completed_at;
  std::string error;
};

struct RunManifest {
  std::string config_hash;
  std::vector<std::uint64_t> mapping_seeds;
  std::map<std::string, StageRecord> stages;

  bool stage_completed(const std::string& name) const {
    auto it = stages.find(name);
    return it != stages.end() && it->second.status == "completed";
  }

  // Completed and every artifact still matches its recorded content hash.
  bool stage_verified(const std::string& name,
                      const std::filesystem::path& run_dir) const {
    auto it = stages.find(name);
    if (it == stages.end() || it->second.status != "completed") return false;
    for (const auto& [file, hash] : it->second.artifacts) {
      std::filesystem::path p = run_dir / file;
      if (!std::filesystem::exists(p)) return false;
      if (gateway::sha256_hex(read_file(p)) != hash) return false;
    }
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["mapping_seeds"] = mapping_seeds;
    nlohmann::json st = nlohmann::json::object();
    for (const auto& [name, rec] : stages) {
      nlohmann::json r;
      r["status"] = rec.status;
      r["artifacts"] = rec.artifacts;
      if (!rec.completed_at.empty()) r["completed_at"] = rec.completed_at;
      if (!rec.error.empty()) r["error"] = rec.error;
      st[name] = std::move(r);
    }
    j["stages"] = std::move(st);
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    m.config_hash = j.value("config_hash", "");
    if (j.contains("mapping_seeds"))
      m.mapping_seeds = j.at("mapping_seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("stages")) {
      for (auto it = j.at("stages").begin(); it != j.at("stages").end(); ++it) {
        StageRecord rec;
        rec.status = it.value().value("status", "");
        if (it.value().contains("artifacts"))
          rec.artifacts =
              it.value().at("artifacts").get<std::map<std::string, std::string>>();
        rec.completed_at = it.value().value("completed_at", "");
        rec.error = it.value().value("error", "");
        m.stages[it.key()] = std::move(rec);
      }
    }
    return m;
  }

  void save(const std::filesystem::path& run_dir) const {
    write_file_atomic(run_dir / "manifest.json", to_json().dump(2) + "\n");
  }

  static RunManifest load(const std::filesystem::path& run_dir) {
    auto path = run_dir / "manifest.json";
    if (!std::filesystem::exists(path)) return RunManifest{};
    try {
      return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception&) {
      return RunManifest{};  // a corrupt manifest restarts the run from scratch
    }
  }
};

// Line-delimited JSON helpers shared by all stage artifacts.
inline std::string jsonl_dump(const std::vector<nlohmann::json>& records) {
  std::string out;
  for (const auto& r : records) out += r.dump() + "\n";
  return out;
}

inline std::vector<nlohmann::json> jsonl_parse(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

}  // namespace apm::bench
