#pragma once

// Result aggregation and report rendering.  Per-mapping method results
// aggregate to mean +/- sample standard deviation across mappings (sd = 0
// for a single mapping); the W/L column degrades to "undef(<w>w/<l>l)" when
// any mapping had zero losses, since a mean over ratios is meaningless once
// one of them is undefined.  Column order is fixed; all numbers render with
// fixed precision so identical results produce identical bytes.

#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apm/core/metrics.hpp"
#include "apm/core/statutil.hpp"

namespace apm::bench {

struct MethodResult {
  std::size_t mapping_index = 0;
  std::string method;
  std::vector<std::string> user_ids;
  std::vector<double> baseline;
  std::vector<double> personalized;
  core::MetricsSummary metrics;
};

struct MethodAggregate {
  std::string method;
  std::size_t mappings = 0;
  bool wl_defined = true;  // every mapping had at least one loss
  double wl_mean = 0.0, wl_sd = 0.0;
  double delta_mean = 0.0, delta_sd = 0.0;
  double half_tie_mean = 0.0, half_tie_sd = 0.0;
  std::size_t wins = 0, losses = 0, ties = 0;
};

// One aggregate per method, in the given order; methods without results are
// skipped.  A single mapping reports sd = 0.
inline std::vector<MethodAggregate> aggregate_results(
    const std::vector<MethodResult>& results,
    const std::vector<std::string>& method_order) {
  std::vector<MethodAggregate> out;
  for (const auto& method : method_order) {
    MethodAggregate agg;
    agg.method = method;
    core::StreamingMoments wl, delta, half;
    for (const auto& r : results) {
      if (r.method != method) continue;
      ++agg.mappings;
      agg.wins += r.metrics.wins;
      agg.losses += r.metrics.losses;
      agg.ties += r.metrics.ties;
      delta.add(r.metrics.mean_delta);
      half.add(r.metrics.half_tie_winrate);
      if (r.metrics.wl_ratio)
        wl.add(*r.metrics.wl_ratio);
      else
        agg.wl_defined = false;
    }
    if (agg.mappings == 0) continue;
    if (agg.wl_defined) {
      agg.wl_mean = wl.mean();
      agg.wl_sd = wl.count() > 1 ? wl.sample_sd() : 0.0;
    }
    agg.delta_mean = delta.mean();
    agg.delta_sd = delta.count() > 1 ? delta.sample_sd() : 0.0;
    agg.half_tie_mean = half.mean();
    agg.half_tie_sd = half.count() > 1 ? half.sample_sd() : 0.0;
    out.push_back(std::move(agg));
  }
  return out;
}

namespace detail {

inline std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

inline std::string undef_cell(const MethodAggregate& a) {
  return "undef(" + std::to_string(a.wins) + "w/" + std::to_string(a.losses) + "l)";
}

}  // namespace detail

struct ReportFiles {
  std::string tsv;
  std::string text;
};

inline ReportFiles emit_report(const std::vector<MethodAggregate>& aggregates,
                               std::size_t n_mappings, std::size_t n_test_users) {
  if (aggregates.empty()) throw std::invalid_argument("emit_report: no results");

  std::string tsv = "method\twl_mean\twl_sd\tdelta_mean\tdelta_sd\twins\tlosses\tties\n";
  for (const auto& a : aggregates) {
    tsv += a.method + "\t";
    if (a.wl_defined)
      tsv += detail::fixed4(a.wl_mean) + "\t" + detail::fixed4(a.wl_sd) + "\t";
    else
      tsv += detail::undef_cell(a) + "\t-\t";
    tsv += detail::fixed4(a.delta_mean) + "\t" + detail::fixed4(a.delta_sd) + "\t";
    tsv += std::to_string(a.wins) + "\t" + std::to_string(a.losses) + "\t" +
           std::to_string(a.ties) + "\n";
  }

  std::string text = "Benchmark results over " + std::to_string(n_mappings) +
                     " mapping(s), " + std::to_string(n_test_users) +
                     " test user(s) each\n\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s %-22s %-22s %8s %8s %8s\n", "method",
                "W/L (mean+/-sd)", "delta (mean+/-sd)", "wins", "losses", "ties");
  text += line;
  text += std::string(90, '-') + "\n";
  for (const auto& a : aggregates) {
    std::string wl = a.wl_defined
                         ? detail::fixed4(a.wl_mean) + "+/-" + detail::fixed4(a.wl_sd)
                         : detail::undef_cell(a);
    std::string delta =
        detail::fixed4(a.delta_mean) + "+/-" + detail::fixed4(a.delta_sd);
    std::snprintf(line, sizeof(line), "%-18s %-22s %-22s %8zu %8zu %8zu\n",
                  a.method.c_str(), wl.c_str(), delta.c_str(), a.wins, a.losses,
                  a.ties);
    text += line;
  }
  return ReportFiles{tsv, text};
}

inline nlohmann::json method_result_to_json(const MethodResult& r) {
  nlohmann::json users = nlohmann::json::array();
  for (std::size_t i = 0; i < r.user_ids.size(); ++i)
    users.push_back({{"id", r.user_ids[i]},
                     {"baseline", r.baseline[i]},
                     {"personalized", r.personalized[i]}});
  nlohmann::json m;
  m["users"] = r.metrics.users;
  m["wins"] = r.metrics.wins;
  m["losses"] = r.metrics.losses;
  m["ties"] = r.metrics.ties;
  m["mean_delta"] = r.metrics.mean_delta;
  if (r.metrics.wl_ratio) m["wl_ratio"] = *r.metrics.wl_ratio;
  m["half_tie_winrate"] = r.metrics.half_tie_winrate;
  m["tie_epsilon"] = r.metrics.tie_epsilon;
  return nlohmann::json{{"mapping", r.mapping_index},
                        {"method", r.method},
                        {"metrics", m},
                        {"records", users}};
}

inline MethodResult method_result_from_json(const nlohmann::json& j) {
  MethodResult r;
  r.mapping_index = j.at("mapping").get<std::size_t>();
  r.method = j.at("method").get<std::string>();
  for (const auto& u : j.at("records")) {
    r.user_ids.push_back(u.at("id").get<std::string>());
    r.baseline.push_back(u.at("baseline").get<double>());
    r.personalized.push_back(u.at("personalized").get<double>());
  }
  const auto& m = j.at("metrics");
  r.metrics.users = m.at("users").get<std::size_t>();
  r.metrics.wins = m.at("wins").get<std::size_t>();
  r.metrics.losses = m.at("losses").get<std::size_t>();
  r.metrics.ties = m.at("ties").get<std::size_t>();
  r.metrics.mean_delta = m.at("mean_delta").get<double>();
  if (m.contains("wl_ratio")) r.metrics.wl_ratio = m.at("wl_ratio").get<double>();
  r.metrics.half_tie_winrate = m.at("half_tie_winrate").get<double>();
  r.metrics.tie_epsilon = m.at("tie_epsilon").get<double>();
  return r;
}

}  // namespace apm::bench
