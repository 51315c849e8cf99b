#pragma once

// Benchmark orchestrator.  A run executes a fixed stage sequence
//
//   population -> eval-prompts -> [train-pools] -> mapping-0..n-1 -> report
//
// under a manifest in a run directory named by the config hash.  Completed
// stages whose artifacts still hash correctly are loaded instead of re-run,
// which gives resume-after-kill and makes re-running a completed manifest a
// no-op.  All LLM traffic flows through the gateway, so a warm cache replays
// a whole run without network calls and byte-identical artifacts.
//
// Mapping stages are where the hidden matrix C enters: candidate texts and
// raw judge scores are sampled once (C-independent, in train-pools), while
// labels, preference pairs, routers, and rewards are pure recomputations per
// mapping.  The per-user reward of a response y is p_u . J(y) with
// p_u = C a_u, evaluated against a baseline reference drawn independently
// via the call's variant tag.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "apm/bench/config.hpp"
#include "apm/bench/manifest.hpp"
#include "apm/bench/report.hpp"
#include "apm/core/catalog.hpp"
#include "apm/core/mapping.hpp"
#include "apm/core/metrics.hpp"
#include "apm/core/random.hpp"
#include "apm/gateway/backend.hpp"
#include "apm/gateway/gateway.hpp"
#include "apm/gateway/judge_client.hpp"
#include "apm/gateway/synthetic.hpp"
#include "apm/gateway/templates.hpp"
#include "apm/pers/candidates.hpp"
#include "apm/pers/embedding.hpp"
#include "apm/pers/labels.hpp"
#include "apm/pers/retrieval.hpp"
#include "apm/pers/router.hpp"
#include "apm/sim/population.hpp"

namespace apm::bench {

struct BenchSetup {
  ExperimentConfig config;
  std::vector<std::string> attribute_names;  // size N
  std::vector<std::string> principle_names;  // size M
  std::vector<std::string> corpus;
  gateway::PromptTemplates templates;
  std::shared_ptr<gateway::Gateway> gateway;
};

struct RunOptions {
  std::string stop_after_stage;  // empty: run to completion
  std::ostream* log = nullptr;
};

struct EvalPrompt {
  std::string user_id;
  std::string neutral;
  std::string styled;
};

struct TrainPool {
  std::string user_id;
  std::string prompt;                       // first styled history prompt
  std::vector<pers::Candidate> candidates;  // 2M, standard order
  std::vector<std::vector<double>> scores;  // scores[i][j] = J_j(candidates[i])
};

struct BenchmarkRun {
  std::filesystem::path run_dir;
  RunManifest manifest;
  std::vector<MethodResult> results;
  std::vector<MethodAggregate> aggregates;
  ReportFiles report;
  bool completed = false;
  std::string stopped_after;
};

namespace detail {

inline bool has_method(const ExperimentConfig& cfg, const std::string& m) {
  return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
}

inline std::string draw_eval_prompt(core::Rng& rng,
                                    const std::vector<std::string>& corpus,
                                    const sim::UserRecord& user) {
  auto used = [&](const std::string& p) {
    for (const auto& h : user.history)
      if (h.neutral == p) return true;
    return false;
  };
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const std::string& p = corpus[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(corpus.size()) - 1))];
    if (!used(p)) return p;
  }
  for (const auto& p : corpus)  // deterministic fallback, corpus > history
    if (!used(p)) return p;
  throw std::runtime_error("eval prompt draw: corpus exhausted");
}

inline std::string instructed_response(gateway::Gateway& gw,
                                       const gateway::PromptTemplates& t,
                                       const std::string& prompt,
                                       const std::vector<std::string>& names,
                                       const pers::RoutingLabel& label) {
  gateway::ChatCall call;
  call.endpoint = "generator";
  call.system = t.generate_system + "\n" +
                gateway::style_instruction(t, names[label.principle], label.direction);
  call.user = prompt;
  return gw.complete(call);
}

inline std::string summarize_preference(gateway::Gateway& gw,
                                        const gateway::PromptTemplates& t,
                                        const pers::ExemplarTriple& ex) {
  gateway::ChatCall call;
  call.endpoint = "summarizer";
  call.system = t.summarize_pref_system;
  call.user = "Prompt: " + ex.prompt + "\nPreferred: " + ex.preferred +
              "\nDispreferred: " + ex.dispreferred + "\n";
  return gw.complete(call);
}

inline std::string summarize_style(gateway::Gateway& gw,
                                   const gateway::PromptTemplates& t,
                                   const sim::UserRecord& user) {
  gateway::ChatCall call;
  call.endpoint = "summarizer";
  call.system = t.summarize_style_system;
  std::string text;
  for (const auto& h : user.history) {
    if (!text.empty()) text += "\n";
    text += h.styled;
  }
  call.user = text;
  return gw.complete(call);
}

inline pers::RoutingLabel strategy_label(const std::string& strategy,
                                         const pers::CandidateScoreTable& weighted) {
  if (strategy == "margin" || strategy == "regression")
    return pers::margin_label(weighted);  // regression records the implied label
  if (strategy == "two-sided") return pers::two_sided_argmax_label(weighted);
  if (strategy == "one-sided") return pers::one_sided_argmax_label(weighted.follow);
  throw std::invalid_argument("unknown labeling strategy: " + strategy);
}

inline json pool_to_json(const TrainPool& p) {
  json cands = json::array();
  for (const auto& c : p.candidates)
    cands.push_back(
        {{"principle", c.principle}, {"direction", c.direction}, {"text", c.text}});
  return json{{"user_id", p.user_id},
              {"prompt", p.prompt},
              {"candidates", cands},
              {"scores", p.scores}};
}

inline TrainPool pool_from_json(const json& j) {
  TrainPool p;
  p.user_id = j.at("user_id").get<std::string>();
  p.prompt = j.at("prompt").get<std::string>();
  for (const auto& c : j.at("candidates"))
    p.candidates.push_back(pers::Candidate{c.at("principle").get<std::size_t>(),
                                           c.at("direction").get<int>(),
                                           c.at("text").get<std::string>()});
  p.scores = j.at("scores").get<std::vector<std::vector<double>>>();
  return p;
}

struct MappingArtifacts {
  std::vector<MethodResult> results;
  std::vector<json> label_records;
  std::vector<json> pair_records;
  std::string router_text;  // empty when routing was not requested
};

inline MappingArtifacts eval_mapping(const BenchSetup& setup,
                                     const std::vector<sim::UserRecord>& users,
                                     const std::vector<EvalPrompt>& evals,
                                     const std::vector<TrainPool>& pools,
                                     std::size_t mapping_index,
                                     std::uint64_t mapping_seed) {
  const ExperimentConfig& cfg = setup.config;
  gateway::Gateway& gw = *setup.gateway;
  const gateway::PromptTemplates& t = setup.templates;
  const std::vector<std::string>& names = setup.principle_names;
  const std::size_t m = cfg.n_principles;

  core::MappingMatrix mapping =
      core::sample_mapping(cfg.mapping_kind, m, cfg.n_attributes, mapping_seed);
  auto pref_of = [&](const sim::UserRecord& u) {
    return core::preference_vector(mapping, u.attributes);
  };

  const bool want_routing = has_method(cfg, "routing");
  const bool want_exemplar = has_method(cfg, "rag-exemplar");
  const bool want_summary = has_method(cfg, "rag-summary");
  const bool want_rag = want_exemplar || want_summary;

  MappingArtifacts out;
  pers::RouterModel router;
  pers::RetrievalIndex index;
  const pers::RetrievalKey key = cfg.retrieval_key == "style-summary"
                                     ? pers::RetrievalKey::StyleSummary
                                     : pers::RetrievalKey::History;

  if (want_routing || want_rag) {
    std::vector<std::vector<double>> cls_feats, reg_feats, reg_targets;
    std::vector<std::size_t> cls_ids;

    for (std::size_t i = 0; i < pools.size(); ++i) {
      const TrainPool& pool = pools[i];
      const sim::UserRecord& user = users[i];
      if (pool.user_id != user.id)
        throw std::runtime_error("train pool order does not match population");
      std::vector<double> p = pref_of(user);

      pers::CandidateScoreTable diag;
      diag.follow.resize(m);
      diag.avoid.resize(m);
      for (std::size_t j = 0; j < m; ++j) {
        diag.follow[j] = pool.scores[2 * j][j];
        diag.avoid[j] = pool.scores[2 * j + 1][j];
      }
      pers::CandidateScoreTable weighted = pers::weighted_score_table(p, diag);

      if (want_routing) {
        std::vector<double> feature = pers::history_embedding(gw, user);
        pers::RoutingLabel label = strategy_label(cfg.labeling_strategy, weighted);
        if (cfg.labeling_strategy == "regression") {
          reg_feats.push_back(feature);
          reg_targets.push_back(pers::regression_targets(weighted));
        } else if (!label.degenerate) {
          cls_feats.push_back(feature);
          cls_ids.push_back(pers::encode_class(label.principle, label.direction));
        }
        out.label_records.push_back(json{{"user_id", user.id},
                                         {"principle", label.principle},
                                         {"direction", label.direction},
                                         {"degenerate", label.degenerate}});
      }

      if (want_rag) {
        std::vector<double> rewards(pool.candidates.size());
        for (std::size_t ci = 0; ci < pool.candidates.size(); ++ci) {
          double r = 0.0;
          for (std::size_t j = 0; j < m; ++j) r += p[j] * pool.scores[ci][j];
          rewards[ci] = r;
        }
        pers::PreferencePair pair =
            pers::build_preference_pair(pool.prompt, pool.candidates, rewards);
        out.pair_records.push_back(
            json{{"user_id", user.id},
                 {"prompt", pair.prompt},
                 {"best",
                  {{"principle", pair.best.principle},
                   {"direction", pair.best.direction},
                   {"text", pair.best.text}}},
                 {"worst",
                  {{"principle", pair.worst.principle},
                   {"direction", pair.worst.direction},
                   {"text", pair.worst.text}}},
                 {"degenerate", pair.degenerate}});
        if (!pair.degenerate) {
          pers::IndexedUser iu;
          iu.user_id = user.id;
          iu.history_embedding = pers::history_embedding(gw, user);
          iu.exemplars.push_back(
              pers::ExemplarTriple{pair.prompt, pair.best.text, pair.worst.text});
          if (want_summary)
            iu.pref_summary = summarize_preference(gw, t, iu.exemplars.front());
          if (key == pers::RetrievalKey::StyleSummary)
            iu.style_summary_embedding = gw.embed_text(summarize_style(gw, t, user));
          index.users.push_back(std::move(iu));
        }
      }
    }

    if (want_routing) {
      if (cfg.labeling_strategy == "regression") {
        router = pers::train_router_regress(reg_feats, reg_targets);
      } else {
        if (cls_feats.empty())
          throw std::runtime_error(
              "router training: every training label is degenerate");
        router = pers::train_router_classify(cls_feats, cls_ids, 2 * m);
      }
      std::ostringstream os;
      pers::save_router(os, router);
      out.router_text = os.str();
    }
  }

  std::map<std::string, MethodResult> per_method;
  for (const auto& method : cfg.methods) {
    MethodResult r;
    r.mapping_index = mapping_index;
    r.method = method;
    per_method[method] = std::move(r);
  }

  for (std::size_t e = 0; e < evals.size(); ++e) {
    const sim::UserRecord& user = users[cfg.n_train + e];
    if (evals[e].user_id != user.id)
      throw std::runtime_error("eval prompt order does not match population");
    std::vector<double> p = pref_of(user);
    const std::string& prompt = evals[e].styled;

    auto judge_reward = [&](const std::string& response) {
      double r = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        gateway::JudgeRequest rq;
        rq.principle = names[j];
        rq.direction = +1;
        rq.response = response;
        r += p[j] * gateway::judge_principle(gw, t, rq).score;
      }
      return r;
    };

    std::string baseline_resp = pers::generate_response(gw, t, prompt, "", "baseline");
    double baseline_reward = judge_reward(baseline_resp);

    std::vector<double> feature;  // computed once, on first need
    auto feature_of_user = [&]() -> const std::vector<double>& {
      if (feature.empty()) feature = pers::history_embedding(gw, user);
      return feature;
    };

    for (const auto& method : cfg.methods) {
      std::string response;
      if (method == "non-personalized") {
        response = pers::generate_response(gw, t, prompt);
      } else if (method == "routing") {
        pers::RoutingLabel label = pers::route(router, feature_of_user());
        response = label.degenerate
                       ? pers::generate_response(gw, t, prompt)
                       : instructed_response(gw, t, prompt, names, label);
      } else if (method == "routing-oracle") {
        try {
          pers::RoutingLabel label = pers::oracle_route(p);
          response = instructed_response(gw, t, prompt, names, label);
        } catch (const std::domain_error&) {
          response = pers::generate_response(gw, t, prompt);
        }
      } else {  // rag-exemplar / rag-summary
        response.clear();
        if (!index.users.empty()) {
          auto rr = pers::retrieve_neighbors(index, feature_of_user(),
                                             cfg.retrieval_k, key);
          if (!rr.neighbors.empty()) {
            std::string ctx = pers::build_context(
                t, rr.neighbors,
                method == "rag-exemplar" ? pers::ContextVariant::Exemplar
                                         : pers::ContextVariant::Summary);
            response = pers::generate_response(gw, t, prompt, ctx);
          }
        }
        if (response.empty())  // no usable neighbors: fall back to plain
          response = pers::generate_response(gw, t, prompt);
      }

      MethodResult& r = per_method[method];
      r.user_ids.push_back(user.id);
      r.baseline.push_back(baseline_reward);
      r.personalized.push_back(judge_reward(response));
    }
  }

  for (const auto& method : cfg.methods) {
    MethodResult& r = per_method[method];
    r.metrics = core::compute_metrics(r.personalized, r.baseline, cfg.tie_epsilon);
    out.results.push_back(std::move(r));
  }
  return out;
}

}  // namespace detail

inline void validate_setup(const BenchSetup& setup) {
  const ExperimentConfig& cfg = setup.config;
  validate_config(cfg);
  if (!setup.gateway) throw ConfigError("setup: gateway is null");
  if (setup.attribute_names.size() != cfg.n_attributes)
    throw ConfigError("setup: attribute catalog size must equal n_attributes");
  if (setup.principle_names.size() != cfg.n_principles)
    throw ConfigError("setup: principle catalog size must equal n_principles");
  if (setup.corpus.size() < cfg.turns + 1)
    throw ConfigError("setup: corpus must hold more than `turns` prompts");
}

inline BenchmarkRun run_benchmark(const BenchSetup& setup, const RunOptions& opt = {}) {
  validate_setup(setup);
  const ExperimentConfig& cfg = setup.config;
  const std::string hash = config_hash(cfg);

  BenchmarkRun run;
  run.run_dir = std::filesystem::path(cfg.run_root) / hash.substr(0, 16);
  std::filesystem::create_directories(run.run_dir);
  // The full config (paths included) rides along for audits and for
  // re-emitting reports later; it is not a stage artifact.
  write_file_atomic(run.run_dir / "config.json", config_to_json(cfg).dump(2) + "\n");

  RunManifest manifest = RunManifest::load(run.run_dir);
  if (manifest.config_hash != hash) manifest = RunManifest{};
  manifest.config_hash = hash;
  manifest.mapping_seeds.clear();
  for (std::size_t i = 0; i < cfg.n_mappings; ++i)
    manifest.mapping_seeds.push_back(core::derive_seed(cfg.seed, "mapping", i));

  auto log = [&](const std::string& s) {
    if (opt.log) (*opt.log) << s << "\n";
  };
  auto complete_stage = [&](const std::string& stage,
                            const std::vector<std::string>& files) {
    StageRecord rec;
    rec.status = "completed";
    rec.completed_at = utc_now_iso8601();
    for (const auto& f : files)
      rec.artifacts[f] = gateway::sha256_hex(read_file(run.run_dir / f));
    manifest.stages[stage] = std::move(rec);
    manifest.save(run.run_dir);
  };
  // Returns true when the body ran (stage recomputed), false on verified skip.
  auto run_stage = [&](const std::string& stage,
                       const std::vector<std::string>& files, auto&& body) {
    if (manifest.stage_verified(stage, run.run_dir)) {
      log(stage + ": reused");
      return false;
    }
    try {
      body();
    } catch (const std::exception& e) {
      StageRecord rec;
      rec.status = "failed";
      rec.error = e.what();
      manifest.stages[stage] = std::move(rec);
      manifest.save(run.run_dir);
      throw StageError(stage, e.what());
    }
    complete_stage(stage, files);
    log(stage + ": completed");
    return true;
  };
  auto stop_requested = [&](const std::string& stage) {
    if (opt.stop_after_stage != stage) return false;
    run.manifest = manifest;
    run.stopped_after = stage;
    return true;
  };

  // population
  std::vector<sim::UserRecord> users;
  const std::string pop_file = "population.jsonl";
  if (!run_stage("population", {pop_file}, [&] {
        sim::PopulationConfig pc;
        pc.n_train = cfg.n_train;
        pc.n_test = cfg.n_test;
        pc.n_attributes = cfg.n_attributes;
        pc.k_active = cfg.k_active;
        pc.turns = cfg.turns;
        pc.seed = cfg.seed;
        pc.attribute_names = setup.attribute_names;
        users = sim::build_population(*setup.gateway, setup.templates, pc,
                                      setup.corpus);
        std::ostringstream os;
        sim::write_population(os, users);
        write_file_atomic(run.run_dir / pop_file, os.str());
      })) {
    std::istringstream in(read_file(run.run_dir / pop_file));
    users = sim::read_population(in);
  }
  if (users.size() != cfg.n_train + cfg.n_test)
    throw StageError("population", "user count does not match config");
  if (stop_requested("population")) return run;

  // eval-prompts
  std::vector<EvalPrompt> evals;
  const std::string eval_file = "eval_prompts.jsonl";
  if (!run_stage("eval-prompts", {eval_file}, [&] {
        std::vector<json> records;
        for (std::size_t u = cfg.n_train; u < users.size(); ++u) {
          core::Rng rng(core::derive_seed(cfg.seed, "eval-prompt", u));
          EvalPrompt ep;
          ep.user_id = users[u].id;
          ep.neutral = detail::draw_eval_prompt(rng, setup.corpus, users[u]);
          ep.styled =
              sim::rewrite_prompt(*setup.gateway, setup.templates,
                                  setup.attribute_names, ep.neutral,
                                  users[u].attributes);
          records.push_back(json{{"user_id", ep.user_id},
                                 {"neutral", ep.neutral},
                                 {"styled", ep.styled}});
          evals.push_back(std::move(ep));
        }
        write_file_atomic(run.run_dir / eval_file, jsonl_dump(records));
      })) {
    for (const auto& j : jsonl_parse(read_file(run.run_dir / eval_file)))
      evals.push_back(EvalPrompt{j.at("user_id").get<std::string>(),
                                 j.at("neutral").get<std::string>(),
                                 j.at("styled").get<std::string>()});
  }
  if (stop_requested("eval-prompts")) return run;

  // train-pools (only when a method learns from training users)
  const bool needs_pools = detail::has_method(cfg, "routing") ||
                           detail::has_method(cfg, "rag-exemplar") ||
                           detail::has_method(cfg, "rag-summary");
  std::vector<TrainPool> pools;
  const std::string pools_file = "train_pools.jsonl";
  if (needs_pools) {
    if (!run_stage("train-pools", {pools_file}, [&] {
          std::vector<json> records;
          for (std::size_t u = 0; u < cfg.n_train; ++u) {
            TrainPool pool;
            pool.user_id = users[u].id;
            pool.prompt = users[u].history.front().styled;
            pool.candidates =
                pers::generate_candidates(*setup.gateway, setup.templates,
                                          setup.principle_names, pool.prompt);
            pool.scores.assign(pool.candidates.size(),
                               std::vector<double>(cfg.n_principles, 0.0));
            for (std::size_t ci = 0; ci < pool.candidates.size(); ++ci)
              for (std::size_t j = 0; j < cfg.n_principles; ++j) {
                gateway::JudgeRequest rq;
                rq.principle = setup.principle_names[j];
                rq.direction = +1;
                rq.response = pool.candidates[ci].text;
                pool.scores[ci][j] =
                    gateway::judge_principle(*setup.gateway, setup.templates, rq)
                        .score;
              }
            records.push_back(detail::pool_to_json(pool));
            pools.push_back(std::move(pool));
          }
          write_file_atomic(run.run_dir / pools_file, jsonl_dump(records));
        })) {
      for (const auto& j : jsonl_parse(read_file(run.run_dir / pools_file)))
        pools.push_back(detail::pool_from_json(j));
    }
    if (stop_requested("train-pools")) return run;
  }

  // mapping stages
  for (std::size_t mi = 0; mi < cfg.n_mappings; ++mi) {
    const std::string stage = "mapping-" + std::to_string(mi);
    const std::string results_file = "results_" + std::to_string(mi) + ".jsonl";
    std::vector<std::string> files = {results_file};
    const bool want_routing = detail::has_method(cfg, "routing");
    const bool want_rag = detail::has_method(cfg, "rag-exemplar") ||
                          detail::has_method(cfg, "rag-summary");
    const std::string labels_file = "labels_" + std::to_string(mi) + ".jsonl";
    const std::string pairs_file = "pairs_" + std::to_string(mi) + ".jsonl";
    const std::string router_file = "router_" + std::to_string(mi) + ".txt";
    if (want_routing) {
      files.push_back(labels_file);
      files.push_back(router_file);
    }
    if (want_rag) files.push_back(pairs_file);

    if (!run_stage(stage, files, [&] {
          detail::MappingArtifacts art = detail::eval_mapping(
              setup, users, evals, pools, mi, manifest.mapping_seeds[mi]);
          std::vector<json> res_records;
          for (const auto& r : art.results)
            res_records.push_back(method_result_to_json(r));
          write_file_atomic(run.run_dir / results_file, jsonl_dump(res_records));
          if (want_routing) {
            write_file_atomic(run.run_dir / labels_file,
                              jsonl_dump(art.label_records));
            write_file_atomic(run.run_dir / router_file, art.router_text);
          }
          if (want_rag)
            write_file_atomic(run.run_dir / pairs_file,
                              jsonl_dump(art.pair_records));
          for (auto& r : art.results) run.results.push_back(std::move(r));
        })) {
      for (const auto& j : jsonl_parse(read_file(run.run_dir / results_file)))
        run.results.push_back(method_result_from_json(j));
    }
    if (stop_requested(stage)) return run;
  }

  // report
  const std::string tsv_file = "report.tsv";
  const std::string txt_file = "report.txt";
  run.aggregates = aggregate_results(run.results, cfg.methods);
  if (!run_stage("report", {tsv_file, txt_file}, [&] {
        run.report = emit_report(run.aggregates, cfg.n_mappings, cfg.n_test);
        write_file_atomic(run.run_dir / tsv_file, run.report.tsv);
        write_file_atomic(run.run_dir / txt_file, run.report.text);
      })) {
    run.report.tsv = read_file(run.run_dir / tsv_file);
    run.report.text = read_file(run.run_dir / txt_file);
  }

  run.manifest = manifest;
  run.completed = true;
  return run;
}

// Rebuild aggregates and report files for an existing run directory from its
// stored config and per-mapping result records.
struct RebuiltReport {
  ExperimentConfig config;
  std::vector<MethodResult> results;
  std::vector<MethodAggregate> aggregates;
  ReportFiles files;
};

inline RebuiltReport rebuild_report(const std::filesystem::path& run_dir) {
  RebuiltReport out;
  const auto cfg_path = run_dir / "config.json";
  {
    std::ifstream in(cfg_path);
    if (!in) throw ConfigError("no config.json in " + run_dir.string());
    json root;
    try {
      in >> root;
    } catch (const json::exception& e) {
      throw ConfigError("corrupt config.json in " + run_dir.string() + ": " +
                        e.what());
    }
    out.config = config_from_json(root);
  }

  for (std::size_t mi = 0; mi < out.config.n_mappings; ++mi) {
    const auto path = run_dir / ("results_" + std::to_string(mi) + ".jsonl");
    if (!std::filesystem::exists(path))
      throw StageError("report",
                       "missing results file: " + path.filename().string());
    for (const auto& j : jsonl_parse(read_file(path)))
      out.results.push_back(method_result_from_json(j));
  }

  out.aggregates = aggregate_results(out.results, out.config.methods);
  out.files = emit_report(out.aggregates, out.config.n_mappings,
                          out.config.n_test);
  write_file_atomic(run_dir / "report.tsv", out.files.tsv);
  write_file_atomic(run_dir / "report.txt", out.files.text);
  return out;
}

// Materialize a setup from a config: catalogs, corpus, templates, gateway.
inline BenchSetup make_setup(const ExperimentConfig& cfg) {
  validate_config(cfg);
  BenchSetup setup;
  setup.config = cfg;

  auto resolve_names = [](const std::string& path, std::size_t count,
                          const std::vector<std::string>& builtin,
                          const std::string& what) {
    if (!path.empty()) {
      std::vector<std::string> names;
      try {
        names = core::load_name_list(path);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("cannot load ") + what + " catalog: " +
                          e.what());
      }
      if (names.size() != count)
        throw ConfigError(what + " catalog " + path + " holds " +
                          std::to_string(names.size()) + " names, config wants " +
                          std::to_string(count));
      return names;
    }
    if (count > builtin.size())
      throw ConfigError(what + ": built-in catalog has only " +
                        std::to_string(builtin.size()) +
                        " names; provide a catalog file");
    return std::vector<std::string>(builtin.begin(),
                                    builtin.begin() +
                                        static_cast<std::ptrdiff_t>(count));
  };
  setup.attribute_names =
      resolve_names(cfg.attributes_path, cfg.n_attributes,
                    core::default_attribute_names(), "attributes");
  setup.principle_names =
      resolve_names(cfg.principles_path, cfg.n_principles,
                    core::default_principle_names(), "principles");

  {
    std::ifstream in(cfg.corpus_path);
    if (!in) throw ConfigError("cannot open prompt corpus: " + cfg.corpus_path);
    setup.corpus = sim::read_prompt_corpus(in);
  }
  if (setup.corpus.size() < cfg.turns + 1)
    throw ConfigError("prompt corpus needs more than `turns` prompts");

  setup.templates = cfg.templates_dir.empty()
                        ? gateway::PromptTemplates{}
                        : gateway::PromptTemplates::from_dir(cfg.templates_dir);

  std::shared_ptr<gateway::DiskCache> cache;
  if (!cfg.cache_dir.empty()) {
    std::filesystem::create_directories(cfg.cache_dir);
    cache = std::make_shared<gateway::DiskCache>(cfg.cache_dir);
  }
  auto gw = std::make_shared<gateway::Gateway>(cache);
  if (cfg.backend == "synthetic") {
    gateway::SyntheticWorldConfig world;
    world.seed = cfg.world_seed;
    world.attribute_names = setup.attribute_names;
    world.principle_names = setup.principle_names;
    world.templates = setup.templates;
    world.judge = calib::SyntheticJudge::uniform_bias(cfg.n_principles, 0.0,
                                                      cfg.judge_noise_sd,
                                                      cfg.judge_compliance_gain);
    if (!cfg.judge_bias.empty()) world.judge.bias = cfg.judge_bias;
    auto backend = std::make_shared<gateway::SyntheticBackend>(world);
    for (const auto& role : gateway::gateway_roles()) {
      gateway::RoleConfig rc =
          cfg.roles.count(role) ? cfg.roles.at(role) : gateway::RoleConfig{};
      rc.backend = "synthetic";
      gw->add_role(role, rc, backend);
    }
  } else {
    for (const auto& role : gateway::gateway_roles()) {
      auto it = cfg.roles.find(role);
      if (it == cfg.roles.end() || it->second.base_url.empty())
        throw ConfigError("gateway.roles." + role +
                          ": http backend requires base_url (set it per role or "
                          "under gateway.roles.default)");
      gateway::RoleConfig rc = it->second;
      rc.backend = "http";
      gw->add_role(role, rc, std::make_shared<gateway::HttpBackend>(rc));
    }
  }
  setup.gateway = std::move(gw);
  return setup;
}

}  // namespace apm::bench
