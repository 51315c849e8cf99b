// Benchmark orchestration: config schema and hashing, the stage manifest,
// result aggregation, and the synthetic end-to-end pipeline (determinism,
// warm-cache reuse, kill-and-resume equivalence).
#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "apm/bench/calibrate.hpp"
#include "apm/bench/config.hpp"
#include "apm/bench/manifest.hpp"
#include "apm/bench/report.hpp"
#include "apm/bench/run.hpp"
#include "apm/bench/select.hpp"
#include "apm/pers/router.hpp"
#include "apm/sim/population.hpp"
#include "support/planted.hpp"

namespace fs = std::filesystem;
using namespace apm;
using namespace apm::bench;
using nlohmann::json;

namespace {

fs::path make_temp_dir(const std::string& tag) {
  auto dir = fs::path(::testing::TempDir()) /
             ("apm_bench_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const std::vector<std::string>& corpus_lines() {
  static const std::vector<std::string> lines = {
      "write a short email to my landlord about the broken heater",
      "plan a three day trip to the coast",
      "explain how interest rates affect mortgages",
      "draft a toast for my sister's wedding",
      "summarize the plot of a mystery novel",
      "suggest a workout routine for beginners",
      "describe how to repot a houseplant",
      "outline a study schedule for a history exam",
      "recommend a menu for a vegetarian dinner party",
      "explain the rules of chess to a child",
      "write a product description for a desk lamp",
      "give advice on preparing for a job interview",
  };
  return lines;
}

fs::path write_corpus(const fs::path& dir) {
  std::ostringstream os;
  for (const auto& line : corpus_lines()) os << line << "\n";
  const fs::path p = dir / "prompts.txt";
  write_text(p, os.str());
  return p;
}

// Small but fully populated world: every method, two mappings, one active
// attribute under a signed permutation so the oracle has a clean target.
ExperimentConfig small_config(const fs::path& corpus, const fs::path& run_root,
                              const fs::path& cache_dir) {
  ExperimentConfig cfg;
  cfg.seed = 7;
  cfg.n_attributes = 4;
  cfg.n_principles = 4;
  cfg.k_active = 1;
  cfg.n_train = 24;
  cfg.n_test = 16;
  cfg.turns = 2;
  cfg.mapping_kind = core::MappingKind::SignedPermutation;
  cfg.n_mappings = 2;
  cfg.methods = known_methods();
  cfg.labeling_strategy = "margin";
  cfg.retrieval_k = 3;
  cfg.retrieval_key = "history";
  cfg.corpus_path = corpus.string();
  cfg.run_root = run_root.string();
  cfg.cache_dir = cache_dir.string();
  cfg.world_seed = 11;
  cfg.judge_noise_sd = 1.0;
  cfg.judge_compliance_gain = 2.0;
  return cfg;
}

struct SmallWorld {
  fs::path root;
  fs::path corpus;
  ExperimentConfig cfg;
  BenchmarkRun run;
};

// The end-to-end run is the expensive part; execute it once and let every
// test that inspects its artifacts share the result.
const SmallWorld& small_world() {
  static const SmallWorld* world = [] {
    auto* w = new SmallWorld;
    w->root = make_temp_dir("world");
    w->corpus = write_corpus(w->root);
    w->cfg = small_config(w->corpus, w->root / "runs", w->root / "cache");
    BenchSetup setup = make_setup(w->cfg);
    w->run = run_benchmark(setup);
    return w;
  }();
  return *world;
}

const MethodAggregate& aggregate_for(const BenchmarkRun& run,
                                     const std::string& method) {
  for (const auto& a : run.aggregates)
    if (a.method == method) return a;
  throw std::runtime_error("no aggregate for " + method);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config schema

TEST(BenchConfig, RoundTripPreservesHash) {
  ExperimentConfig cfg;
  const std::string h1 = config_hash(cfg);
  ExperimentConfig back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(config_hash(back), h1);
  EXPECT_EQ(back.methods, cfg.methods);
  EXPECT_EQ(back.n_train, cfg.n_train);
  EXPECT_EQ(back.labeling_strategy, "margin");
}

TEST(BenchConfig, RejectsUnknownKeys) {
  EXPECT_THROW(config_from_json(json{{"popsize", 3}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"population", {{"n_users", 5}}}}),
               ConfigError);
  EXPECT_THROW(
      config_from_json(json{{"gateway", {{"synthetic", {{"sd", 1.0}}}}}}),
      ConfigError);
  EXPECT_THROW(
      config_from_json(json{
          {"gateway", {{"roles", {{"translator", json::object()}}}}}}),
      ConfigError);
}

TEST(BenchConfig, ValidatesFieldRanges) {
  auto reject = [](void (*mutate)(ExperimentConfig&)) {
    ExperimentConfig cfg;
    mutate(cfg);
    EXPECT_THROW(validate_config(cfg), ConfigError);
  };
  reject([](ExperimentConfig& c) { c.n_principles = 7; });  // signed perm needs M=N
  reject([](ExperimentConfig& c) { c.methods = {"telepathy"}; });
  reject([](ExperimentConfig& c) { c.methods.clear(); });
  reject([](ExperimentConfig& c) { c.labeling_strategy = "vibes"; });
  reject([](ExperimentConfig& c) { c.k_active = 11; });
  reject([](ExperimentConfig& c) { c.retrieval_key = "mood"; });
  reject([](ExperimentConfig& c) { c.retrieval_k = 0; });
  reject([](ExperimentConfig& c) { c.judge_bias = {1.0, 2.0}; });
  reject([](ExperimentConfig& c) { c.backend = "psychic"; });
  reject([](ExperimentConfig& c) { c.n_mappings = 0; });
  reject([](ExperimentConfig& c) { c.n_train = 0; });  // learned methods train

  // Gaussian mappings allow M != N; methods that learn nothing from the
  // training split run fine without training users.
  ExperimentConfig ok;
  ok.mapping_kind = core::MappingKind::GaussianDense;
  ok.n_principles = 7;
  EXPECT_NO_THROW(validate_config(ok));
  ok = ExperimentConfig{};
  ok.methods = {"non-personalized", "routing-oracle"};
  ok.n_train = 0;
  EXPECT_NO_THROW(validate_config(ok));
}

TEST(BenchConfig, DefaultRoleIsInheritedByUnlistedRoles) {
  json j = {{"gateway",
             {{"roles",
               {{"default", {{"model", "m-base"}, {"temperature", 0.7}}},
                {"judge", {{"temperature", 0.0}}}}}}}};
  ExperimentConfig cfg = config_from_json(j);
  ASSERT_EQ(cfg.roles.size(), gateway::gateway_roles().size());
  EXPECT_EQ(cfg.roles.at("judge").model, "m-base");
  EXPECT_DOUBLE_EQ(cfg.roles.at("judge").temperature, 0.0);
  EXPECT_EQ(cfg.roles.at("generator").model, "m-base");
  EXPECT_DOUBLE_EQ(cfg.roles.at("generator").temperature, 0.7);
}

TEST(BenchConfig, HashIgnoresPathsOnly) {
  ExperimentConfig a;
  ExperimentConfig b = a;
  b.run_root = "elsewhere/runs";
  b.cache_dir = "elsewhere/cache";
  b.corpus_path = "elsewhere/prompts.txt";
  b.templates_dir = "elsewhere/templates";
  EXPECT_EQ(config_hash(a), config_hash(b));

  ExperimentConfig c = a;
  c.seed = 2;
  EXPECT_NE(config_hash(c), config_hash(a));
  ExperimentConfig d = a;
  d.methods = {"non-personalized", "routing"};
  EXPECT_NE(config_hash(d), config_hash(a));
  ExperimentConfig e = a;
  e.judge_noise_sd = 0.5;
  EXPECT_NE(config_hash(e), config_hash(a));
}

TEST(BenchConfig, LoadConfigFileReportsErrors) {
  auto dir = make_temp_dir("cfgfile");
  EXPECT_THROW(load_config_file((dir / "missing.json").string()), ConfigError);
  write_text(dir / "bad.json", "{ not json");
  EXPECT_THROW(load_config_file((dir / "bad.json").string()), ConfigError);
  write_text(dir / "ok.json", R"({"seed": 3, "mappings": {"count": 2}})");
  ExperimentConfig cfg = load_config_file((dir / "ok.json").string());
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.n_mappings, 2u);
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Manifest

TEST(BenchManifest, VerifiesArtifactHashes) {
  auto dir = make_temp_dir("manifest");
  write_text(dir / "a.txt", "alpha");

  RunManifest m;
  m.config_hash = "h";
  StageRecord rec;
  rec.status = "completed";
  rec.completed_at = "2026-01-01T00:00:00Z";
  rec.artifacts["a.txt"] = gateway::sha256_hex("alpha");
  m.stages["population"] = rec;
  m.save(dir);

  RunManifest loaded = RunManifest::load(dir);
  EXPECT_EQ(loaded.config_hash, "h");
  EXPECT_TRUE(loaded.stage_completed("population"));
  EXPECT_TRUE(loaded.stage_verified("population", dir));

  write_text(dir / "a.txt", "tampered");
  EXPECT_FALSE(loaded.stage_verified("population", dir));
  fs::remove(dir / "a.txt");
  EXPECT_FALSE(loaded.stage_verified("population", dir));
  EXPECT_FALSE(loaded.stage_verified("ghost-stage", dir));
  fs::remove_all(dir);
}

TEST(BenchManifest, LoadFromEmptyDirGivesFreshManifest) {
  auto dir = make_temp_dir("manifest_fresh");
  RunManifest m = RunManifest::load(dir);
  EXPECT_TRUE(m.config_hash.empty());
  EXPECT_TRUE(m.stages.empty());

  // A corrupt manifest file is treated the same way.
  write_text(dir / "manifest.json", "{ broken");
  RunManifest n = RunManifest::load(dir);
  EXPECT_TRUE(n.stages.empty());
  fs::remove_all(dir);
}

TEST(BenchManifest, JsonlRoundTrip) {
  std::vector<json> records = {json{{"a", 1}}, json{{"b", "two"}},
                               json{{"c", {1.5, 2.5}}}};
  auto parsed = jsonl_parse(jsonl_dump(records));
  ASSERT_EQ(parsed.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    EXPECT_EQ(parsed[i], records[i]);
  EXPECT_TRUE(jsonl_parse("").empty());
}

// ---------------------------------------------------------------------------
// Aggregation and report rendering

namespace {

MethodResult fake_result(std::size_t mapping, const std::string& method,
                         std::vector<double> personalized,
                         std::vector<double> baseline) {
  MethodResult r;
  r.mapping_index = mapping;
  r.method = method;
  for (std::size_t i = 0; i < personalized.size(); ++i)
    r.user_ids.push_back("user-" + std::to_string(i));
  r.personalized = std::move(personalized);
  r.baseline = std::move(baseline);
  r.metrics = core::compute_metrics(r.personalized, r.baseline, 1e-9);
  return r;
}

}  // namespace

TEST(BenchReport, AggregatesAcrossMappings) {
  // Mapping 0: 2 wins / 1 loss (W/L 2), mapping 1: 1 win / 1 loss / 1 tie.
  std::vector<MethodResult> results = {
      fake_result(0, "routing", {2, 3, 1}, {1, 1, 2}),
      fake_result(1, "routing", {2, 1, 5}, {1, 2, 5}),
  };
  auto aggs = aggregate_results(results, {"routing"});
  ASSERT_EQ(aggs.size(), 1u);
  const MethodAggregate& a = aggs.front();
  EXPECT_EQ(a.mappings, 2u);
  EXPECT_TRUE(a.wl_defined);
  EXPECT_DOUBLE_EQ(a.wl_mean, 1.5);  // mean of {2, 1}
  EXPECT_EQ(a.wins, 3u);
  EXPECT_EQ(a.losses, 2u);
  EXPECT_EQ(a.ties, 1u);
  EXPECT_NEAR(a.delta_mean, (2.0 / 3.0 + 0.0) / 2.0, 1e-12);
  EXPECT_GT(a.wl_sd, 0.0);

  // A single mapping reports zero spread.
  auto one = aggregate_results({results[0]}, {"routing"});
  EXPECT_DOUBLE_EQ(one.front().wl_sd, 0.0);
  EXPECT_DOUBLE_EQ(one.front().delta_sd, 0.0);
}

TEST(BenchReport, UndefinedWinLossPropagates) {
  // Second mapping has zero losses, so the ratio is undefined overall.
  std::vector<MethodResult> results = {
      fake_result(0, "routing", {2, 1}, {1, 2}),
      fake_result(1, "routing", {2, 3}, {1, 1}),
  };
  auto aggs = aggregate_results(results, {"routing"});
  ASSERT_EQ(aggs.size(), 1u);
  EXPECT_FALSE(aggs.front().wl_defined);
  EXPECT_EQ(aggs.front().wins, 3u);
  EXPECT_EQ(aggs.front().losses, 1u);

  ReportFiles rep = emit_report(aggs, 2, 2);
  EXPECT_NE(rep.tsv.find("undef(3w/1l)"), std::string::npos);
  EXPECT_NE(rep.text.find("undef(3w/1l)"), std::string::npos);
}

TEST(BenchReport, TsvLayoutIsStable) {
  std::vector<MethodResult> results = {
      fake_result(0, "non-personalized", {1, 2}, {2, 1}),
      fake_result(0, "routing", {3, 4}, {1, 1}),
  };
  auto aggs = aggregate_results(results, {"non-personalized", "routing"});
  ReportFiles rep = emit_report(aggs, 1, 2);

  std::istringstream tsv(rep.tsv);
  std::string line;
  ASSERT_TRUE(std::getline(tsv, line));
  EXPECT_EQ(line,
            "method\twl_mean\twl_sd\tdelta_mean\tdelta_sd\twins\tlosses\tties");
  ASSERT_TRUE(std::getline(tsv, line));
  EXPECT_EQ(line.substr(0, line.find('\t')), "non-personalized");
  ASSERT_TRUE(std::getline(tsv, line));
  EXPECT_EQ(line.substr(0, line.find('\t')), "routing");
  EXPECT_FALSE(std::getline(tsv, line));

  // Methods without results are skipped rather than rendered empty.
  auto sparse = aggregate_results(results, {"rag-summary", "routing"});
  ASSERT_EQ(sparse.size(), 1u);
  EXPECT_EQ(sparse.front().method, "routing");
}

TEST(BenchReport, MethodResultJsonRoundTrip) {
  MethodResult r = fake_result(3, "rag-exemplar", {2, 3, 1}, {1, 1, 3});
  MethodResult back = method_result_from_json(method_result_to_json(r));
  EXPECT_EQ(back.mapping_index, 3u);
  EXPECT_EQ(back.method, "rag-exemplar");
  EXPECT_EQ(back.user_ids, r.user_ids);
  EXPECT_EQ(back.personalized, r.personalized);
  EXPECT_EQ(back.baseline, r.baseline);
  EXPECT_EQ(back.metrics.wins, r.metrics.wins);
  ASSERT_TRUE(back.metrics.wl_ratio.has_value());
  EXPECT_DOUBLE_EQ(*back.metrics.wl_ratio, *r.metrics.wl_ratio);

  // Zero losses: the ratio is absent and must survive the round trip.
  MethodResult undef = fake_result(0, "routing", {2, 3}, {1, 1});
  ASSERT_FALSE(undef.metrics.wl_ratio.has_value());
  MethodResult undef_back = method_result_from_json(method_result_to_json(undef));
  EXPECT_FALSE(undef_back.metrics.wl_ratio.has_value());
  EXPECT_EQ(undef_back.metrics.wins, 2u);
}

TEST(BenchRun, TrainPoolJsonRoundTrip) {
  TrainPool p;
  p.user_id = "user-0003";
  p.prompt = "styled prompt";
  p.candidates = {pers::Candidate{0, +1, "follow text"},
                  pers::Candidate{0, -1, "avoid text"}};
  p.scores = {{8.0, 6.0}, {4.0, 6.0}};
  TrainPool back = detail::pool_from_json(detail::pool_to_json(p));
  EXPECT_EQ(back.user_id, p.user_id);
  EXPECT_EQ(back.prompt, p.prompt);
  ASSERT_EQ(back.candidates.size(), 2u);
  EXPECT_EQ(back.candidates[1].direction, -1);
  EXPECT_EQ(back.candidates[1].text, "avoid text");
  EXPECT_EQ(back.scores, p.scores);
}

TEST(BenchRun, EvalPromptDrawAvoidsHistory) {
  std::vector<std::string> corpus = {"a", "b", "c"};
  sim::UserRecord user;
  user.history = {sim::PromptPair{"a", "a!"}, sim::PromptPair{"b", "b!"}};
  core::Rng rng(5);
  for (int i = 0; i < 20; ++i)
    EXPECT_EQ(detail::draw_eval_prompt(rng, corpus, user), "c");

  user.history.push_back(sim::PromptPair{"c", "c!"});
  EXPECT_THROW(detail::draw_eval_prompt(rng, corpus, user), std::runtime_error);
}

// ---------------------------------------------------------------------------
// Setup materialization

TEST(BenchSetupTest, ReportsBadInputs) {
  auto dir = make_temp_dir("setup");
  fs::path corpus = write_corpus(dir);

  ExperimentConfig cfg = small_config(corpus, dir / "runs", dir / "cache");
  cfg.corpus_path = (dir / "nope.txt").string();
  EXPECT_THROW(make_setup(cfg), ConfigError);

  cfg = small_config(corpus, dir / "runs", dir / "cache");
  write_text(dir / "attrs.txt", "OnlyOne\n");
  cfg.attributes_path = (dir / "attrs.txt").string();  // config wants 4
  EXPECT_THROW(make_setup(cfg), ConfigError);

  cfg = small_config(corpus, dir / "runs", dir / "cache");
  cfg.backend = "http";  // no base_url anywhere
  EXPECT_THROW(make_setup(cfg), ConfigError);

  // A catalog file with the right count is accepted and drives the world.
  cfg = small_config(corpus, dir / "runs", dir / "cache");
  write_text(dir / "principles.txt",
             "# style principles\nWarmth\nBrevity\nRigor\nWhimsy\n");
  cfg.principles_path = (dir / "principles.txt").string();
  BenchSetup setup = make_setup(cfg);
  ASSERT_EQ(setup.principle_names.size(), 4u);
  EXPECT_EQ(setup.principle_names[3], "Whimsy");
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// End-to-end synthetic pipeline

TEST(BenchEndToEnd, CompletesWithAllArtifacts) {
  const SmallWorld& w = small_world();
  ASSERT_TRUE(w.run.completed);
  EXPECT_EQ(w.run.results.size(), w.cfg.methods.size() * w.cfg.n_mappings);
  ASSERT_EQ(w.run.aggregates.size(), w.cfg.methods.size());
  for (std::size_t i = 0; i < w.cfg.methods.size(); ++i)
    EXPECT_EQ(w.run.aggregates[i].method, w.cfg.methods[i]);

  for (const char* f :
       {"manifest.json", "population.jsonl", "eval_prompts.jsonl",
        "train_pools.jsonl", "results_0.jsonl", "results_1.jsonl",
        "labels_0.jsonl", "router_0.txt", "pairs_0.jsonl", "report.tsv",
        "report.txt"})
    EXPECT_TRUE(fs::exists(w.run.run_dir / f)) << f;

  // The report text renders one row per method plus the header block.
  for (const auto& m : w.cfg.methods)
    EXPECT_NE(w.run.report.text.find(m), std::string::npos) << m;
}

TEST(BenchEndToEnd, OracleSeparatesFromBaseline) {
  const SmallWorld& w = small_world();
  const MethodAggregate& oracle = aggregate_for(w.run, "routing-oracle");
  const MethodAggregate& plain = aggregate_for(w.run, "non-personalized");

  // The oracle follows the true preference direction, so its responses carry
  // the rewarded marker while independent baseline draws do not.
  EXPECT_GT(oracle.delta_mean, 0.5);
  EXPECT_GT(oracle.half_tie_mean, 0.6);
  EXPECT_GT(oracle.wins, oracle.losses);

  // Two independent plain draws are exchangeable: near-coin-flip win rate.
  EXPECT_NEAR(plain.half_tie_mean, 0.5, 0.3);
  EXPECT_GT(oracle.half_tie_mean, plain.half_tie_mean);
}

TEST(BenchEndToEnd, EvalPromptsAvoidUserHistory) {
  const SmallWorld& w = small_world();
  std::istringstream pop_in(read_file(w.run.run_dir / "population.jsonl"));
  auto users = sim::read_population(pop_in);
  ASSERT_EQ(users.size(), w.cfg.n_train + w.cfg.n_test);

  std::map<std::string, const sim::UserRecord*> by_id;
  for (const auto& u : users) by_id[u.id] = &u;

  auto evals = jsonl_parse(read_file(w.run.run_dir / "eval_prompts.jsonl"));
  ASSERT_EQ(evals.size(), w.cfg.n_test);
  for (const auto& e : evals) {
    const auto* u = by_id.at(e.at("user_id").get<std::string>());
    EXPECT_EQ(u->split, "test");
    const std::string neutral = e.at("neutral").get<std::string>();
    for (const auto& h : u->history) EXPECT_NE(h.neutral, neutral);
    EXPECT_FALSE(e.at("styled").get<std::string>().empty());
  }
}

TEST(BenchEndToEnd, MappingArtifactsAreWellFormed) {
  const SmallWorld& w = small_world();

  auto labels = jsonl_parse(read_file(w.run.run_dir / "labels_0.jsonl"));
  ASSERT_EQ(labels.size(), w.cfg.n_train);
  for (const auto& l : labels) {
    EXPECT_LT(l.at("principle").get<std::size_t>(), w.cfg.n_principles);
    const int dir = l.at("direction").get<int>();
    EXPECT_TRUE(dir == 1 || dir == -1);
  }

  auto pairs = jsonl_parse(read_file(w.run.run_dir / "pairs_0.jsonl"));
  ASSERT_EQ(pairs.size(), w.cfg.n_train);
  for (const auto& p : pairs) {
    EXPECT_FALSE(p.at("best").at("text").get<std::string>().empty());
    EXPECT_FALSE(p.at("worst").at("text").get<std::string>().empty());
  }

  std::istringstream rin(read_file(w.run.run_dir / "router_0.txt"));
  pers::RouterModel router = pers::load_router(rin);
  EXPECT_EQ(router.n_outputs, 2 * w.cfg.n_principles);

  // Results files reload into the same aggregates the run reported.
  std::vector<MethodResult> loaded;
  for (std::size_t mi = 0; mi < w.cfg.n_mappings; ++mi)
    for (const auto& j : jsonl_parse(read_file(
             w.run.run_dir / ("results_" + std::to_string(mi) + ".jsonl"))))
      loaded.push_back(method_result_from_json(j));
  auto aggs = aggregate_results(loaded, w.cfg.methods);
  ASSERT_EQ(aggs.size(), w.run.aggregates.size());
  for (std::size_t i = 0; i < aggs.size(); ++i) {
    EXPECT_EQ(aggs[i].method, w.run.aggregates[i].method);
    EXPECT_DOUBLE_EQ(aggs[i].delta_mean, w.run.aggregates[i].delta_mean);
    EXPECT_EQ(aggs[i].wins, w.run.aggregates[i].wins);
  }
}

TEST(BenchEndToEnd, RerunWithWarmCacheIsByteIdentical) {
  const SmallWorld& w = small_world();
  ExperimentConfig cfg2 = w.cfg;
  cfg2.run_root = (w.root / "runs_second").string();  // same cache, new runs

  BenchSetup setup2 = make_setup(cfg2);
  BenchmarkRun run2 = run_benchmark(setup2);
  ASSERT_TRUE(run2.completed);
  EXPECT_NE(run2.run_dir, w.run.run_dir);
  EXPECT_EQ(run2.run_dir.filename(), w.run.run_dir.filename());

  for (const char* f : {"population.jsonl", "eval_prompts.jsonl",
                        "train_pools.jsonl", "results_0.jsonl",
                        "results_1.jsonl", "report.tsv", "report.txt"})
    EXPECT_EQ(read_file(run2.run_dir / f), read_file(w.run.run_dir / f)) << f;

  // Everything was served from the shared disk cache.
  gateway::CounterSnapshot totals = setup2.gateway->totals();
  EXPECT_GT(totals.requests, 0);
  EXPECT_EQ(totals.network_calls, 0);
  EXPECT_EQ(totals.cache_hits, totals.requests);
}

TEST(BenchEndToEnd, CompletedRunDirIsReusedWithoutRecompute) {
  const SmallWorld& w = small_world();
  RunManifest before = RunManifest::load(w.run.run_dir);

  BenchSetup setup = make_setup(w.cfg);
  BenchmarkRun again = run_benchmark(setup);
  ASSERT_TRUE(again.completed);
  EXPECT_EQ(again.run_dir, w.run.run_dir);
  EXPECT_EQ(again.results.size(), w.run.results.size());
  EXPECT_EQ(again.report.tsv, w.run.report.tsv);

  // No stage body ran: the gateway saw zero traffic and no stage was
  // re-stamped with a fresh completion time.
  EXPECT_EQ(setup.gateway->totals().requests, 0);
  RunManifest after = RunManifest::load(w.run.run_dir);
  for (const auto& [name, rec] : before.stages) {
    ASSERT_TRUE(after.stages.count(name)) << name;
    EXPECT_EQ(after.stages.at(name).completed_at, rec.completed_at) << name;
  }
}

TEST(BenchEndToEnd, StopAndResumeMatchesFreshRun) {
  const SmallWorld& w = small_world();
  auto root = make_temp_dir("resume");
  fs::path corpus = write_corpus(root);
  ExperimentConfig cfg = w.cfg;
  cfg.corpus_path = corpus.string();
  cfg.run_root = (root / "runs").string();
  cfg.cache_dir = (root / "cache").string();  // cold cache on purpose

  RunOptions stop;
  stop.stop_after_stage = "train-pools";
  BenchmarkRun partial = run_benchmark(make_setup(cfg), stop);
  EXPECT_FALSE(partial.completed);
  EXPECT_EQ(partial.stopped_after, "train-pools");
  EXPECT_TRUE(partial.manifest.stage_completed("population"));
  EXPECT_TRUE(partial.manifest.stage_completed("train-pools"));
  EXPECT_FALSE(partial.manifest.stage_completed("mapping-0"));
  EXPECT_TRUE(partial.results.empty());

  BenchmarkRun resumed = run_benchmark(make_setup(cfg));
  ASSERT_TRUE(resumed.completed);

  // The resumed run and the uninterrupted reference run agree byte for byte,
  // even though they used unrelated caches.
  for (const char* f : {"population.jsonl", "train_pools.jsonl",
                        "results_0.jsonl", "results_1.jsonl", "report.tsv"})
    EXPECT_EQ(read_file(resumed.run_dir / f), read_file(w.run.run_dir / f)) << f;
  fs::remove_all(root);
}

TEST(BenchEndToEnd, RebuildReportMatchesOriginal) {
  const SmallWorld& w = small_world();
  const std::string tsv_before = read_file(w.run.run_dir / "report.tsv");

  RebuiltReport rebuilt = rebuild_report(w.run.run_dir);
  EXPECT_EQ(rebuilt.files.tsv, tsv_before);
  EXPECT_EQ(read_file(w.run.run_dir / "report.tsv"), tsv_before);
  EXPECT_EQ(rebuilt.results.size(), w.run.results.size());
  EXPECT_EQ(rebuilt.config.n_mappings, w.cfg.n_mappings);
  ASSERT_EQ(rebuilt.aggregates.size(), w.run.aggregates.size());
  for (std::size_t i = 0; i < rebuilt.aggregates.size(); ++i)
    EXPECT_DOUBLE_EQ(rebuilt.aggregates[i].delta_mean,
                     w.run.aggregates[i].delta_mean);

  auto dir = make_temp_dir("rebuild");
  EXPECT_THROW(rebuild_report(dir), ConfigError);  // no config.json
  fs::copy_file(w.run.run_dir / "config.json", dir / "config.json");
  EXPECT_THROW(rebuild_report(dir), StageError);  // no results files
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Calibration and selection wrappers

TEST(BenchCalibrate, GridJsonOverridesAndValidation) {
  json j = {{"bias_levels", {0.0, 2.0}},
            {"noise_levels", {1.0}},
            {"kinds", {"signed_permutation"}},
            {"k_values", {1}},
            {"n_attributes", 4},
            {"n_principles", 4},
            {"n_samples", 5000},
            {"seed", 9}};
  calib::GridSpec spec = grid_from_json(j);
  EXPECT_EQ(spec.bias_levels, (std::vector<double>{0.0, 2.0}));
  EXPECT_EQ(spec.kinds.size(), 1u);
  EXPECT_EQ(spec.n_samples, 5000u);
  EXPECT_EQ(spec.seed, 9u);
  EXPECT_TRUE(spec.negative_control);  // untouched default

  EXPECT_THROW(grid_from_json(json{{"biases", {0.0}}}), ConfigError);
  EXPECT_THROW(grid_from_json(json{{"kinds", {"rotation"}}}), ConfigError);
  EXPECT_THROW(grid_from_json(json{{"noise_levels", json::array()}}),
               ConfigError);
  EXPECT_THROW(grid_from_json(json{{"confidence", 1.5}}), ConfigError);
}

TEST(BenchCalibrate, SmallGridPassesAndReportsLowPower) {
  calib::GridSpec spec;
  spec.bias_levels = {0.0, 2.0};
  spec.noise_levels = {1.0};
  spec.kinds = {core::MappingKind::SignedPermutation};
  spec.k_values = {1};
  spec.n_attributes = 4;
  spec.m_principles = 4;
  spec.n_samples = 4000;
  spec.seed = 17;

  CalibrationRun run = run_calibration(spec);
  EXPECT_TRUE(run.ok());
  EXPECT_TRUE(run.outcome.grid_pass);
  EXPECT_TRUE(run.outcome.negative_control_rejected);
  EXPECT_NE(run.report.find("low statistical power"), std::string::npos);
  EXPECT_NE(run.report.find("[PASS]"), std::string::npos);
  EXPECT_NE(run.report.find("[XFAIL]"), std::string::npos);
  EXPECT_NE(run.report.find("overall: ok"), std::string::npos);
}

TEST(BenchSelect, RunsPipelineFromFile) {
  auto dir = make_temp_dir("select");
  testsupport::PlantedSpec plant;
  plant.rows = 1200;
  plant.attributes = 8;
  plant.seed = 21;
  select::ScoreMatrix planted = testsupport::planted_two_factor(plant);

  std::ostringstream os;
  for (std::size_t a = 0; a < planted.attribute_names.size(); ++a)
    os << (a ? "\t" : "") << planted.attribute_names[a];
  os << "\n";
  for (std::size_t r = 0; r < planted.values.rows(); ++r) {
    for (std::size_t a = 0; a < planted.values.cols(); ++a)
      os << (a ? "\t" : "") << planted.values(r, a);
    os << "\n";
  }
  const fs::path matrix = dir / "scores.tsv";
  write_text(matrix, os.str());

  select::SelectionConfig cfg;
  cfg.seed = 3;
  SelectionRun run = run_attribute_selection(matrix.string(), cfg);
  EXPECT_EQ(run.report.k_max, 2u);
  EXPECT_EQ(run.report.representative_names.size(), run.report.k_used);
  EXPECT_FALSE(run.table.empty());

  // Same seed, same file: identical records.
  SelectionRun again = run_attribute_selection(matrix.string(), cfg);
  EXPECT_EQ(again.records, run.records);

  EXPECT_THROW(run_attribute_selection((dir / "nope.tsv").string(), cfg),
               ConfigError);
  write_text(dir / "ragged.tsv", "a\tb\n1\n");
  EXPECT_THROW(run_attribute_selection((dir / "ragged.tsv").string(), cfg),
               ConfigError);

  // A threshold above every entropy leaves nothing to analyze.
  select::SelectionConfig strict = cfg;
  strict.entropy_tau = 99.0;
  EXPECT_THROW(run_attribute_selection(matrix.string(), strict),
               std::invalid_argument);
  fs::remove_all(dir);
}

TEST(BenchEndToEnd, AllDegenerateLabelsFailTheMappingStage) {
  auto root = make_temp_dir("degenerate");
  fs::path corpus = write_corpus(root);
  ExperimentConfig cfg = small_config(corpus, root / "runs", root / "cache");
  cfg.methods = {"routing"};
  cfg.n_train = 4;
  cfg.n_test = 2;
  cfg.n_mappings = 1;
  cfg.judge_compliance_gain = 0.0;  // judge can't tell candidates apart
  cfg.judge_noise_sd = 0.0;

  try {
    run_benchmark(make_setup(cfg));
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage, "mapping-0");
  }

  // The failure is recorded in the on-disk manifest for post-mortems.
  const std::string hash = config_hash(cfg);
  RunManifest m = RunManifest::load(fs::path(cfg.run_root) / hash.substr(0, 16));
  ASSERT_TRUE(m.stages.count("mapping-0"));
  EXPECT_EQ(m.stages.at("mapping-0").status, "failed");
  EXPECT_FALSE(m.stages.at("mapping-0").error.empty());
  fs::remove_all(root);
}
