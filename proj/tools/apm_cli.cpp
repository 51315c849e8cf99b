// Command-line front end: benchmark runs, judge calibration, attribute
// selection, report re-emission, and cache maintenance.
//
// Exit codes: 0 success, 1 configuration error, 2 stage/processing failure,
// 3 acceptance check failed (calibration cells outside their intervals).
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "apm/bench/calibrate.hpp"
#include "apm/bench/config.hpp"
#include "apm/bench/run.hpp"
#include "apm/bench/select.hpp"
#include "apm/gateway/cache.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitStage = 2;
constexpr int kExitCheckFailed = 3;

int run_benchmark_cmd(const std::string& config_path,
                      const std::string& stop_after, bool quiet) {
  apm::bench::ExperimentConfig cfg = apm::bench::load_config_file(config_path);
  apm::bench::BenchSetup setup = apm::bench::make_setup(cfg);

  apm::bench::RunOptions opt;
  opt.stop_after_stage = stop_after;
  if (!quiet) opt.log = &std::cerr;

  apm::bench::BenchmarkRun run = apm::bench::run_benchmark(setup, opt);
  if (!run.completed) {
    std::cout << "stopped after stage " << run.stopped_after << "; run dir: "
              << run.run_dir.string() << "\n";
    return kExitOk;
  }
  std::cout << "run dir: " << run.run_dir.string() << "\n\n" << run.report.text;
  return kExitOk;
}

apm::calib::GridSpec load_grid_config(const std::string& config_path) {
  apm::calib::GridSpec spec;
  if (config_path.empty()) return spec;
  std::ifstream in(config_path);
  if (!in)
    throw apm::bench::ConfigError("cannot open config file: " + config_path);
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw apm::bench::ConfigError("config parse error in " + config_path +
                                  ": " + e.what());
  }
  return apm::bench::grid_from_json(root);
}

int run_calibrate_cmd(const apm::calib::GridSpec& spec) {
  apm::bench::CalibrationRun run = apm::bench::run_calibration(spec);
  std::cout << run.report;
  return run.ok() ? kExitOk : kExitCheckFailed;
}

int run_select_cmd(const std::string& input, const apm::select::SelectionConfig& cfg,
                   const std::string& output_dir) {
  apm::bench::SelectionRun run = apm::bench::run_attribute_selection(input, cfg);
  std::cout << run.table;
  if (!output_dir.empty()) {
    fs::create_directories(output_dir);
    std::ofstream table(fs::path(output_dir) / "selection.txt");
    table << run.table;
    std::ofstream records(fs::path(output_dir) / "selection.jsonl");
    records << run.records;
    std::cout << "wrote " << (fs::path(output_dir) / "selection.txt").string()
              << " and selection.jsonl\n";
  }
  return kExitOk;
}

int run_report_cmd(const std::string& run_dir) {
  apm::bench::RebuiltReport rebuilt = apm::bench::rebuild_report(run_dir);
  std::cout << rebuilt.files.text;
  return kExitOk;
}

int run_cache_inspect(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw apm::bench::ConfigError("cache directory does not exist: " + dir);
  apm::gateway::DiskCache cache{fs::path(dir)};
  std::uintmax_t bytes = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json")
      bytes += e.file_size();
  std::cout << dir << ": " << cache.size() << " entries, " << bytes
            << " bytes\n";
  return kExitOk;
}

int run_cache_clear(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw apm::bench::ConfigError("cache directory does not exist: " + dir);
  apm::gateway::DiskCache cache{fs::path(dir)};
  std::cout << "removed " << cache.clear() << " entries from " << dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-mapping benchmark harness"};
  app.require_subcommand(1);

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Run the benchmark pipeline");
  std::string bench_config;
  std::string stop_after;
  bool quiet = false;
  bench->add_option("--config", bench_config, "Experiment config file (JSON)")
      ->required();
  bench->add_option("--stop-after", stop_after,
                    "Stop once the named stage completes (for staged runs)");
  bench->add_flag("--quiet", quiet, "Suppress per-stage progress on stderr");

  // calibrate
  auto* calib = app.add_subcommand(
      "calibrate", "Verify judge calibration on the bias/noise grid");
  std::string calib_config;
  std::size_t calib_samples = 0;
  std::uint64_t calib_seed = 0;
  unsigned calib_workers = 0;
  calib->add_option("--config", calib_config, "Grid config file (JSON)");
  auto* calib_samples_opt =
      calib->add_option("--samples", calib_samples, "Samples per cell override");
  auto* calib_seed_opt = calib->add_option("--seed", calib_seed, "Seed override");
  auto* calib_workers_opt =
      calib->add_option("--workers", calib_workers, "Worker thread override");

  // select-attributes
  auto* sel = app.add_subcommand("select-attributes",
                                 "Reduce a score matrix to representatives");
  std::string sel_input;
  std::string sel_output;
  apm::select::SelectionConfig sel_cfg;
  sel->add_option("--input", sel_input, "Score matrix file (TSV/CSV)")
      ->required();
  sel->add_option("--tau", sel_cfg.entropy_tau, "Entropy threshold in bits");
  sel->add_option("--trials", sel_cfg.surrogates,
                  "Parallel-analysis surrogate count");
  sel->add_option("--percentile", sel_cfg.percentile,
                  "Parallel-analysis percentile in (0,1)");
  sel->add_option("--components", sel_cfg.n_components,
                  "Component count (0 = automatic)");
  sel->add_option("--seed", sel_cfg.seed, "Surrogate RNG seed");
  sel->add_option("--output", sel_output, "Directory for table + records");

  // report
  auto* rep = app.add_subcommand("report",
                                 "Re-emit the report for an existing run");
  std::string rep_run;
  rep->add_option("--run", rep_run, "Run directory")->required();

  // cache
  auto* cache = app.add_subcommand("cache", "Inspect or clear a call cache");
  cache->require_subcommand(1);
  std::string cache_dir;
  auto* cache_inspect =
      cache->add_subcommand("inspect", "Count entries and bytes");
  cache_inspect->add_option("--dir", cache_dir, "Cache directory")->required();
  auto* cache_clear = cache->add_subcommand("clear", "Remove all entries");
  cache_clear->add_option("--dir", cache_dir, "Cache directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench) return run_benchmark_cmd(bench_config, stop_after, quiet);
    if (*calib) {
      apm::calib::GridSpec spec = load_grid_config(calib_config);
      if (calib_samples_opt->count()) spec.n_samples = calib_samples;
      if (calib_seed_opt->count()) spec.seed = calib_seed;
      if (calib_workers_opt->count()) spec.workers = calib_workers;
      return run_calibrate_cmd(spec);
    }
    if (*sel) return run_select_cmd(sel_input, sel_cfg, sel_output);
    if (*rep) return run_report_cmd(rep_run);
    if (*cache_inspect) return run_cache_inspect(cache_dir);
    if (*cache_clear) return run_cache_clear(cache_dir);
  } catch (const apm::bench::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const apm::bench::StageError& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitOk;
}
