// Attribute-selection entry point: loads a score matrix file, runs the
// entropy -> parallel-analysis -> varimax pipeline, and packages the table
// plus machine-readable records for the CLI.
#pragma once

#include <fstream>
#include <string>

#include "apm/bench/config.hpp"
#include "apm/select/pipeline.hpp"

namespace apm::bench {

struct SelectionRun {
  select::SelectionReport report;
  std::string table;    // human-readable rendering
  std::string records;  // line-delimited records
};

inline SelectionRun run_attribute_selection(const std::string& matrix_path,
                                            const select::SelectionConfig& cfg) {
  std::ifstream in(matrix_path);
  if (!in) throw ConfigError("cannot open score matrix: " + matrix_path);
  select::ScoreMatrix scores;
  try {
    scores = select::read_score_matrix(in);
  } catch (const std::exception& e) {
    throw ConfigError("score matrix " + matrix_path + ": " + e.what());
  }

  SelectionRun run;
  run.report = select::run_selection(scores, cfg);
  run.table = select::selection_table(run.report);
  run.records = select::selection_records(run.report);
  return run;
}

}  // namespace apm::bench
