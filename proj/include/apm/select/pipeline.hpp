#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apm/core/matrix.hpp"
#include "apm/select/entropy.hpp"
#include "apm/select/jacobi.hpp"
#include "apm/select/parallel_analysis.hpp"
#include "apm/select/stats.hpp"
#include "apm/select/varimax.hpp"

namespace apm::select {

// Judge-score table: one row per text, one column per candidate attribute.
struct ScoreMatrix {
  core::Matrix values;
  std::vector<std::string> attribute_names;
};

namespace detail {

inline char sniff_delimiter(const std::string& header) {
  if (header.find('\t') != std::string::npos) return '\t';
  if (header.find(',') != std::string::npos) return ',';
  return ' ';
}

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  if (delim == ' ') {
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
  }
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, delim)) {
    // trim surrounding whitespace
    std::size_t b = field.find_first_not_of(" \t\r");
    std::size_t e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace detail

// Delimited text: header row of attribute names, then one row of scores per
// text. Tab, comma, or whitespace delimited (sniffed from the header).
inline ScoreMatrix read_score_matrix(std::istream& in) {
  std::string line;
  ScoreMatrix out;
  char delim = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (out.attribute_names.empty()) {
      delim = detail::sniff_delimiter(line);
      out.attribute_names = detail::split_fields(line, delim);
      if (out.attribute_names.empty())
        throw std::invalid_argument("score matrix: empty header row");
      continue;
    }
    std::vector<std::string> fields = detail::split_fields(line, delim);
    if (fields.size() != out.attribute_names.size())
      throw std::invalid_argument("score matrix: row width does not match header");
    std::vector<double> row;
    row.reserve(fields.size());
    for (const std::string& f : fields) {
      std::size_t used = 0;
      double v = std::stod(f, &used);
      if (used != f.size())
        throw std::invalid_argument("score matrix: non-numeric cell '" + f + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (out.attribute_names.empty())
    throw std::invalid_argument("score matrix: missing header");
  if (rows.size() < 2) throw std::invalid_argument("score matrix: need at least two rows");
  out.values = core::Matrix(rows.size(), out.attribute_names.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) out.values(r, c) = rows[r][c];
  return out;
}

// One attribute per component: the argmax of |loading| down the component's
// column. An attribute that wins two components keeps the earlier component;
// the later one takes its next-highest unselected attribute. Exact ties go to
// the lowest attribute index.
inline std::vector<std::size_t> select_representatives(const core::Matrix& loadings) {
  if (loadings.rows() < loadings.cols())
    throw std::invalid_argument(
        "select_representatives: fewer attributes than components");
  std::vector<std::size_t> reps;
  std::vector<bool> taken(loadings.rows(), false);
  for (std::size_t j = 0; j < loadings.cols(); ++j) {
    std::size_t best = loadings.rows();
    double best_mag = -1.0;
    for (std::size_t i = 0; i < loadings.rows(); ++i) {
      if (taken[i]) continue;
      double mag = std::fabs(loadings(i, j));
      if (mag > best_mag) {
        best_mag = mag;
        best = i;
      }
    }
    taken[best] = true;
    reps.push_back(best);
  }
  return reps;
}

struct SelectionConfig {
  double entropy_tau = 1.5;     // bits; columns below are discarded
  std::size_t n_components = 0; // 0 = use everything parallel analysis supports
  std::size_t surrogates = 100;
  double percentile = 0.95;
  std::uint64_t seed = 0;
  bool kaiser_normalize = true;
  double varimax_tol = 1e-8;
  std::size_t varimax_max_sweeps = 1000;
};

struct SelectionReport {
  std::vector<std::string> all_names;
  std::vector<double> entropies;         // per original column
  std::vector<std::size_t> retained;     // original indices that passed the filter
  ColumnStats retained_stats;
  std::vector<double> eigenvalues;       // of the retained-correlation matrix
  std::vector<double> thresholds;        // parallel-analysis per-rank thresholds
  std::size_t k_max = 0;
  std::size_t k_used = 0;
  double explained_variance = 0.0;       // fraction, first k_used eigenvalues
  core::Matrix loadings;                 // retained x k_used, V sqrt(lambda)
  core::Matrix rotated_loadings;
  std::vector<double> criterion_trace;
  std::vector<std::size_t> representatives;       // indices into `retained`
  std::vector<std::string> representative_names;  // original attribute names
};

// Full pipeline: entropy filter -> correlation -> eigendecomposition ->
// parallel analysis -> principal loadings -> varimax -> per-component argmax.
inline SelectionReport run_selection(const ScoreMatrix& scores,
                                     const SelectionConfig& cfg) {
  SelectionReport rep;
  rep.all_names = scores.attribute_names;
  const core::Matrix& data = scores.values;
  if (data.cols() != scores.attribute_names.size())
    throw std::invalid_argument("run_selection: name/column count mismatch");

  rep.entropies.resize(data.cols());
  for (std::size_t c = 0; c < data.cols(); ++c) {
    std::vector<double> col(data.rows());
    for (std::size_t r = 0; r < data.rows(); ++r) col[r] = data(r, c);
    rep.entropies[c] = shannon_entropy(col);
    if (rep.entropies[c] >= cfg.entropy_tau) rep.retained.push_back(c);
  }
  if (rep.retained.size() < 2)
    throw std::invalid_argument("run_selection: fewer than two columns survive the entropy filter");

  core::Matrix filtered(data.rows(), rep.retained.size());
  for (std::size_t r = 0; r < data.rows(); ++r)
    for (std::size_t c = 0; c < rep.retained.size(); ++c)
      filtered(r, c) = data(r, rep.retained[c]);
  rep.retained_stats = column_stats(filtered);

  core::Matrix corr = correlation_matrix(filtered);
  EigenDecomposition eig = eigendecompose_symmetric(corr);
  rep.eigenvalues = eig.eigenvalues;

  ParallelAnalysisResult pa = parallel_analysis(data.rows(), rep.retained.size(),
                                                cfg.surrogates, cfg.percentile, cfg.seed);
  rep.thresholds = pa.thresholds;
  rep.k_max = components_above_threshold(eig.eigenvalues, pa);
  if (rep.k_max == 0)
    throw std::invalid_argument("run_selection: parallel analysis retains no components");

  rep.k_used = cfg.n_components == 0 ? rep.k_max : cfg.n_components;
  if (rep.k_used > rep.k_max)
    throw std::invalid_argument("run_selection: requested components exceed the parallel-analysis bound");

  double total = 0.0, kept = 0.0;
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
    total += rep.eigenvalues[i];
    if (i < rep.k_used) kept += rep.eigenvalues[i];
  }
  rep.explained_variance = total > 0.0 ? kept / total : 0.0;

  rep.loadings = core::Matrix(rep.retained.size(), rep.k_used);
  for (std::size_t i = 0; i < rep.retained.size(); ++i)
    for (std::size_t j = 0; j < rep.k_used; ++j)
      rep.loadings(i, j) =
          eig.eigenvectors(i, j) * std::sqrt(std::max(0.0, rep.eigenvalues[j]));

  VarimaxResult vr = varimax_rotate(rep.loadings, cfg.varimax_tol,
                                    cfg.varimax_max_sweeps, cfg.kaiser_normalize);
  rep.rotated_loadings = vr.rotated;
  rep.criterion_trace = vr.criterion_trace;

  rep.representatives = select_representatives(rep.rotated_loadings);
  for (std::size_t idx : rep.representatives)
    rep.representative_names.push_back(rep.all_names[rep.retained[idx]]);
  return rep;
}

// Line-delimited records mirroring the report: a meta line, one line per
// original attribute, one line per component.
inline std::string selection_records(const SelectionReport& rep) {
  std::ostringstream os;
  {
    nlohmann::json j;
    j["record"] = "meta";
    j["attributes"] = rep.all_names.size();
    j["retained"] = rep.retained.size();
    j["k_max"] = rep.k_max;
    j["k_used"] = rep.k_used;
    j["explained_variance"] = rep.explained_variance;
    j["varimax_sweeps"] = rep.criterion_trace.size() - 1;
    os << j.dump() << "\n";
  }
  for (std::size_t c = 0; c < rep.all_names.size(); ++c) {
    nlohmann::json j;
    j["record"] = "attribute";
    j["name"] = rep.all_names[c];
    j["entropy"] = rep.entropies[c];
    auto it = std::find(rep.retained.begin(), rep.retained.end(), c);
    j["retained"] = it != rep.retained.end();
    if (it != rep.retained.end()) {
      std::size_t ridx = static_cast<std::size_t>(it - rep.retained.begin());
      j["mean"] = rep.retained_stats.means[ridx];
      j["sd"] = rep.retained_stats.sds[ridx];
      std::vector<double> lds(rep.k_used);
      for (std::size_t k = 0; k < rep.k_used; ++k) lds[k] = rep.rotated_loadings(ridx, k);
      j["loadings"] = lds;
    }
    os << j.dump() << "\n";
  }
  for (std::size_t k = 0; k < rep.k_used; ++k) {
    nlohmann::json j;
    j["record"] = "component";
    j["index"] = k;
    j["eigenvalue"] = rep.eigenvalues[k];
    j["threshold"] = rep.thresholds[k];
    j["representative"] = rep.representative_names[k];
    os << j.dump() << "\n";
  }
  return os.str();
}

// Human-readable table: per component, attributes sorted by |rotated loading|.
inline std::string selection_table(const SelectionReport& rep, std::size_t top_n = 5) {
  std::ostringstream os;
  os << "Attributes: " << rep.all_names.size() << " candidates, " << rep.retained.size()
     << " retained (entropy filter), k_max = " << rep.k_max << ", k = " << rep.k_used
     << ", explained variance = " << std::fixed << std::setprecision(1)
     << 100.0 * rep.explained_variance << "%\n";
  for (std::size_t k = 0; k < rep.k_used; ++k) {
    os << "\nComponent " << (k + 1) << " (eigenvalue " << std::setprecision(3)
       << rep.eigenvalues[k] << ", threshold " << rep.thresholds[k]
       << ") -> representative: " << rep.representative_names[k] << "\n";
    std::vector<std::size_t> order(rep.retained.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::fabs(rep.rotated_loadings(a, k)) > std::fabs(rep.rotated_loadings(b, k));
    });
    os << "  " << std::left << std::setw(28) << "attribute" << std::right
       << std::setw(9) << "loading" << std::setw(8) << "mean" << std::setw(8) << "sd"
       << std::setw(10) << "entropy" << "\n";
    for (std::size_t i = 0; i < std::min(top_n, order.size()); ++i) {
      std::size_t ridx = order[i];
      std::size_t orig = rep.retained[ridx];
      os << "  " << std::left << std::setw(28) << rep.all_names[orig] << std::right
         << std::setw(9) << std::setprecision(3) << rep.rotated_loadings(ridx, k)
         << std::setw(8) << std::setprecision(2) << rep.retained_stats.means[ridx]
         << std::setw(8) << rep.retained_stats.sds[ridx] << std::setw(10)
         << rep.entropies[orig] << "\n";
    }
  }
  return os.str();
}

}  // namespace apm::select
