#pragma once

// Style-signal diagnostic over rewritten prompts: for one attribute and one
// side (follow = +1 / avoid = -1), rank bigrams by their pointwise KL
// contribution P(g|side) * ln(P(g|side) / P(g|rest)), where the comparison
// corpus deliberately excludes both sides of the same attribute so the
// contrast isolates that attribute's effect.  High-ranking bigrams are both
// frequent on the target side and disproportionately rare elsewhere.
//
// Preprocessing: lowercase, split on non-alphanumeric runs, adjacent word
// pairs within each text.  Probabilities use additive smoothing (alpha over
// the union vocabulary); only bigrams seen at least min_count times on the
// target side are ranked, and only nonnegative contributions are reported.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "apm/sim/population.hpp"

namespace apm::sim {

inline std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

inline std::vector<std::string> text_bigrams(const std::string& text) {
  auto words = tokenize_words(text);
  std::vector<std::string> grams;
  for (std::size_t i = 0; i + 1 < words.size(); ++i)
    grams.push_back(words[i] + " " + words[i + 1]);
  return grams;
}

struct BigramEntry {
  std::string bigram;
  double kl = 0.0;     // P(g|side) * ln(P(g|side)/P(g|rest))
  double ratio = 0.0;  // P(g|side) / P(g|rest)
};

struct BigramOptions {
  std::size_t min_count = 2;  // min occurrences on the target side
  double alpha = 0.5;         // additive smoothing
  std::size_t top_n = 8;      // 0 = unlimited
};

inline std::vector<BigramEntry> rank_bigrams(const std::vector<std::string>& side_texts,
                                             const std::vector<std::string>& rest_texts,
                                             const BigramOptions& opt = {}) {
  std::map<std::string, std::size_t> side_counts, rest_counts;
  std::size_t side_total = 0, rest_total = 0;
  for (const auto& t : side_texts)
    for (auto& g : text_bigrams(t)) {
      side_counts[g]++;
      ++side_total;
    }
  for (const auto& t : rest_texts)
    for (auto& g : text_bigrams(t)) {
      rest_counts[g]++;
      ++rest_total;
    }

  std::map<std::string, bool> vocab;
  for (const auto& [g, _] : side_counts) vocab[g] = true;
  for (const auto& [g, _] : rest_counts) vocab[g] = true;
  if (vocab.empty()) throw std::invalid_argument("rank_bigrams: empty vocabulary");
  const double v = static_cast<double>(vocab.size());

  auto prob = [&](const std::map<std::string, std::size_t>& counts, std::size_t total,
                  const std::string& g) {
    auto it = counts.find(g);
    double c = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    return (c + opt.alpha) / (static_cast<double>(total) + opt.alpha * v);
  };

  std::vector<BigramEntry> entries;
  for (const auto& [g, count] : side_counts) {
    if (count < opt.min_count) continue;
    double p = prob(side_counts, side_total, g);
    double q = prob(rest_counts, rest_total, g);
    double kl = p * std::log(p / q);
    if (kl < 0.0) continue;  // more typical of the comparison set
    entries.push_back(BigramEntry{g, kl, p / q});
  }
  std::sort(entries.begin(), entries.end(), [](const BigramEntry& a, const BigramEntry& b) {
    return a.kl != b.kl ? a.kl > b.kl : a.bigram < b.bigram;
  });
  if (opt.top_n > 0 && entries.size() > opt.top_n) entries.resize(opt.top_n);
  return entries;
}

struct BigramSideReport {
  std::string attribute;
  int side = +1;  // +1 follow / -1 avoid
  std::vector<BigramEntry> entries;
};

// Gathers each user's styled history prompts into (attribute, side) corpora
// and ranks against the users with that attribute inactive.
inline std::vector<BigramSideReport> bigram_kl_report(
    const std::vector<UserRecord>& users, const std::vector<std::string>& attribute_names,
    const BigramOptions& opt = {}) {
  if (users.empty()) throw std::invalid_argument("bigram_kl_report: no users");
  const std::size_t n = attribute_names.size();

  auto texts_of = [](const UserRecord& u) {
    std::vector<std::string> out;
    for (const auto& h : u.history) out.push_back(h.styled);
    return out;
  };

  std::vector<BigramSideReport> report;
  for (std::size_t i = 0; i < n; ++i) {
    for (int side : {+1, -1}) {
      std::vector<std::string> side_texts, rest_texts;
      for (const auto& u : users) {
        if (u.attributes.size() != n)
          throw std::invalid_argument("bigram_kl_report: attribute size mismatch");
        int a = u.attributes.values[i];
        auto t = texts_of(u);
        if (a == side)
          side_texts.insert(side_texts.end(), t.begin(), t.end());
        else if (a == 0)  // both sides of attribute i excluded from "rest"
          rest_texts.insert(rest_texts.end(), t.begin(), t.end());
      }
      if (side_texts.empty() || rest_texts.empty()) continue;  // nothing to contrast
      report.push_back(
          BigramSideReport{attribute_names[i], side, rank_bigrams(side_texts, rest_texts, opt)});
    }
  }
  return report;
}

inline std::string bigram_report_table(const std::vector<BigramSideReport>& report) {
  std::ostringstream out;
  out << "attribute\tside\tbigram\tkl\tratio\n";
  for (const auto& r : report) {
    for (const auto& e : r.entries) {
      out << r.attribute << "\t" << (r.side > 0 ? "follow" : "avoid") << "\t"
          << e.bigram << "\t";
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.4f\t%.1fx", e.kl, e.ratio);
      out << buf << "\n";
    }
  }
  return out.str();
}

}  // namespace apm::sim
