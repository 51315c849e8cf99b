#pragma once

// Nearest-neighbor retrieval over indexed training users, plus rendering of
// the retrieved material into a context block for conditioned generation.
//
// Neighbors are ranked by cosine similarity of the chosen embedding key;
// exact similarity ties break toward the lexicographically smaller user id so
// retrieval is deterministic.  Asking for more neighbors than the index holds
// returns everything with `fewer_than_requested` set rather than failing.

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "apm/gateway/templates.hpp"
#include "apm/pers/embedding.hpp"

namespace apm::pers {

struct ExemplarTriple {
  std::string prompt;
  std::string preferred;
  std::string dispreferred;
};

struct IndexedUser {
  std::string user_id;
  std::vector<double> history_embedding;
  std::vector<double> style_summary_embedding;  // empty when not computed
  std::vector<ExemplarTriple> exemplars;
  std::string pref_summary;
};

struct RetrievalIndex {
  std::vector<IndexedUser> users;
};

enum class RetrievalKey { History, StyleSummary };

struct Neighbor {
  const IndexedUser* user = nullptr;
  double similarity = 0.0;
};

struct RetrievalResult {
  std::vector<Neighbor> neighbors;  // descending similarity
  bool fewer_than_requested = false;
};

inline RetrievalResult retrieve_neighbors(const RetrievalIndex& index,
                                          const std::vector<double>& query,
                                          std::size_t k = 3,
                                          RetrievalKey key = RetrievalKey::History) {
  if (k == 0) throw std::invalid_argument("retrieve_neighbors: k must be positive");
  if (query.empty())
    throw std::invalid_argument("retrieve_neighbors: empty query embedding");

  std::vector<Neighbor> scored;
  scored.reserve(index.users.size());
  for (const auto& u : index.users) {
    const auto& e = key == RetrievalKey::History ? u.history_embedding
                                                 : u.style_summary_embedding;
    if (e.empty())
      throw std::invalid_argument("retrieve_neighbors: user " + u.user_id +
                                  " lacks the requested embedding");
    scored.push_back(Neighbor{&u, cosine(query, e)});
  }
  std::sort(scored.begin(), scored.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.user->user_id < b.user->user_id;
  });

  RetrievalResult result;
  result.fewer_than_requested = scored.size() < k;
  if (scored.size() > k) scored.resize(k);
  result.neighbors = std::move(scored);
  return result;
}

enum class ContextVariant { Exemplar, Summary };

// Renders retrieved users into the block prepended to the generator's system
// prompt.  Exemplar mode shows preference triples in similarity order;
// summary mode concatenates stored natural-language preference summaries.
inline std::string build_context(const gateway::PromptTemplates& templates,
                                 const std::vector<Neighbor>& neighbors,
                                 ContextVariant variant) {
  if (neighbors.empty())
    throw std::invalid_argument("build_context: no neighbors given");
  std::string out = templates.context_header;
  for (const auto& nb : neighbors) {
    const IndexedUser& u = *nb.user;
    if (variant == ContextVariant::Exemplar) {
      if (u.exemplars.empty())
        throw std::invalid_argument("build_context: user " + u.user_id +
                                    " has no exemplars");
      for (const auto& ex : u.exemplars) {
        out += "\nPrompt: " + ex.prompt;
        out += "\nPreferred: " + ex.preferred;
        out += "\nDispreferred: " + ex.dispreferred;
        out += "\n";
      }
    } else {
      if (u.pref_summary.empty())
        throw std::invalid_argument("build_context: user " + u.user_id +
                                    " has no preference summary");
      out += "\n" + u.pref_summary;
    }
  }
  return out;
}

}  // namespace apm::pers
