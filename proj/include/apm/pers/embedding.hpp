#pragma once

// Embedding-side helpers shared by the router and the retrieval index:
// history features are the L2-normalized mean of the styled prompt
// embeddings, so users who write in the same style land close together.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "apm/gateway/gateway.hpp"
#include "apm/sim/population.hpp"

namespace apm::pers {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline std::vector<double> l2_normalize(std::vector<double> v) {
  double n = norm(v);
  if (n > 0.0)
    for (double& x : v) x /= n;
  return v;
}

// Cosine similarity; zero vectors have similarity 0 to everything.
inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

inline std::vector<double> mean_pool(const std::vector<std::vector<double>>& vecs) {
  if (vecs.empty()) throw std::invalid_argument("mean_pool: no vectors");
  std::vector<double> out(vecs.front().size(), 0.0);
  for (const auto& v : vecs) {
    if (v.size() != out.size())
      throw std::invalid_argument("mean_pool: inconsistent dimensions");
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i];
  }
  for (double& x : out) x /= static_cast<double>(vecs.size());
  return out;
}

// phi(H_u): normalized mean of per-prompt embeddings of the styled history.
inline std::vector<double> history_embedding(gateway::Gateway& gw,
                                             const sim::UserRecord& user) {
  if (user.history.empty())
    throw std::invalid_argument("history_embedding: user has no history");
  std::vector<std::vector<double>> embs;
  embs.reserve(user.history.size());
  for (const auto& h : user.history) embs.push_back(gw.embed_text(h.styled));
  return l2_normalize(mean_pool(embs));
}

}  // namespace apm::pers
