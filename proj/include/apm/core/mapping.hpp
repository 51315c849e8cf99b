#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "apm/core/attribute.hpp"
#include "apm/core/matrix.hpp"
#include "apm/core/random.hpp"

namespace apm::core {

enum class MappingKind { SignedPermutation, GaussianDense };

inline std::string to_string(MappingKind k) {
  return k == MappingKind::SignedPermutation ? "signed_permutation" : "gaussian_dense";
}

inline MappingKind mapping_kind_from_string(const std::string& s) {
  if (s == "signed_permutation" || s == "signed-permutation") return MappingKind::SignedPermutation;
  if (s == "gaussian_dense" || s == "gaussian") return MappingKind::GaussianDense;
  throw std::invalid_argument("unknown mapping kind: " + s);
}

// Hidden preference mapping C (num_principles x num_attributes). Preferences
// are p = C * a; all entries have zero mean under resampling of the seed.
struct MappingMatrix {
  MappingKind kind = MappingKind::SignedPermutation;
  Matrix values;
  std::uint64_t seed = 0;

  std::size_t num_principles() const { return values.rows(); }
  std::size_t num_attributes() const { return values.cols(); }
};

// One nonzero of magnitude 1 per row and per column: uniform permutation
// structure with independent uniform signs. Requires square dimensions. The
// Rng overloads draw from an existing stream (hot loops); the seeded overloads
// are for persisted objects.
inline MappingMatrix sample_signed_permutation(std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample_signed_permutation: n must be positive");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::size_t j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n - 1)));
    std::swap(perm[i], perm[j]);
  }
  MappingMatrix out;
  out.kind = MappingKind::SignedPermutation;
  out.values = Matrix(n, n);
  for (std::size_t col = 0; col < n; ++col)
    out.values(perm[col], col) = static_cast<double>(rng.sign());
  return out;
}

inline MappingMatrix sample_signed_permutation(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  MappingMatrix out = sample_signed_permutation(n, rng);
  out.seed = seed;
  return out;
}

inline MappingMatrix sample_gaussian_mapping(std::size_t m, std::size_t n, Rng& rng) {
  if (m == 0 || n == 0)
    throw std::invalid_argument("sample_gaussian_mapping: dims must be positive");
  MappingMatrix out;
  out.kind = MappingKind::GaussianDense;
  out.values = Matrix(m, n);
  for (double& v : out.values.data()) v = rng.normal();
  return out;
}

inline MappingMatrix sample_gaussian_mapping(std::size_t m, std::size_t n,
                                             std::uint64_t seed) {
  Rng rng(seed);
  MappingMatrix out = sample_gaussian_mapping(m, n, rng);
  out.seed = seed;
  return out;
}

inline MappingMatrix sample_mapping(MappingKind kind, std::size_t m, std::size_t n,
                                    std::uint64_t seed) {
  if (kind == MappingKind::SignedPermutation) {
    if (m != n)
      throw std::invalid_argument("signed permutation mapping requires square dims");
    return sample_signed_permutation(n, seed);
  }
  return sample_gaussian_mapping(m, n, seed);
}

inline bool is_signed_permutation(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  std::vector<int> row_hits(m.rows(), 0), col_hits(m.cols(), 0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) {
      double v = m(r, c);
      if (v == 0.0) continue;
      if (v != 1.0 && v != -1.0) return false;
      ++row_hits[r];
      ++col_hits[c];
    }
  return std::all_of(row_hits.begin(), row_hits.end(), [](int h) { return h == 1; }) &&
         std::all_of(col_hits.begin(), col_hits.end(), [](int h) { return h == 1; });
}

using PreferenceVector = std::vector<double>;

inline PreferenceVector preference_vector(const MappingMatrix& c,
                                          const std::vector<double>& a) {
  return matvec(c.values, a);
}

inline PreferenceVector preference_vector(const MappingMatrix& c, const AttributeVector& a) {
  return preference_vector(c, a.as_doubles());
}

// r = a^T C^T s: linear in both the attribute vector and the score vector.
inline double reward(const std::vector<double>& a, const MappingMatrix& c,
                     const std::vector<double>& scores) {
  if (scores.size() != c.num_principles())
    throw std::invalid_argument("reward: score dimension mismatch");
  return dot(preference_vector(c, a), scores);
}

inline double reward(const AttributeVector& a, const MappingMatrix& c,
                     const std::vector<double>& scores) {
  return reward(a.as_doubles(), c, scores);
}

}  // namespace apm::core
