#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "apm/core/random.hpp"

namespace apm::core {

// Sparse signed user-attribute vector: entries in {-1, 0, +1}, exactly
// `active_count()` nonzero.
struct AttributeVector {
  std::vector<int> values;
  std::uint64_t seed = 0;

  std::size_t size() const { return values.size(); }

  std::size_t active_count() const {
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [](int v) { return v != 0; }));
  }

  std::vector<double> as_doubles() const {
    return std::vector<double>(values.begin(), values.end());
  }

  AttributeVector negated() const {
    AttributeVector out = *this;
    for (int& v : out.values) v = -v;
    return out;
  }
};

// Uniform law: the k-subset of active indices is uniform over all k-subsets,
// each active sign is an independent fair coin. The law is symmetric under
// global negation. This overload draws from an existing stream (hot loops);
// the seeded overload below is for persisted objects.
inline AttributeVector sample_attribute_vector(std::size_t n, std::size_t k, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample_attribute_vector: n must be positive");
  if (k < 1 || k > n)
    throw std::invalid_argument("sample_attribute_vector: need 1 <= k <= n");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n - 1)));
    std::swap(idx[i], idx[j]);
  }
  AttributeVector out;
  out.values.assign(n, 0);
  for (std::size_t i = 0; i < k; ++i) out.values[idx[i]] = rng.sign();
  return out;
}

inline AttributeVector sample_attribute_vector(std::size_t n, std::size_t k,
                                               std::uint64_t seed) {
  Rng rng(seed);
  AttributeVector out = sample_attribute_vector(n, k, rng);
  out.seed = seed;
  return out;
}

}  // namespace apm::core
