#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "apm/core/attribute.hpp"
#include "apm/core/mapping.hpp"

namespace apm::core {

// Line-delimited record format shared by mappings and attribute vectors:
// one JSON object per line with fields {kind, seed, dims, values}, values
// row-major. Doubles round-trip exactly (shortest-representation printing).

inline std::string to_record(const MappingMatrix& m) {
  nlohmann::json j;
  j["kind"] = to_string(m.kind);
  j["seed"] = m.seed;
  j["dims"] = {m.values.rows(), m.values.cols()};
  j["values"] = m.values.data();
  return j.dump();
}

inline std::string to_record(const AttributeVector& a) {
  nlohmann::json j;
  j["kind"] = "attribute";
  j["seed"] = a.seed;
  j["dims"] = {a.values.size()};
  j["values"] = a.values;
  return j.dump();
}

inline MappingMatrix mapping_from_record(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  MappingMatrix m;
  m.kind = mapping_kind_from_string(j.at("kind").get<std::string>());
  m.seed = j.at("seed").get<std::uint64_t>();
  auto dims = j.at("dims").get<std::vector<std::size_t>>();
  if (dims.size() != 2) throw std::invalid_argument("mapping record needs 2 dims");
  m.values = Matrix(dims[0], dims[1]);
  auto vals = j.at("values").get<std::vector<double>>();
  if (vals.size() != dims[0] * dims[1])
    throw std::invalid_argument("mapping record value count mismatch");
  m.values.data() = vals;
  return m;
}

inline AttributeVector attribute_from_record(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  if (j.at("kind").get<std::string>() != "attribute")
    throw std::invalid_argument("not an attribute record");
  AttributeVector a;
  a.seed = j.at("seed").get<std::uint64_t>();
  a.values = j.at("values").get<std::vector<int>>();
  auto dims = j.at("dims").get<std::vector<std::size_t>>();
  if (dims.size() != 1 || dims[0] != a.values.size())
    throw std::invalid_argument("attribute record dims mismatch");
  for (int v : a.values)
    if (v < -1 || v > 1) throw std::invalid_argument("attribute entries must be -1, 0, or 1");
  return a;
}

}  // namespace apm::core
