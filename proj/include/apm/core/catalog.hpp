#pragma once

// Default vocabularies: the user-side style attributes that shape how people
// write, and the response-side style principles a generator can follow or
// avoid.  Both lists can be overridden from plain text files (one name per
// line, '#' starts a comment).

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace apm::core {

inline std::vector<std::string> default_attribute_names() {
  return {"Verbose",      "Enthusiastic", "Prescriptive",       "Unpolished",
          "Open-ended",   "Transactional", "Anxious",           "Highly constrained",
          "Tech-savvy",   "Hypothetical"};
}

inline std::vector<std::string> default_principle_names() {
  return {"Persuasive",           "Elaborate",
          "Casual",               "Prescriptive",
          "Gentle",               "Acknowledges uncertainty",
          "Emotionally neutral",  "Assumes no prior knowledge",
          "Collaborative",        "Presents multiple perspectives"};
}

inline std::vector<std::string> load_name_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open name list: " + path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    auto b = line.find_first_not_of(" \t\r");
    auto e = line.find_last_not_of(" \t\r");
    if (b == std::string::npos) continue;
    names.push_back(line.substr(b, e - b + 1));
  }
  if (names.empty()) throw std::runtime_error("name list is empty: " + path);
  return names;
}

}  // namespace apm::core
