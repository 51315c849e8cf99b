#pragma once

// Prompt templates for the four chat roles.  Defaults are embedded so the
// binary works with no asset files; from_dir() overlays any template found
// on disk (<name>.txt).  Placeholders use {name} syntax and are substituted
// by render().
//
// The judge prompt deliberately puts "Principle:" and "Direction:" on their
// own header lines and the response after a "Response:" line: that keeps it
// natural for a live model while remaining machine-parseable, which the
// deterministic offline backend relies on.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace apm::gateway {

inline std::string render(std::string tpl,
                          const std::map<std::string, std::string>& vars) {
  for (const auto& [key, value] : vars) {
    const std::string needle = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = tpl.find(needle, pos)) != std::string::npos) {
      tpl.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return tpl;
}

struct PromptTemplates {
  std::string rewrite_system =
      "You rewrite text. Rewrite the user's message so it reads as if written "
      "by someone whose communication style is: {traits}.\n"
      "Keep the meaning, intent, and factual content unchanged. Reply with "
      "the rewritten message only.";

  std::string generate_system =
      "You are a helpful assistant. Answer the user's message directly.";

  std::string style_follow_instruction =
      "Follow this style principle in your response: {principle}.";

  std::string style_avoid_instruction =
      "Avoid this style principle in your response: {principle}.";

  std::string context_header = "User preference notes:";

  std::string judge_system =
      "You rate how strongly a response exhibits or suppresses a single "
      "style principle. Reply with one integer from 1 to 10 and nothing "
      "else.";

  std::string judge_user =
      "Principle: {principle}\n"
      "Direction: {direction}\n"
      "\n"
      "Rate from 1 (not at all) to 10 (extremely) how strongly the response "
      "below {direction_phrase} the style principle \"{principle}\". Reply "
      "with one integer and nothing else.\n"
      "\n"
      "Response:\n"
      "{response}";

  std::string summarize_style_system =
      "You will see several messages written by one user. Describe the "
      "user's writing style in one short paragraph.";

  std::string summarize_pref_system =
      "You will see pairs of assistant responses; in each pair the user "
      "preferred the first and disliked the second. Summarize in one "
      "sentence what kind of responses this user prefers.";

  // Missing files silently keep the embedded default for that template.
  static PromptTemplates from_dir(const std::filesystem::path& dir) {
    PromptTemplates t;
    auto load = [&dir](const char* name, std::string& slot) {
      std::ifstream in(dir / (std::string(name) + ".txt"));
      if (!in) return;
      std::ostringstream buf;
      buf << in.rdbuf();
      std::string s = buf.str();
      while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
      if (!s.empty()) slot = s;
    };
    load("rewrite_system", t.rewrite_system);
    load("generate_system", t.generate_system);
    load("style_follow_instruction", t.style_follow_instruction);
    load("style_avoid_instruction", t.style_avoid_instruction);
    load("context_header", t.context_header);
    load("judge_system", t.judge_system);
    load("judge_user", t.judge_user);
    load("summarize_style_system", t.summarize_style_system);
    load("summarize_pref_system", t.summarize_pref_system);
    return t;
  }
};

// "Verbose" with sign +1 -> "verbose"; with sign -1 -> "the opposite of
// verbose".  Joined with "; " these fill the {traits} placeholder.
inline std::string trait_phrase(std::string name, int sign) {
  for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return sign >= 0 ? name : "the opposite of " + name;
}

inline std::string style_instruction(const PromptTemplates& t,
                                     const std::string& principle, int direction) {
  const std::string& tpl =
      direction >= 0 ? t.style_follow_instruction : t.style_avoid_instruction;
  return render(tpl, {{"principle", principle}});
}

}  // namespace apm::gateway
