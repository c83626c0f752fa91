#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "semilin/harness.hpp"
#include "semilin/problem.hpp"

namespace semilin {

struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
  int value_column = 0;  // 1-based column of the first value character
};

/// "[section]" headers followed by "key = value" lines; '#' starts a comment.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text);
  static ConfigFile read(const std::filesystem::path& path);

  const ConfigEntry* find(std::string_view section, std::string_view key) const;
  std::vector<const ConfigEntry*> section(std::string_view name) const;
  bool has_section(std::string_view name) const;
  const std::string& text() const { return text_; }

 private:
  std::vector<ConfigEntry> entries_;
  std::vector<std::string> sections_;
  std::string text_;
};

Problem load_problem(const std::filesystem::path& path);
Problem parse_problem(const ConfigFile& config);

/// Settings from the [run] section layered over `base`.
RunConfig parse_run_config(const ConfigFile& config, const Problem& problem, RunConfig base = {});

/// linear_heat, burgers or robust_game; throws Precondition for any other name.
Problem builtin(std::string_view name);
const std::vector<std::string>& builtin_names();

}  // namespace semilin
