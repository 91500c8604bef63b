#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fedboost/common.hpp"

namespace fedboost::cli {

// Key-value config with nested sections:
//
//   # comment
//   [experiment]
//   seeds = 1,2,3
//   [synthetic.node.small]
//   idle_watts = 45
//
// Section names nest with dots. Values keep everything after '=' with outer
// whitespace trimmed; lists are comma separated. All lookup failures raise
// ConfigError naming file, section and key.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::filesystem::path& path);
  static ConfigFile parse_string(std::string_view text, const std::string& origin);

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key) const;
  std::int64_t get_int_or(const std::string& section, const std::string& key,
                          std::int64_t fallback) const;
  double get_real(const std::string& section, const std::string& key) const;
  double get_real_or(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;

  std::vector<std::string> get_string_list(const std::string& section,
                                           const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& section, const std::string& key) const;

  // Sections whose name starts with `prefix` (e.g. "synthetic.node."), in
  // file order.
  std::vector<std::string> sections_with_prefix(const std::string& prefix) const;
  std::vector<std::string> keys_in(const std::string& section) const;

  // Raises ConfigError when `section` holds a key outside `allowed`.
  void expect_keys(const std::string& section, const std::vector<std::string>& allowed) const;

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
  std::vector<std::string> section_order_;
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::map<std::string, std::vector<std::string>> key_order_;
};

}  // namespace fedboost::cli
