#include "fedboost/cli/config_file.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace fedboost::cli {

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path.string());
}

ConfigFile ConfigFile::parse_string(std::string_view text, const std::string& origin) {
  ConfigFile config;
  config.origin_ = origin;

  std::string current;
  std::size_t line_number = 0;
  std::stringstream stream{std::string(text)};
  std::string raw;
  while (std::getline(stream, raw)) {
    ++line_number;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;

    const std::string where = origin + ":" + std::to_string(line_number);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      current = trim(std::string_view(line).substr(1, line.size() - 2));
      if (current.empty()) throw ConfigError(where + ": empty section name");
      if (config.sections_.count(current) != 0)
        throw ConfigError(where + ": duplicate section [" + current + "]");
      config.sections_[current] = {};
      config.section_order_.push_back(current);
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    if (current.empty()) throw ConfigError(where + ": key outside any [section]");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    auto& section = config.sections_[current];
    if (section.count(key) != 0)
      throw ConfigError(where + ": duplicate key '" + key + "' in [" + current + "]");
    section[key] = trim(std::string_view(line).substr(eq + 1));
    config.key_order_[current].push_back(key);
  }
  return config;
}

bool ConfigFile::has_section(const std::string& section) const {
  return sections_.count(section) != 0;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) != 0;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  if (it == sections_.end())
    throw ConfigError(origin_ + ": missing section [" + section + "]");
  const auto kit = it->second.find(key);
  if (kit == it->second.end())
    throw ConfigError(origin_ + ": [" + section + "] is missing key '" + key + "'");
  return kit->second;
}

std::string ConfigFile::get_string_or(const std::string& section, const std::string& key,
                                      const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

std::int64_t ConfigFile::get_int(const std::string& section, const std::string& key) const {
  const std::string text = get_string(section, key);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": [" + section + "] " + key + " = '" + text +
                      "' is not an integer");
  }
}

std::int64_t ConfigFile::get_int_or(const std::string& section, const std::string& key,
                                    std::int64_t fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

double ConfigFile::get_real(const std::string& section, const std::string& key) const {
  const std::string text = get_string(section, key);
  const auto v = parse_real(text);
  if (!v)
    throw ConfigError(origin_ + ": [" + section + "] " + key + " = '" + text +
                      "' is not a number");
  return *v;
}

double ConfigFile::get_real_or(const std::string& section, const std::string& key,
                               double fallback) const {
  return has(section, key) ? get_real(section, key) : fallback;
}

bool ConfigFile::get_bool_or(const std::string& section, const std::string& key,
                             bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string text = get_string(section, key);
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw ConfigError(origin_ + ": [" + section + "] " + key + " = '" + text +
                    "' is not a boolean");
}

std::vector<std::string> ConfigFile::get_string_list(const std::string& section,
                                                     const std::string& key) const {
  const std::string text = get_string(section, key);
  std::vector<std::string> items;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    const std::string trimmed = trim(item);
    if (trimmed.empty())
      throw ConfigError(origin_ + ": [" + section + "] " + key + " has an empty list entry");
    items.push_back(trimmed);
  }
  if (items.empty())
    throw ConfigError(origin_ + ": [" + section + "] " + key + " is an empty list");
  return items;
}

std::vector<std::int64_t> ConfigFile::get_int_list(const std::string& section,
                                                   const std::string& key) const {
  std::vector<std::int64_t> values;
  for (const std::string& item : get_string_list(section, key)) {
    try {
      std::size_t used = 0;
      values.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": [" + section + "] " + key + " entry '" + item +
                        "' is not an integer");
    }
  }
  return values;
}

std::vector<std::string> ConfigFile::sections_with_prefix(const std::string& prefix) const {
  std::vector<std::string> names;
  for (const std::string& name : section_order_)
    if (name.rfind(prefix, 0) == 0) names.push_back(name);
  return names;
}

std::vector<std::string> ConfigFile::keys_in(const std::string& section) const {
  const auto it = key_order_.find(section);
  return it == key_order_.end() ? std::vector<std::string>{} : it->second;
}

void ConfigFile::expect_keys(const std::string& section,
                             const std::vector<std::string>& allowed) const {
  for (const std::string& key : keys_in(section))
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(origin_ + ": [" + section + "] has unknown key '" + key + "'");
}

}  // namespace fedboost::cli
