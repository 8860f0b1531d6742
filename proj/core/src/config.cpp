#include "qsynth/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace qsynth {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_text(const std::string& text) {
  ConfigFile cfg;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no);
    if (section.empty()) throw ConfigError("key outside any [section]", line_no);
    auto [it, inserted] = cfg.sections_[section].emplace(key, Entry{value, line_no});
    if (!inserted) throw ConfigError("duplicate key '" + key + "'", line_no);
  }
  return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_text(buf.str());
}

const ConfigFile::Entry* ConfigFile::find(const std::string& section,
                                          const std::string& key) const {
  const auto sit = sections_.find(section);
  if (sit == sections_.end()) return nullptr;
  const auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return nullptr;
  kit->second.consumed = true;
  return &kit->second;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  const Entry* e = find(section, key);
  return e ? e->value : fallback;
}

long ConfigFile::get_long(const std::string& section, const std::string& key,
                          long fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  char* end = nullptr;
  const long v = std::strtol(e->value.c_str(), &end, 10);
  if (end == e->value.c_str() || *end != '\0')
    throw ConfigError("expected integer for '" + key + "'", e->line);
  return v;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  char* end = nullptr;
  const double v = std::strtod(e->value.c_str(), &end);
  if (end == e->value.c_str() || *end != '\0')
    throw ConfigError("expected number for '" + key + "'", e->line);
  return v;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  std::string v = e->value;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected boolean for '" + key + "'", e->line);
}

std::uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key,
                                  std::uint64_t fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(e->value.c_str(), &end, 10);
  if (end == e->value.c_str() || *end != '\0')
    throw ConfigError("expected unsigned integer for '" + key + "'", e->line);
  return v;
}

std::vector<int> ConfigFile::get_int_list(const std::string& section,
                                          const std::string& key,
                                          const std::vector<int>& fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  std::vector<int> values;
  std::istringstream is(e->value);
  std::string token;
  while (std::getline(is, token, ',')) {
    token = trim(token);
    if (token.empty()) throw ConfigError("empty list element for '" + key + "'", e->line);
    char* end = nullptr;
    const long v = std::strtol(token.c_str(), &end, 10);
    if (end == token.c_str() || *end != '\0')
      throw ConfigError("expected integer list for '" + key + "'", e->line);
    values.push_back(static_cast<int>(v));
  }
  if (values.empty()) throw ConfigError("empty list for '" + key + "'", e->line);
  return values;
}

void ConfigFile::ensure_all_consumed() const {
  std::string complaints;
  for (const auto& [section, entries] : sections_) {
    for (const auto& [key, entry] : entries) {
      if (!entry.consumed) {
        if (!complaints.empty()) complaints += "; ";
        complaints += "line " + std::to_string(entry.line) + ": unknown key [" +
                      section + "] " + key;
      }
    }
  }
  if (!complaints.empty()) throw ConfigError(complaints);
}

}  // namespace qsynth
