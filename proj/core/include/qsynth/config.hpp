#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsynth {

// Config parse/validation failure; carries the offending line when known.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg, int line_no = 0)
      : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg
                                       : msg),
        line(line_no) {}
  int line = 0;
};

// Line-oriented "key = value" text with [section] headers and '#' comments.
// Keys are tracked so a loader can reject unknown entries with their line
// numbers.
class ConfigFile {
 public:
  static ConfigFile parse_text(const std::string& text);
  static ConfigFile parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  long get_long(const std::string& section, const std::string& key, long fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  // Comma-separated integer list.
  std::vector<int> get_int_list(const std::string& section, const std::string& key,
                                const std::vector<int>& fallback) const;

  // Throws ConfigError naming every key that was never read.
  void ensure_all_consumed() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
  };
  const Entry* find(const std::string& section, const std::string& key) const;

  std::map<std::string, std::map<std::string, Entry>> sections_;
};

}  // namespace qsynth
