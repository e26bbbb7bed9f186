#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace noma {

// Flat key=value store. Lines starting with '#' and blank lines are ignored;
// whitespace around keys and values is trimmed.
class Config {
public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  // "key=value" strings, e.g. from repeated --set flags. Malformed entries
  // raise UsageError.
  void apply_overrides(const std::vector<std::string>& overrides);

  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  float get_float(const std::string& key, float fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Comma-separated floats.
  std::vector<float> get_float_list(const std::string& key,
                                    const std::vector<float>& fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

private:
  std::map<std::string, std::string> entries_;
};

}  // namespace noma
