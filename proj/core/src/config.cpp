#include "noma/config.hpp"

#include <fstream>
#include <sstream>

#include "noma/errors.hpp"

namespace noma {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw DataError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(t.substr(0, eq));
    if (key.empty())
      throw DataError("config line " + std::to_string(lineno) + ": empty key");
    cfg.entries_[key] = trim(t.substr(eq + 1));
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

void Config::apply_overrides(const std::vector<std::string>& overrides) {
  for (const auto& ov : overrides) {
    std::size_t eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw UsageError("override must be key=value, got: " + ov);
    entries_[trim(ov.substr(0, eq))] = trim(ov.substr(eq + 1));
  }
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::optional<std::string> Config::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto v = get(key);
  return v ? *v : fallback;
}

int Config::get_int(const std::string& key, int fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t pos = 0;
    int r = std::stoi(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw UsageError("config key '" + key + "': expected integer, got '" + *v + "'");
  }
}

float Config::get_float(const std::string& key, float fallback) const {
  return static_cast<float>(get_double(key, fallback));
}

double Config::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t pos = 0;
    double r = std::stod(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw UsageError("config key '" + key + "': expected number, got '" + *v + "'");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "on" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "off" || *v == "no") return false;
  throw UsageError("config key '" + key + "': expected boolean, got '" + *v + "'");
}

std::vector<float> Config::get_float_list(const std::string& key,
                                          const std::vector<float>& fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<float> out;
  std::istringstream in(*v);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(std::stof(tok));
    } catch (...) {
      throw UsageError("config key '" + key + "': expected comma-separated floats");
    }
  }
  if (out.empty())
    throw UsageError("config key '" + key + "': empty list");
  return out;
}

}  // namespace noma
