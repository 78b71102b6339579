#include "kv_config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

namespace dmsrec {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line, section;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty section");
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    file_[section.empty() ? key : section + "." + key] = value;
  }
}

void Config::set(const std::string& key, const std::string& value) { overrides_[key] = value; }

bool Config::has(const std::string& key) const {
  return overrides_.count(key) != 0 || file_.count(key) != 0;
}

std::string Config::resolve(const std::string& key, const std::string& raw) const {
  // Secrets only: "${VAR}" in api_key keys pulls from the environment.
  if (key.find("api_key") == std::string::npos) return raw;
  if (raw.size() >= 3 && raw.rfind("${", 0) == 0 && raw.back() == '}') {
    std::string var = raw.substr(2, raw.size() - 3);
    const char* v = std::getenv(var.c_str());
    return v ? v : "";
  }
  return raw;
}

std::string Config::get(const std::string& key, const std::string& def) const {
  auto it = overrides_.find(key);
  if (it != overrides_.end()) return resolve(key, it->second);
  it = file_.find(key);
  if (it != file_.end()) return resolve(key, it->second);
  return def;
}

int Config::get_int(const std::string& key, int def) const {
  if (!has(key)) return def;
  std::string v = get(key);
  try {
    size_t pos = 0;
    int out = std::stoi(v, &pos);
    if (pos != v.size()) throw ConfigError("");
    return out;
  } catch (...) {
    throw ConfigError("config: " + key + " is not an integer: '" + v + "'");
  }
}

double Config::get_double(const std::string& key, double def) const {
  if (!has(key)) return def;
  std::string v = get(key);
  try {
    size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw ConfigError("");
    return out;
  } catch (...) {
    throw ConfigError("config: " + key + " is not a number: '" + v + "'");
  }
}

bool Config::get_bool(const std::string& key, bool def) const {
  if (!has(key)) return def;
  std::string v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: " + key + " is not a boolean: '" + v + "'");
}

uint64_t Config::get_u64(const std::string& key, uint64_t def) const {
  if (!has(key)) return def;
  std::string v = get(key);
  try {
    size_t pos = 0;
    uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw ConfigError("");
    return out;
  } catch (...) {
    throw ConfigError("config: " + key + " is not an unsigned integer: '" + v + "'");
  }
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  std::string v = get(key);
  std::string cur;
  auto flush = [&]() {
    std::string t = trim(cur);
    cur.clear();
    if (t.empty()) return;
    try {
      out.push_back(std::stod(t));
    } catch (...) {
      throw ConfigError("config: " + key + " has a non-numeric entry: '" + t + "'");
    }
  };
  for (char c : v) {
    if (c == ',')
      flush();
    else
      cur.push_back(c);
  }
  flush();
  return out;
}

std::map<std::string, std::string> Config::section(const std::string& section) const {
  std::map<std::string, std::string> out;
  std::string prefix = section + ".";
  for (const auto& [k, v] : file_)
    if (k.rfind(prefix, 0) == 0) out[k] = resolve(k, v);
  for (const auto& [k, v] : overrides_)
    if (k.rfind(prefix, 0) == 0) out[k] = resolve(k, v);
  return out;
}

}  // namespace dmsrec
