#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmsrec {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LineageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sectioned key=value configuration. Lookup precedence: programmatic
// overrides (CLI flags) > file > caller default. Keys are "section.key".
// ${VAR} environment interpolation is applied only to *api_key* entries.
class Config {
 public:
  Config() = default;

  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& def = "") const;
  int get_int(const std::string& key, int def) const;
  double get_double(const std::string& key, double def) const;
  bool get_bool(const std::string& key, bool def) const;
  uint64_t get_u64(const std::string& key, uint64_t def) const;
  std::vector<double> get_doubles(const std::string& key) const;  // comma separated

  // Keys under "<section>." (by full key), merged file+overrides.
  std::map<std::string, std::string> section(const std::string& section) const;

 private:
  std::map<std::string, std::string> file_;
  std::map<std::string, std::string> overrides_;
  std::string resolve(const std::string& key, const std::string& raw) const;
};

}  // namespace dmsrec
