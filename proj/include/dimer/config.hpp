#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace dimer {

/// Flat key = value configuration. Lines starting with '#' are comments.
/// Later assignments win, so command-line overrides are applied with set().
class RunConfig {
 public:
  static RunConfig parse(std::istream& is, const std::string& origin = "<stream>");
  static RunConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  /// Sets the key only when it is missing.
  void set_default(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  /// Comma-separated list.
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;

  /// Throws ConfigError naming any key outside `known`.
  void check_known(const std::vector<std::string>& known) const;

  /// Sorted key = value lines, parseable by parse().
  void write(std::ostream& os) const;
  void save(const std::filesystem::path& path) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace dimer
