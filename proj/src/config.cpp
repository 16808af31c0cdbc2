#include "dimer/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dimer/errors.hpp"

namespace dimer {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Accepts plain numbers plus "pi", "-pi/2", "pi/4" and the like.
double to_double(const std::string& key, const std::string& text) {
  std::string s = trim(text);
  double sign = 1.0;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    if (s[0] == '-') sign = -1.0;
    s.erase(0, 1);
  }
  if (s.rfind("pi", 0) == 0) {
    double v = std::numbers::pi;
    std::string rest = s.substr(2);
    if (!rest.empty()) {
      if (rest[0] != '/') throw ConfigError(key + ": cannot parse '" + text + "'");
      v /= to_double(key, rest.substr(1));
    }
    return sign * v;
  }
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return sign * v;
}

int to_int(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 2e9) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return static_cast<int>(v);
}

}  // namespace

RunConfig RunConfig::parse(std::istream& is, const std::string& origin) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse(in, path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

void RunConfig::set_default(const std::string& key, const std::string& value) {
  values_.try_emplace(key, value);
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) != 0; }

std::string RunConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  return to_double(key, get_string(key));
}

int RunConfig::get_int(const std::string& key) const { return to_int(key, get_string(key)); }

std::size_t RunConfig::get_size(const std::string& key) const {
  const int v = get_int(key);
  if (v < 0) throw ConfigError(key + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(get_string(key))) out.push_back(to_double(key, item));
  return out;
}

std::vector<int> RunConfig::get_ints(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : split_list(get_string(key))) out.push_back(to_int(key, item));
  return out;
}

void RunConfig::check_known(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

void RunConfig::write(std::ostream& os) const {
  for (const auto& [key, value] : values_) os << key << " = " << value << '\n';
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  write(out);
}

}  // namespace dimer
