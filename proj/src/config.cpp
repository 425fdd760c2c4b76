#include "fbh/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fbh/errors.hpp"

namespace fbh {

namespace {

const std::map<std::string, std::string>& default_entries() {
  static const std::map<std::string, std::string> defaults = {
      {"domain.kind", "interval"},
      {"domain.beta", "1.0"},
      {"domain.boundary_resolution", "4"},
      {"time.horizon", "0.5"},
      {"time.steps", "128"},
      {"noise.hurst", "0.75"},
      {"noise.s_cells", "2"},
      {"noise.seed", "12345"},
      {"alpha.kind", "one"},
      {"alpha.theta", "8.0"},
      {"alpha.tag", "a1p"},
      {"g.kind", "tanh"},
      {"g.param", "1.0"},
      {"solver.tol", "1e-8"},
      {"solver.max_iter", "40"},
      {"solver.lambda", "100.0"},
      {"solver.p", "2.0"},
      {"solver.mu", "0.75"},
      {"probe.t", "0.25"},
      {"probe.x", "0.5"},
      {"probe.replicas", "2000"},
      {"probe.interior_margin", "0.2"},
      {"density.samples", "20000"},
      {"density.bandwidth", "0.0"},
      {"output.dir", "out"},
      {"output.format", "csv"},
  };
  return defaults;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.kv = default_entries();
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (default_entries().find(key) == default_entries().end())
    throw ConfigError("unknown config key '" + key + "'");
  kv[key] = value;
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must have the form key=value: " + assignment);
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig c = defaults();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + " is not key = value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

std::string RunConfig::str(const std::string& key) const {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

double RunConfig::num(const std::string& key) const {
  const std::string v = str(key);
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: " + v);
  }
}

int RunConfig::integer(const std::string& key) const {
  const double x = num(key);
  if (x != std::floor(x)) throw ConfigError("config key '" + key + "' must be an integer");
  return static_cast<int>(x);
}

std::uint64_t RunConfig::uinteger(const std::string& key) const {
  const std::string v = str(key);
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not an unsigned integer: " + v);
  }
}

bool RunConfig::flag(const std::string& key) const {
  const std::string v = str(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "' is not a boolean: " + v);
}

DomainKind RunConfig::domain_kind() const {
  const std::string k = str("domain.kind");
  if (k == "interval") return DomainKind::Interval;
  if (k == "rectangle") return DomainKind::Rectangle;
  throw ConfigError("domain.kind must be interval or rectangle");
}

void RunConfig::validate() const {
  const double h = num("noise.hurst");
  if (!(h >= 0.5 && h < 1.0)) throw ConfigError("noise.hurst out of range [1/2, 1)");
  const double mu = num("solver.mu");
  if (!(mu > 0.5 && mu < 1.0)) throw ConfigError("solver.mu out of range (1/2, 1)");
  if (!(num("domain.beta") > 0.0)) throw ConfigError("domain.beta must be positive");
  if (!(num("time.horizon") > 0.0)) throw ConfigError("time.horizon must be positive");
  if (integer("time.steps") < 1) throw ConfigError("time.steps must be >= 1");
  if (integer("noise.s_cells") < 1) throw ConfigError("noise.s_cells must be >= 1");
  if (!(num("solver.tol") > 0.0)) throw ConfigError("solver.tol must be positive");
  if (!(num("solver.p") >= 2.0)) throw ConfigError("solver.p must be >= 2");
  const std::string tag = str("alpha.tag");
  if (tag != "a1" && tag != "a1p") throw ConfigError("alpha.tag must be a1 or a1p");
  if (tag == "a1p") {
    const int d = domain_kind() == DomainKind::Interval ? 1 : 2;
    const double need = (d - 1.0) / (2.0 * h - 1.0);
    if (!(num("alpha.theta") > need))
      throw ConfigError("alpha.theta must exceed (d-1)/(2H-1) under the a1' tag");
  }
  domain_kind();
}

std::string RunConfig::canonical_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
  return out.str();
}

}  // namespace fbh
