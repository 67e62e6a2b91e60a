#pragma once

// Experiment configuration: one JSON document with keys `map`, `potential`,
// `command_params`, `output_dir`, `seed`. Validation happens before any
// computation; every error names a line of the source text.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "../maps.hpp"
#include "../potentials.hpp"

namespace thermo::io {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, int line, const std::string& msg)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

using json = nlohmann::json;

struct MapSpec {
  std::string kind;  // full_linear | pw_linear | logistic4
  int branches = 2;
  double lo = 0.0, hi = 1.0;
  std::vector<double> breakpoints, slopes, intercepts;

  IntervalMap build() const {
    if (kind == "full_linear") return IntervalMap::full_linear(branches, lo, hi);
    if (kind == "logistic4") return IntervalMap::logistic4();
    return IntervalMap::pw_linear(breakpoints, slopes, intercepts);
  }
};

struct PotentialSpec {
  std::string kind;  // constant | branch_pw_constant | cosine_series | pw_linear
  std::vector<double> values, coefficients;
  std::vector<double> seg_x, seg_v;
  std::optional<double> alpha;

  Potential build(const IntervalMap& map) const {
    Potential p = Potential::constant(0.0);
    if (kind == "constant") p = Potential::constant(values.at(0));
    else if (kind == "branch_pw_constant") p = Potential::branch_constant(map, values);
    else if (kind == "cosine_series") p = Potential::cosine_series(coefficients, map.lo(), map.hi());
    else p = Potential::piecewise_linear(seg_x, seg_v);
    return alpha ? p.with_holder_exponent(*alpha) : p;
  }
};

struct ExperimentConfig {
  std::string path;
  std::string text;
  std::optional<MapSpec> map;
  std::optional<PotentialSpec> potential;
  json params = json::object();
  std::string output_dir;
  std::uint64_t seed = 1;

  // Line of the first occurrence of "key" (the last dotted component).
  int line_of(const std::string& key) const {
    const std::string k = key.substr(key.rfind('.') == std::string::npos ? 0 : key.rfind('.') + 1);
    const auto pos = text.find("\"" + k + "\"");
    if (pos == std::string::npos) return 1;
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
  }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(path, key.empty() ? 1 : line_of(key), msg);
  }

  double num(const std::string& key, double def) const {
    if (!params.contains(key)) return def;
    if (!params[key].is_number()) fail(key, "command_params." + key + " must be a number");
    return params[key].get<double>();
  }
  int integer(const std::string& key, int def) const {
    if (!params.contains(key)) return def;
    if (!params[key].is_number_integer()) fail(key, "command_params." + key + " must be an integer");
    return params[key].get<int>();
  }
  std::string str(const std::string& key, const std::string& def) const {
    if (!params.contains(key)) return def;
    if (!params[key].is_string()) fail(key, "command_params." + key + " must be a string");
    return params[key].get<std::string>();
  }
  std::vector<int> int_list(const std::string& key, std::vector<int> def) const {
    if (!params.contains(key)) return def;
    const json& v = params[key];
    if (!v.is_array()) fail(key, "command_params." + key + " must be an array of integers");
    std::vector<int> out;
    for (const json& e : v) {
      if (!e.is_number_integer()) fail(key, "command_params." + key + " must be an array of integers");
      out.push_back(e.get<int>());
    }
    return out;
  }
  std::optional<PotentialSpec> potential_param(const std::string& key) const;
};

/// Recognised `command_params` keys; anything else is rejected.
inline const std::set<std::string>& known_params() {
  static const std::set<std::string> k{
      "x0",       "n_min",      "n_max",       "sep_n",       "sep_eps",  "sep_grid",
      "hyper_n",  "range_grid", "t_min",       "t_max",       "t_steps",  "chi",
      "bins",     "levels",     "tests",       "conformal_n", "schedule_length",
      "theta",    "tail_mode",  "corr_n",      "corr_grid",   "observable",
      "functions", "alpha",     "A",           "atoms",       "h",        "average_N"};
  return k;
}

namespace detail {

inline std::vector<double> number_array(const ExperimentConfig& c, const json& obj,
                                        const std::string& key, const std::string& ctx) {
  if (!obj.contains(key)) c.fail(ctx, ctx + ": missing required key '" + key + "'");
  const json& v = obj[key];
  if (!v.is_array()) c.fail(key, ctx + "." + key + " must be an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) c.fail(key, ctx + "." + key + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline void only_keys(const ExperimentConfig& c, const json& obj, const std::set<std::string>& allowed,
                      const std::string& ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) c.fail(it.key(), "unknown key '" + it.key() + "' in " + ctx);
}

inline MapSpec parse_map(const ExperimentConfig& c, const json& m) {
  if (!m.is_object()) c.fail("map", "map must be an object");
  if (!m.contains("kind") || !m["kind"].is_string()) c.fail("map", "map: missing required key 'kind'");
  MapSpec s;
  s.kind = m["kind"].get<std::string>();
  if (s.kind == "full_linear") {
    only_keys(c, m, {"kind", "branches", "lo", "hi"}, "map");
    if (!m.contains("branches") || !m["branches"].is_number_integer())
      c.fail("map", "map: full_linear requires integer 'branches'");
    s.branches = m["branches"].get<int>();
    if (s.branches < 2) c.fail("branches", "map.branches must be >= 2");
    for (const char* k : {"lo", "hi"})
      if (m.contains(k) && !m[k].is_number()) c.fail(k, std::string("map.") + k + " must be a number");
    if (m.contains("lo")) s.lo = m["lo"].get<double>();
    if (m.contains("hi")) s.hi = m["hi"].get<double>();
    if (!(s.hi > s.lo)) c.fail("map", "map: need lo < hi");
  } else if (s.kind == "pw_linear") {
    only_keys(c, m, {"kind", "breakpoints", "slopes", "intercepts"}, "map");
    s.breakpoints = number_array(c, m, "breakpoints", "map");
    s.slopes = number_array(c, m, "slopes", "map");
    s.intercepts = number_array(c, m, "intercepts", "map");
    if (s.breakpoints.size() < 3 || s.slopes.size() + 1 != s.breakpoints.size() ||
        s.intercepts.size() != s.slopes.size())
      c.fail("breakpoints", "map: need k+1 breakpoints and k slopes/intercepts, k >= 2");
  } else if (s.kind == "logistic4") {
    only_keys(c, m, {"kind"}, "map");
  } else {
    c.fail("kind", "map.kind must be full_linear, pw_linear or logistic4");
  }
  return s;
}

inline PotentialSpec parse_potential(const ExperimentConfig& c, const json& p, const std::string& ctx) {
  if (!p.is_object()) c.fail(ctx, ctx + " must be an object");
  if (!p.contains("kind") || !p["kind"].is_string()) c.fail(ctx, ctx + ": missing required key 'kind'");
  PotentialSpec s;
  s.kind = p["kind"].get<std::string>();
  if (p.contains("alpha")) {
    if (!p["alpha"].is_number()) c.fail("alpha", ctx + ".alpha must be a number");
    s.alpha = p["alpha"].get<double>();
    if (!(*s.alpha > 0.0 && *s.alpha <= 1.0)) c.fail("alpha", ctx + ".alpha must be in (0, 1]");
  }
  if (s.kind == "constant" || s.kind == "branch_pw_constant") {
    only_keys(c, p, {"kind", "values", "alpha"}, ctx);
    s.values = number_array(c, p, "values", ctx);
    if (s.values.empty()) c.fail("values", ctx + ".values must not be empty");
    if (s.kind == "constant" && s.values.size() != 1) c.fail("values", ctx + ": constant takes one value");
  } else if (s.kind == "cosine_series") {
    only_keys(c, p, {"kind", "coefficients", "alpha"}, ctx);
    s.coefficients = number_array(c, p, "coefficients", ctx);
    if (s.coefficients.empty()) c.fail("coefficients", ctx + ".coefficients must not be empty");
  } else if (s.kind == "pw_linear") {
    only_keys(c, p, {"kind", "segments", "alpha"}, ctx);
    if (!p.contains("segments") || !p["segments"].is_array())
      c.fail(ctx, ctx + ": missing required key 'segments' (array of [x, value])");
    for (const json& e : p["segments"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        c.fail("segments", ctx + ".segments entries must be [x, value]");
      s.seg_x.push_back(e[0].get<double>());
      s.seg_v.push_back(e[1].get<double>());
    }
    if (s.seg_x.size() < 2) c.fail("segments", ctx + ".segments needs at least two nodes");
  } else {
    c.fail("kind", ctx + ".kind must be constant, branch_pw_constant, cosine_series or pw_linear");
  }
  return s;
}

}  // namespace detail

inline std::optional<PotentialSpec> ExperimentConfig::potential_param(const std::string& key) const {
  if (!params.contains(key)) return std::nullopt;
  return detail::parse_potential(*this, params[key], "command_params." + key);
}

/// Parses and validates. `map` and `potential` are required unless
/// `needs_model` is false (the appendix command builds its own).
inline ExperimentConfig parse_config(const std::string& text, const std::string& path,
                                     bool needs_model = true) {
  ExperimentConfig c;
  c.path = path;
  c.text = text;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n'));
    std::string what = e.what();
    throw ConfigError(path, line, "malformed JSON: " + what);
  }
  if (!doc.is_object()) throw ConfigError(path, 1, "top level must be an object");
  detail::only_keys(c, doc, {"map", "potential", "command_params", "output_dir", "seed"}, "config");

  if (doc.contains("map")) c.map = detail::parse_map(c, doc["map"]);
  else if (needs_model) c.fail("", "missing required key 'map'");
  if (doc.contains("potential")) c.potential = detail::parse_potential(c, doc["potential"], "potential");
  else if (needs_model) c.fail("", "missing required key 'potential'");
  if (c.map) {
    try {
      require_valid(c.map->build());
    } catch (const DomainError& e) {
      c.fail("map", e.what());
    }
  }
  if (c.map && c.potential && c.potential->kind == "branch_pw_constant") {
    const auto nb = c.map->build().branch_count();
    if (c.potential->values.size() != nb)
      c.fail("values", "potential.values must have one entry per branch (" + std::to_string(nb) + ")");
  }

  if (!doc.contains("output_dir") || !doc["output_dir"].is_string())
    c.fail(doc.contains("output_dir") ? "output_dir" : "", "missing required string key 'output_dir'");
  c.output_dir = doc["output_dir"].get<std::string>();

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) c.fail("seed", "seed must be a nonnegative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("command_params")) {
    if (!doc["command_params"].is_object()) c.fail("command_params", "command_params must be an object");
    c.params = doc["command_params"];
    detail::only_keys(c, c.params, known_params(), "command_params");
    c.potential_param("chi");
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path, bool needs_model = true) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, 1, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path, needs_model);
}

}  // namespace thermo::io
