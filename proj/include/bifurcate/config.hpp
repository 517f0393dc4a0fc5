#pragma once

// Run configuration: a JSON document with a fixed key set, plus the
// per-problem defaults used when a key is absent.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "continuation.hpp"
#include "core.hpp"
#include "detect.hpp"
#include "diagram.hpp"
#include "io.hpp"
#include "problems.hpp"

namespace bifurcate {

struct RunConfig {
  std::string problem;
  int n = 0;  // grid nodes per axis; 0 = problem default
  NewtonConfig newton;
  DeflationConfig deflation;
  DeflationConfig discovery = DeflationConfig::discovery();
  ContinuationConfig continuation = ContinuationConfig::with_step(0.01);
  std::string path;                  // e.g. "lambda_2=1,lambda_3=0"
  std::optional<PathFamily> family;  // replaces `path` when set
  bool family_bounds_set = false;
  std::optional<std::vector<double>> start;
  std::vector<Interval> bounds;  // diagram stop box
  int max_steps = 20000;
  ZigzagConfig zigzag;
  bool zigzag_bounds_set = false;
  bool zigzag_direction_set = false;
  std::vector<double> lambda3;
  std::string output_dir = "out";
  bool save_states = false;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <class T>
T get(const nlohmann::json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

inline std::vector<Interval> parse_bounds(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of [lo, hi] pairs");
  std::vector<Interval> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      throw ConfigError(where + ": expected [lo, hi]");
    Interval iv{e[0].get<double>(), e[1].get<double>()};
    if (!(iv.lo <= iv.hi)) throw ConfigError(where + ": need lo <= hi");
    out.push_back(iv);
  }
  return out;
}

inline void parse_deflation(const nlohmann::json& j, DeflationConfig& d, const std::string& where) {
  check_keys(j, {"power", "shift", "max_solutions", "max_iter"}, where);
  if (j.contains("power")) d.power = get<double>(j, "power", where);
  if (j.contains("shift")) d.shift = get<double>(j, "shift", where);
  if (j.contains("max_solutions")) d.max_solutions = get<int>(j, "max_solutions", where);
  if (j.contains("max_iter")) d.max_iter = get<int>(j, "max_iter", where);
}

}  // namespace detail

/// "a:b:m" -> m equally spaced values from a to b inclusive.
inline std::vector<double> parse_grid(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.size() != 3) throw ConfigError("grid spec must be a:b:m, got '" + spec + "'");
  const double a = parse_double(parts[0]), b = parse_double(parts[1]);
  const int m = parse_int(parts[2]);
  if (m < 1) throw ConfigError("grid spec: m must be >= 1");
  if (m == 1) return {a};
  std::vector<double> out;
  for (int i = 0; i < m; ++i) out.push_back(a + (b - a) * i / (m - 1));
  return out;
}

/// "lambda_2=1,lambda_3=0" -> (index, value) pairs.
inline std::vector<std::pair<std::size_t, double>> parse_path_spec(const std::string& spec,
                                                                    const std::vector<std::string>& names) {
  std::vector<std::pair<std::size_t, double>> out;
  if (spec.empty()) return out;
  for (const auto& item : split(spec, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("path spec item '" + item + "' is not name=value");
    const std::string name = item.substr(0, eq);
    std::size_t idx = names.size();
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) idx = i;
    if (idx == names.size()) throw ConfigError("path spec: unknown parameter '" + name + "'");
    for (const auto& [i, v] : out)
      if (i == idx) throw ConfigError("path spec: '" + name + "' given twice");
    out.emplace_back(idx, parse_double(item.substr(eq + 1)));
  }
  return out;
}

inline RunConfig parse_run_config(const nlohmann::json& j) {
  using detail::get;
  RunConfig rc;
  detail::check_keys(j,
                     {"problem", "n", "newton", "deflation", "discovery", "continuation", "path", "start", "bounds",
                      "max_steps", "zigzag", "lambda3", "output_dir", "save_states"},
                     "config");
  if (j.contains("problem")) rc.problem = get<std::string>(j, "problem", "config");
  if (j.contains("n")) rc.n = get<int>(j, "n", "config");
  if (j.contains("newton")) {
    const auto& o = j["newton"];
    detail::check_keys(o, {"tol", "max_iter"}, "newton");
    if (o.contains("tol")) rc.newton.tol = get<double>(o, "tol", "newton");
    if (o.contains("max_iter")) rc.newton.max_iter = get<int>(o, "max_iter", "newton");
  }
  if (j.contains("deflation")) detail::parse_deflation(j["deflation"], rc.deflation, "deflation");
  if (j.contains("discovery")) detail::parse_deflation(j["discovery"], rc.discovery, "discovery");
  if (j.contains("continuation")) {
    const auto& o = j["continuation"];
    detail::check_keys(o, {"ds", "ds_min", "direction"}, "continuation");
    if (o.contains("ds")) rc.continuation = ContinuationConfig::with_step(get<double>(o, "ds", "continuation"));
    if (o.contains("ds_min")) rc.continuation.ds_min = get<double>(o, "ds_min", "continuation");
    if (o.contains("direction")) rc.continuation.direction = get<int>(o, "direction", "continuation");
  }
  if (j.contains("path")) {
    const auto& o = j["path"];
    if (o.is_string()) {
      rc.path = o.get<std::string>();
    } else {
      detail::check_keys(o, {"family", "n", "bounds"}, "path");
      PathFamily fam;
      fam.kind = family_kind_from_string(get<std::string>(o, "family", "path"));
      if (o.contains("n")) fam.n = get<int>(o, "n", "path");
      if (o.contains("bounds")) {
        const auto b = get<std::vector<double>>(o, "bounds", "path");
        if (b.size() != 4) throw ConfigError("path.bounds must be [a, b, c, d]");
        fam.bounds = {b[0], b[1], b[2], b[3]};
        rc.family_bounds_set = true;
      }
      rc.family = fam;
    }
  }
  if (j.contains("start")) rc.start = get<std::vector<double>>(j, "start", "config");
  if (j.contains("bounds")) rc.bounds = detail::parse_bounds(j["bounds"], "bounds");
  if (j.contains("max_steps")) rc.max_steps = get<int>(j, "max_steps", "config");
  if (j.contains("zigzag")) {
    const auto& o = j["zigzag"];
    detail::check_keys(o, {"theta", "k", "ds", "n_max", "max_steps", "direction", "bounds"}, "zigzag");
    if (o.contains("theta")) rc.zigzag.theta = ZigzagConfig::fold_angle(get<double>(o, "theta", "zigzag")).first;
    if (o.contains("k")) rc.zigzag.k = get<int>(o, "k", "zigzag");
    if (o.contains("ds")) rc.zigzag.ds = get<double>(o, "ds", "zigzag");
    if (o.contains("n_max")) rc.zigzag.n_max = get<int>(o, "n_max", "zigzag");
    if (o.contains("max_steps")) rc.zigzag.max_steps = get<int>(o, "max_steps", "zigzag");
    if (o.contains("direction")) {
      rc.zigzag.direction = get<int>(o, "direction", "zigzag");
      rc.zigzag_direction_set = true;
    }
    if (o.contains("bounds")) {
      rc.zigzag.lambda_bounds = detail::parse_bounds(o["bounds"], "zigzag.bounds");
      rc.zigzag_bounds_set = true;
    }
  }
  if (j.contains("lambda3")) {
    const auto& o = j["lambda3"];
    rc.lambda3 = o.is_string() ? parse_grid(o.get<std::string>()) : get<std::vector<double>>(j, "lambda3", "config");
  }
  if (j.contains("output_dir")) rc.output_dir = get<std::string>(j, "output_dir", "config");
  if (j.contains("save_states")) rc.save_states = get<bool>(j, "save_states", "config");
  return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(j);
}

inline void validate(const RunConfig& rc) {
  if (rc.problem.empty()) throw ConfigError("no problem given");
  rc.newton.validate();
  rc.deflation.validate();
  rc.discovery.validate();
  rc.continuation.validate();
  rc.zigzag.validate();
  if (rc.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (rc.n < 0) throw ConfigError("n must be >= 0");
}

// ---- per-problem defaults ----

/// Diagram start: the problem defaults with lambda_1 near the lower end of its range.
inline Vector default_diagram_start(const Problem& p) {
  Vector l = p.default_params();
  l[0] = p.id().rfind("bratu", 0) == 0 ? 0.1 : 0.0;
  return l;
}

/// Family bounds (a, b, c, d) whose members cross the problem's first
/// bifurcation curve inside the parameter box.
inline FamilyBounds default_family_bounds(const Problem& p) {
  const std::string id = p.id();
  if (id == "bratu1d") return {2.0, 4.0, 0.5, 1.0};
  if (id == "bratu2d") return {4.0, 7.0, 0.5, 1.0};
  if (id == "allencahn1d" || id == "allencahn2d") return {4.0, 8.0, 2.0, 4.0};
  return {5.0, 8.0, 0.5, 1.5};
}

/// Zigzag start, walking box and initial direction for a curve run.
struct CurveSetup {
  Vector start;
  std::vector<Interval> box;
  int direction = +1;
};

inline CurveSetup default_curve_setup(const Problem& p) {
  Vector l = p.default_params();
  std::vector<Interval> box = p.param_bounds();
  const std::string id = p.id();
  if (id == "bratu1d" || id == "bratu2d") {
    // start beyond the fold and walk back: both solutions appear together there
    l[0] = box[0].hi - 0.1, l[1] = 0.5;
    box[1] = {0.5, 1.0};
  } else if (id == "allencahn1d" || id == "allencahn2d") {
    l[0] = 0.5, l[1] = 1.0;
    box[1] = {1.0, 2.0};
  } else {
    l[0] = 3.0, l[1] = 0.0;
    box[1] = {0.0, 2.0};
  }
  return {l, box, p.id().rfind("bratu", 0) == 0 ? -1 : +1};
}

}  // namespace bifurcate
