#pragma once

// Plain-text output formats: branches.csv, events.json, curve.csv,
// surface.csv and state snapshots, with matching readers.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core.hpp"
#include "detect.hpp"
#include "diagram.hpp"

namespace bifurcate {

/// 17 significant digits; round-trips every double.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

inline int parse_int(const std::string& s) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("not an integer: '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError("not an integer: '" + s + "'");
  return v;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) lines.push_back(line);
  return lines;
}

// ---- branches.csv ----

struct BranchRow {
  int branch_id = 0;
  int step = 0;
  double s = 0.0;
  std::vector<double> lambda;
  double q = 0.0;
};

inline std::string branches_header(const std::vector<std::string>& names) {
  std::string h = "branch_id,step,s";
  for (const auto& n : names) h += "," + n;
  return h + ",q";
}

inline void write_branches_csv(const BifurcationDiagram& dg, const std::vector<std::string>& names,
                               const std::filesystem::path& path) {
  auto f = open_out(path);
  f << branches_header(names) << '\n';
  for (const auto& b : dg.branches)
    for (const auto& p : b.points) {
      f << b.id << ',' << p.step << ',' << format_double(p.point.s);
      for (Eigen::Index i = 0; i < p.point.lambda.values().size(); ++i) f << ',' << format_double(p.point.lambda.values()[i]);
      f << ',' << format_double(p.q) << '\n';
    }
}

inline std::vector<BranchRow> read_branches_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ConfigError("branches.csv: missing header");
  const auto head = split(lines[0], ',');
  if (head.size() < 5 || head[0] != "branch_id" || head[1] != "step" || head[2] != "s" || head.back() != "q")
    throw ConfigError("branches.csv: bad header");
  const std::size_t p = head.size() - 4;
  std::vector<BranchRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = split(lines[i], ',');
    if (c.size() != head.size()) throw ConfigError("branches.csv: bad row " + std::to_string(i));
    BranchRow r;
    r.branch_id = parse_int(c[0]);
    r.step = parse_int(c[1]);
    r.s = parse_double(c[2]);
    for (std::size_t j = 0; j < p; ++j) r.lambda.push_back(parse_double(c[3 + j]));
    r.q = parse_double(c.back());
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---- events.json ----

struct EventRecord {
  int id = 0;
  std::string kind;
  std::vector<double> bracket_lo;
  std::vector<double> bracket_hi;
  std::vector<int> branch_ids;
  std::optional<std::vector<double>> estimate;
};

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline nlohmann::ordered_json events_to_json(const BifurcationDiagram& dg) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : dg.events) {
    nlohmann::ordered_json o;
    o["id"] = e.id;
    o["kind"] = to_string(e.kind);
    o["bracket_lo"] = to_std(e.bracket_lo.values());
    o["bracket_hi"] = to_std(e.bracket_hi.values());
    o["branch_ids"] = e.branch_ids;
    if (e.estimate) o["estimate"] = to_std(e.estimate->values());
    arr.push_back(std::move(o));
  }
  return arr;
}

inline void write_events_json(const BifurcationDiagram& dg, const std::filesystem::path& path) {
  auto f = open_out(path);
  f << events_to_json(dg).dump(2) << '\n';
}

inline std::vector<EventRecord> read_events_json(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  const auto j = nlohmann::json::parse(f);
  std::vector<EventRecord> out;
  for (const auto& o : j) {
    EventRecord r;
    r.id = o.at("id").get<int>();
    r.kind = o.at("kind").get<std::string>();
    r.bracket_lo = o.at("bracket_lo").get<std::vector<double>>();
    r.bracket_hi = o.at("bracket_hi").get<std::vector<double>>();
    r.branch_ids = o.at("branch_ids").get<std::vector<int>>();
    if (o.contains("estimate")) r.estimate = o.at("estimate").get<std::vector<double>>();
    out.push_back(std::move(r));
  }
  return out;
}

// ---- curve.csv / surface.csv ----

struct CurveRow {
  double lambda_3 = 0.0;  // surface.csv only
  int crossing_id = 0;
  double mid1 = 0.0, mid2 = 0.0, lo1 = 0.0, lo2 = 0.0, hi1 = 0.0, hi2 = 0.0;
  int label_lo = 0, label_hi = 0;
};

inline constexpr const char* kCurveHeader =
    "crossing_id,lambda_1_mid,lambda_2_mid,lambda_1_lo,lambda_2_lo,lambda_1_hi,lambda_2_hi,label_lo,label_hi";

inline std::vector<CurveRow> curve_rows(const ZigzagTrace& tr, double lambda_3 = 0.0) {
  std::vector<CurveRow> rows;
  int id = 0;
  for (const auto& c : tr.crossings)
    rows.push_back({lambda_3, id++, c.midpoint[0], c.midpoint[1], c.bracket_lo[0], c.bracket_lo[1], c.bracket_hi[0],
                    c.bracket_hi[1], c.label_lo.solution_count, c.label_hi.solution_count});
  return rows;
}

inline void write_curve_row(std::ostream& f, const CurveRow& r) {
  f << r.crossing_id << ',' << format_double(r.mid1) << ',' << format_double(r.mid2) << ',' << format_double(r.lo1)
    << ',' << format_double(r.lo2) << ',' << format_double(r.hi1) << ',' << format_double(r.hi2) << ','
    << r.label_lo << ',' << r.label_hi << '\n';
}

inline void write_curve_csv(const ZigzagTrace& tr, const std::filesystem::path& path) {
  auto f = open_out(path);
  f << kCurveHeader << '\n';
  for (const auto& r : curve_rows(tr)) write_curve_row(f, r);
}

inline void write_surface_csv(const std::vector<SurfaceSlice>& slices, const std::filesystem::path& path) {
  auto f = open_out(path);
  f << "lambda_3," << kCurveHeader << '\n';
  for (const auto& sl : slices)
    for (const auto& r : curve_rows(sl.trace, sl.lambda3)) {
      f << format_double(sl.lambda3) << ',';
      write_curve_row(f, r);
    }
}

inline CurveRow parse_curve_fields(const std::vector<std::string>& c, std::size_t off) {
  CurveRow r;
  r.crossing_id = parse_int(c[off]);
  r.mid1 = parse_double(c[off + 1]);
  r.mid2 = parse_double(c[off + 2]);
  r.lo1 = parse_double(c[off + 3]);
  r.lo2 = parse_double(c[off + 4]);
  r.hi1 = parse_double(c[off + 5]);
  r.hi2 = parse_double(c[off + 6]);
  r.label_lo = parse_int(c[off + 7]);
  r.label_hi = parse_int(c[off + 8]);
  return r;
}

inline std::vector<CurveRow> read_curve_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != kCurveHeader) throw ConfigError("curve.csv: bad header");
  std::vector<CurveRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = split(lines[i], ',');
    if (c.size() != 9) throw ConfigError("curve.csv: bad row " + std::to_string(i));
    rows.push_back(parse_curve_fields(c, 0));
  }
  return rows;
}

inline std::vector<CurveRow> read_surface_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != std::string("lambda_3,") + kCurveHeader) throw ConfigError("surface.csv: bad header");
  std::vector<CurveRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = split(lines[i], ',');
    if (c.size() != 10) throw ConfigError("surface.csv: bad row " + std::to_string(i));
    CurveRow r = parse_curve_fields(c, 1);
    r.lambda_3 = parse_double(c[0]);
    rows.push_back(r);
  }
  return rows;
}

// ---- state snapshots ----

inline void write_state(const Vector& u, const std::filesystem::path& path) {
  auto f = open_out(path);
  for (Eigen::Index i = 0; i < u.size(); ++i) f << format_double(u[i]) << '\n';
}

inline Vector read_state(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  Vector u(static_cast<Eigen::Index>(lines.size()));
  for (std::size_t i = 0; i < lines.size(); ++i) u[static_cast<Eigen::Index>(i)] = parse_double(lines[i]);
  return u;
}

inline void write_states(const BifurcationDiagram& dg, const std::filesystem::path& dir) {
  for (const auto& b : dg.branches)
    for (const auto& p : b.points)
      write_state(p.point.u, dir / ("branch_" + std::to_string(b.id) + "_step_" + std::to_string(p.step) + ".csv"));
}

}  // namespace bifurcate
