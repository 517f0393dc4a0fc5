// bifurcate: command-line front end.
//   diagram  deflated continuation along one path or a path family
//   curve    zigzag detection of a bifurcation curve (two parameters)
//   surface  zigzag detection per lambda_3 slice (three parameters)
//   oracle   reference values from the eigenvalue and fold oracles
// Exit codes: 0 success (possibly with warnings), 1 configuration error,
// 2 no usable output.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <bifurcate/bifurcate.hpp>

namespace fs = std::filesystem;
using namespace bifurcate;

namespace {

struct Overrides {
  std::string config;
  std::string problem;
  std::string out;
  std::optional<int> grid;
  std::optional<double> ds;
  std::string start;
  std::string bounds;
  bool save_states = false;
  // diagram
  std::string path;
  std::string family;
  std::optional<int> family_n;
  std::string family_bounds;
  // curve / surface
  std::optional<double> theta;
  std::optional<int> k;
  std::optional<int> direction;
  std::string lambda3;
  // oracle
  std::string range;
  int count = 4;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) out.push_back(parse_double(item));
  return out;
}

/// "lo:hi,lo:hi,..."
std::vector<Interval> parse_interval_list(const std::string& s) {
  std::vector<Interval> out;
  for (const auto& item : split(s, ',')) {
    const auto p = split(item, ':');
    if (p.size() != 2) throw ConfigError("bounds item '" + item + "' is not lo:hi");
    Interval iv{parse_double(p[0]), parse_double(p[1])};
    if (!(iv.lo <= iv.hi)) throw ConfigError("bounds item '" + item + "' has lo > hi");
    out.push_back(iv);
  }
  return out;
}

RunConfig build_config(const Overrides& o, const std::string& command) {
  RunConfig rc = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (!o.problem.empty()) rc.problem = o.problem;
  if (!o.out.empty()) rc.output_dir = o.out;
  if (o.grid) rc.n = *o.grid;
  if (o.save_states) rc.save_states = true;
  if (!o.start.empty()) rc.start = parse_list(o.start);
  if (command == "diagram") {
    if (o.ds) rc.continuation = ContinuationConfig::with_step(*o.ds, rc.continuation.direction);
    if (!o.bounds.empty()) rc.bounds = parse_interval_list(o.bounds);
    if (!o.path.empty()) rc.path = o.path;
    if (!o.family.empty()) {
      PathFamily fam = rc.family.value_or(PathFamily{});
      fam.kind = family_kind_from_string(o.family);
      rc.family = fam;
    }
    if (o.family_n || !o.family_bounds.empty()) {
      if (!rc.family) throw ConfigError("--n and --family-bounds need --family");
      if (o.family_n) rc.family->n = *o.family_n;
      if (!o.family_bounds.empty()) {
        const auto b = parse_list(o.family_bounds);
        if (b.size() != 4) throw ConfigError("--family-bounds needs a,b,c,d");
        rc.family->bounds = {b[0], b[1], b[2], b[3]};
        rc.family_bounds_set = true;
      }
    }
  } else {
    if (o.ds) rc.zigzag.ds = *o.ds;
    if (!o.bounds.empty()) {
      rc.zigzag.lambda_bounds = parse_interval_list(o.bounds);
      rc.zigzag_bounds_set = true;
    }
    if (o.theta) rc.zigzag.theta = ZigzagConfig::fold_angle(*o.theta).first;
    if (o.k) rc.zigzag.k = *o.k;
    if (o.direction) {
      rc.zigzag.direction = *o.direction;
      rc.zigzag_direction_set = true;
    }
    if (!o.lambda3.empty()) rc.lambda3 = parse_grid(o.lambda3);
  }
  validate(rc);
  return rc;
}

ParamVec start_params(const Problem& p, const Vector& v) {
  if (static_cast<std::size_t>(v.size()) != p.param_count())
    throw ConfigError("start needs " + std::to_string(p.param_count()) + " values");
  return ParamVec(v, p.param_names());
}

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

DiagramConfig diagram_config(const RunConfig& rc) {
  DiagramConfig cfg;
  cfg.continuation = rc.continuation;
  cfg.deflation = rc.deflation;
  cfg.discovery = rc.discovery;
  cfg.newton = rc.newton;
  cfg.bounds = rc.bounds;
  cfg.max_steps = rc.max_steps;
  return cfg;
}

void write_diagram(const Problem& p, const BifurcationDiagram& dg, const fs::path& dir, bool save_states) {
  write_branches_csv(dg, p.param_names(), dir / "branches.csv");
  write_events_json(dg, dir / "events.json");
  if (save_states) write_states(dg, dir / "states");
}

void print_diagram(const BifurcationDiagram& dg, const std::string& indent = "") {
  std::cout << indent << "branches: " << dg.branches.size() << "\n";
  for (const auto& b : dg.branches)
    std::cout << indent << "  branch " << b.id << ": " << b.points.size() << " points, " << to_string(b.status) << "\n";
  std::cout << indent << "events: " << dg.events.size() << "\n";
  for (const auto& e : dg.events) {
    std::cout << indent << "  event " << e.id << " " << to_string(e.kind) << " lambda_1 in [" << format_double(e.bracket_lo[0])
              << ", " << format_double(e.bracket_hi[0]) << "] branches";
    for (int id : e.branch_ids) std::cout << " " << id;
    std::cout << "\n";
  }
}

int cmd_diagram(const RunConfig& rc) {
  const auto problem = make_problem(rc.problem, rc.n);
  const auto& p = *problem;
  const DiagramConfig cfg = diagram_config(rc);
  Vector start = rc.start ? to_vector(*rc.start) : default_diagram_start(p);
  start_params(p, start);
  const fs::path out = rc.output_dir;

  if (rc.family) {
    PathFamily fam = *rc.family;
    if (!rc.family_bounds_set) fam.bounds = default_family_bounds(p);
    const auto runs = run_diagram_family(p, fam, p.discovery_seed(), start, cfg);
    int written = 0;
    for (const auto& run : runs) {
      std::cout << run.label << ":\n";
      if (!run.diagram || run.diagram->branches.empty()) {
        std::cerr << "warning: " << run.label << ": " << run.error << "\n";
        continue;
      }
      write_diagram(p, *run.diagram, out / run.label, rc.save_states);
      print_diagram(*run.diagram, "  ");
      ++written;
    }
    if (written == 0) {
      std::cerr << "error: no family member produced a branch\n";
      return 2;
    }
    return 0;
  }

  const std::string spec = rc.path.empty() ? "lambda_2=" + format_double(start[1]) : rc.path;
  const auto fixed = parse_path_spec(spec, p.param_names());
  for (const auto& [i, v] : fixed) start[static_cast<Eigen::Index>(i)] = v;
  std::vector<bool> is_fixed(p.param_count(), false);
  for (const auto& [i, v] : fixed) is_fixed[i] = true;
  std::size_t free = p.param_count();
  for (std::size_t i = 0; i < p.param_count() && free == p.param_count(); ++i)
    if (!is_fixed[i]) free = i;
  if (free == p.param_count()) throw ConfigError("path '" + spec + "' leaves no parameter free");
  std::vector<PathConstraint> cons;
  for (std::size_t i = 0; i < p.param_count(); ++i)
    if (i != free) cons.push_back(fix_param(i, start[static_cast<Eigen::Index>(i)], p.param_names()[i]));

  const auto dg = run_diagram(p, cons, p.discovery_seed(), start_params(p, start), cfg, spec);
  if (dg.branches.empty()) {
    std::cerr << "error: the start solve failed; nothing written\n";
    return 2;
  }
  write_diagram(p, dg, out, rc.save_states);
  print_diagram(dg);
  for (const auto& b : dg.branches)
    if (b.status == BranchStatus::step_failed) std::cerr << "warning: branch " << b.id << " stopped after a failed step\n";
  return 0;
}

DetectSettings detect_settings(const RunConfig& rc, const CurveSetup& setup) {
  DetectSettings st;
  st.zigzag = rc.zigzag;
  if (!rc.zigzag_bounds_set) st.zigzag.lambda_bounds = setup.box;
  if (!rc.zigzag_direction_set) st.zigzag.direction = setup.direction;
  st.deflation = rc.deflation;
  st.discovery = rc.discovery;
  st.newton = rc.newton;
  return st;
}

void warn_trace(const ZigzagTrace& tr, const std::string& what) {
  if (tr.crossings.empty()) std::cerr << "warning: " << what << ": no crossings found\n";
  if (tr.status != TraceStatus::completed) std::cerr << "warning: " << what << ": " << to_string(tr.status) << "\n";
}

int cmd_curve(const RunConfig& rc) {
  const auto problem = make_problem(rc.problem, rc.n);
  const auto& p = *problem;
  const CurveSetup setup = default_curve_setup(p);
  const Vector start = rc.start ? to_vector(*rc.start) : setup.start;
  const auto tr = detect_curve(p, detect_settings(rc, setup), start_params(p, start), p.discovery_seed());
  write_curve_csv(tr, fs::path(rc.output_dir) / "curve.csv");
  std::cout << "steps: " << tr.steps << ", segments: " << tr.segments.size() << ", crossings: " << tr.crossings.size()
            << ", status: " << to_string(tr.status) << "\n";
  warn_trace(tr, "curve");
  return 0;
}

int cmd_surface(const RunConfig& rc) {
  const auto problem = make_problem(rc.problem, rc.n);
  const auto& p = *problem;
  if (p.param_count() < 3) throw ConfigError("surface needs a problem with three parameters");
  const CurveSetup setup = default_curve_setup(p);
  const Vector start = rc.start ? to_vector(*rc.start) : setup.start;
  start_params(p, start);
  std::vector<double> grid = rc.lambda3;
  if (grid.empty()) {
    const Interval r = p.param_bounds()[2];
    for (int i = 0; i < 4; ++i) grid.push_back(r.lo + (r.hi - r.lo) * i / 3.0);
  }
  const auto slices = detect_surface(p, detect_settings(rc, setup), grid, start_params(p, start), p.discovery_seed());
  write_surface_csv(slices, fs::path(rc.output_dir) / "surface.csv");
  int usable = 0;
  for (const auto& sl : slices) {
    std::cout << "lambda_3 = " << format_double(sl.lambda3) << ": crossings " << sl.trace.crossings.size() << ", status "
              << to_string(sl.trace.status) << "\n";
    if (!sl.error.empty()) {
      std::cerr << "warning: slice lambda_3 = " << format_double(sl.lambda3) << ": " << sl.error << "\n";
      continue;
    }
    ++usable;
    warn_trace(sl.trace, "slice lambda_3 = " + format_double(sl.lambda3));
  }
  if (usable == 0) {
    std::cerr << "error: every slice failed\n";
    return 2;
  }
  return 0;
}

int cmd_oracle(const RunConfig& rc, const Overrides& o) {
  const auto problem = make_problem(rc.problem, rc.n);
  const auto& p = *problem;
  const Vector lam = rc.start ? to_vector(*rc.start) : p.default_params();
  start_params(p, lam);
  std::vector<OracleReport> reports;
  if (p.id().rfind("bratu", 0) == 0) {
    Interval r = p.param_bounds()[0];
    if (!o.range.empty()) {
      const auto iv = parse_interval_list(o.range);
      if (iv.size() != 1) throw ConfigError("--range needs lo:hi");
      r = iv[0];
    }
    const double v = fold_bisection_oracle(p, lam, r.lo, r.hi);
    reports.push_back({"lambda_1 existence boundary", v, "bisection on Newton convergence from u = 0", "1e-4"});
  } else {
    reports = eigen_reports(eigen_bifurcation_oracle(p, lam), static_cast<std::size_t>(o.count));
  }
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports)
    arr.push_back({{"quantity", r.quantity}, {"value", r.value}, {"method", r.method}, {"resolution", r.resolution}});
  std::cout << arr.dump(2) << '\n';
  auto f = open_out(fs::path(rc.output_dir) / "oracle.json");
  f << arr.dump(2) << '\n';
  return 0;
}

void common_options(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON run configuration");
  sub->add_option("--problem", o.problem, "problem id (bratu1d, bratu2d, allencahn1d, allencahn2d, allencahn-mod1d)");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--grid", o.grid, "grid nodes per axis");
  sub->add_option("--start", o.start, "start parameters, comma separated");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deflated continuation and zigzag bifurcation detection"};
  app.require_subcommand(1);
  Overrides o;

  auto* diagram = app.add_subcommand("diagram", "bifurcation diagram along a path or path family");
  common_options(diagram, o);
  diagram->add_option("--ds", o.ds, "arclength step");
  diagram->add_option("--path", o.path, "fixed parameters, e.g. \"lambda_2=1,lambda_3=0\"");
  diagram->add_option("--family", o.family, "path family: horizontal, diagonal, elliptic");
  diagram->add_option("--n", o.family_n, "family size parameter (n + 1 curves)");
  diagram->add_option("--family-bounds", o.family_bounds, "family bounds a,b,c,d");
  diagram->add_option("--bounds", o.bounds, "stop box lo:hi per parameter, comma separated");
  diagram->add_flag("--save-states", o.save_states, "write state snapshots");

  auto* curve = app.add_subcommand("curve", "zigzag detection of a bifurcation curve");
  auto* surface = app.add_subcommand("surface", "zigzag detection on lambda_3 slices");
  for (auto* sub : {curve, surface}) {
    common_options(sub, o);
    sub->add_option("--ds", o.ds, "step along zigzag lines");
    sub->add_option("--theta", o.theta, "line inclination in radians");
    sub->add_option("--k", o.k, "steps after each crossing before turning");
    sub->add_option("--direction", o.direction, "initial travel sign in lambda_1 (+1 or -1)");
    sub->add_option("--bounds", o.bounds, "walking box lo:hi per parameter, comma separated");
  }
  surface->add_option("--lambda3", o.lambda3, "slice grid a:b:m");

  auto* oracle = app.add_subcommand("oracle", "reference bifurcation values");
  common_options(oracle, o);
  oracle->add_option("--range", o.range, "lambda_1 interval lo:hi for the fold oracle");
  oracle->add_option("--count", o.count, "number of eigenvalue reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    const RunConfig rc = build_config(o, name);
    if (name == "diagram") return cmd_diagram(rc);
    if (name == "curve") return cmd_curve(rc);
    if (name == "surface") return cmd_surface(rc);
    return cmd_oracle(rc, o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
