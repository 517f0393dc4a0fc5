#pragma once

// Zigzag detection of bifurcation curves: continue along inclined lines in
// parameter space, label each point by its solution count, and flip the
// line's travel sign a few steps after every label change.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "continuation.hpp"
#include "core.hpp"
#include "deflation.hpp"
#include "newton.hpp"
#include "problems.hpp"

namespace bifurcate {

struct ZigzagConfig {
  double theta = std::numbers::pi / 20.0;  // line inclination against the lambda_1 axis, in (0, pi/2)
  int k = 5;                               // straight steps after a crossing
  double ds = 0.01;
  std::vector<Interval> lambda_bounds;  // empty means the problem's parameter bounds
  int n_max = 4;
  int max_steps = 200000;
  int direction = +1;  // travel sign in lambda_1 on the initial horizontal line

  void validate() const {
    if (!(theta > 0.0) || !(theta < std::numbers::pi / 2.0)) throw ConfigError("zigzag.theta must lie in (0, pi/2)");
    if (k < 1) throw ConfigError("zigzag.k must be >= 1");
    if (!(ds > 0.0)) throw ConfigError("zigzag.ds must be > 0");
    if (n_max < 1) throw ConfigError("zigzag.n_max must be >= 1");
    if (direction != 1 && direction != -1) throw ConfigError("zigzag.direction must be +1 or -1");
  }

  /// Folds an angle given in the (pi/2, pi) convention onto theta in (0, pi/2)
  /// and a travel sign.
  static std::pair<double, int> fold_angle(double angle) {
    if (angle > std::numbers::pi / 2.0 && angle < std::numbers::pi) return {std::numbers::pi - angle, -1};
    return {angle, +1};
  }
};

struct DetectSettings {
  ZigzagConfig zigzag;
  DeflationConfig deflation;
  DeflationConfig discovery = DeflationConfig::discovery();
  NewtonConfig newton;
};

struct RegionLabel {
  int solution_count = 0;
  bool operator==(const RegionLabel&) const = default;
};

struct Classification {
  RegionLabel label;
  std::vector<Vector> solutions;
};

/// Line through tilde with slope sigma tan(theta):
/// g = (lambda_2 - tilde_2) - sigma tan(theta) (lambda_1 - tilde_1).
inline PathConstraint zigzag_line(const Vector& tilde, double theta, int sigma) {
  if (std::abs(std::cos(theta)) < 1e-15) throw ConfigError("zigzag_line: vertical line");
  const double m = sigma * std::tan(theta);
  const double t1 = tilde[0], t2 = tilde[1];
  PathConstraint g;
  g.eval = [m, t1, t2](const Vector& l) { return (l[1] - t2) - m * (l[0] - t1); };
  g.grad = [m](const Vector& l) {
    Vector v = Vector::Zero(l.size());
    v[0] = -m;
    v[1] = 1.0;
    return v;
  };
  g.label = "zigzag(" + std::to_string(t1) + "," + std::to_string(t2) + "," + (sigma > 0 ? "+" : "-") + ")";
  return g;
}

/// Counts distinct solutions at lambda (capped at n_max).  Each warm start is
/// refined by plain Newton, retried with deflation when it lands on a solution
/// already found; then deflation from `seed` looks for the rest.
inline Classification classify_region(const Problem& problem, const Vector& lambda, const std::vector<Vector>& warm_starts,
                                      const Vector& seed, const DetectSettings& st) {
  Classification out;
  const auto cap = static_cast<std::size_t>(st.zigzag.n_max);
  try {
    problem.check_params(lambda);
  } catch (const ConfigError&) {
    return out;
  }
  auto res = [&](const Vector& u) { return problem.residual(u, lambda); };
  auto jac = [&](const Vector& u) { return problem.jacobian_u(u, lambda); };
  DeflationSet set(st.deflation);
  for (const auto& w : warm_starts) {
    if (set.size() >= cap) break;
    NewtonResult r = newton_solve(res, jac, w, st.newton);
    if (r.converged() && set.add(r.solution)) continue;
    if (set.contains(w)) continue;
    r = deflated_solve(problem, lambda, w, set, st.newton);
    if (r.converged()) set.add(r.solution);
  }
  DeflationConfig dc = st.discovery;
  dc.max_solutions = static_cast<int>(cap);
  DeflationSet dset(dc);
  for (const auto& v : set.known()) dset.add(v);
  if (dset.size() < cap) discover_more(problem, lambda, seed, dset, st.newton);
  out.solutions = dset.known();
  out.label.solution_count = static_cast<int>(std::min(out.solutions.size(), cap));
  return out;
}

struct LabeledPoint {
  ParamVec lambda;
  RegionLabel label;
};

struct ZigzagSegment {
  PathConstraint line;
  int sigma = +1;
  std::vector<LabeledPoint> points;
};

struct Crossing {
  ParamVec bracket_lo;
  ParamVec bracket_hi;
  ParamVec midpoint;
  RegionLabel label_lo;
  RegionLabel label_hi;
  int segment = 0;
};

enum class TraceStatus { completed, step_failed, start_failed, max_steps };

inline const char* to_string(TraceStatus s) {
  switch (s) {
    case TraceStatus::completed: return "completed";
    case TraceStatus::step_failed: return "step_failed";
    case TraceStatus::start_failed: return "start_failed";
    case TraceStatus::max_steps: return "max_steps";
  }
  return "unknown";
}

struct ZigzagTrace {
  std::vector<ZigzagSegment> segments;
  std::vector<Crossing> crossings;
  TraceStatus status = TraceStatus::completed;
  int steps = 0;
};

/// Follows a bifurcation curve in (lambda_1, lambda_2) from `start`.  Lines
/// are walked in parameter space with step ds; every point is classified, with
/// the previous point's solutions as warm starts.  The start label marks one
/// side of the curve and every other count the far side, so a solution found
/// a step late inside the far region is not taken for a crossing.  The first line is
/// lambda_2 = start_2 travelled in the configured lambda_1 direction; k steps after each
/// label change the walk turns onto the inclined line through the current
/// point with the opposite travel sign.  Parameters beyond the second stay at
/// their start values.
inline ZigzagTrace detect_curve(const Problem& problem, const DetectSettings& st, const ParamVec& start, const Vector& u0) {
  const ZigzagConfig& zz = st.zigzag;
  zz.validate();
  st.deflation.validate();
  st.discovery.validate();
  st.newton.validate();
  if (problem.param_count() < 2) throw ConfigError("detect_curve needs at least two parameters");
  const std::vector<Interval> box = zz.lambda_bounds.empty() ? problem.param_bounds() : zz.lambda_bounds;
  if (box.size() != problem.param_count()) throw ConfigError("zigzag bounds size mismatch");
  problem.check_params(start.values());
  if (u0.size() != static_cast<Eigen::Index>(problem.dof_count())) throw ConfigError("detect_curve: u0 has wrong length");
  auto inside = [&](const Vector& l) { return box[0].contains(l[0]) && box[1].contains(l[1]); };
  if (!inside(start.values())) throw ConfigError("detect_curve: start outside the zigzag bounds");

  ZigzagTrace tr;
  ZigzagSegment seg{zigzag_line(start.values(), 0.0, zz.direction), zz.direction, {}};
  Vector dir = Vector::Zero(start.values().size());
  dir[0] = zz.direction;

  Classification cls = classify_region(problem, start.values(), {u0}, u0, st);
  seg.points.push_back({start, cls.label});
  const RegionLabel home = cls.label;
  Vector lam = start.values();

  int countdown = -1;
  for (int step = 1;; ++step) {
    if (step > zz.max_steps) {
      tr.status = TraceStatus::max_steps;
      break;
    }
    const Vector next = lam + zz.ds * dir;
    if (!inside(next)) break;
    tr.steps = step;
    const Classification c = classify_region(problem, next, cls.solutions, u0, st);
    if ((c.label == home) != (cls.label == home)) {
      tr.crossings.push_back(Crossing{start.with_values(lam), start.with_values(next),
                                      start.with_values(0.5 * (lam + next)), cls.label, c.label,
                                      static_cast<int>(tr.segments.size())});
      countdown = zz.k;
    }
    seg.points.push_back({start.with_values(next), c.label});
    cls = c;
    lam = next;

    if (countdown > 0 && --countdown == 0) {
      const int sigma = -seg.sigma;
      tr.segments.push_back(std::move(seg));
      seg = ZigzagSegment{zigzag_line(lam, zz.theta, sigma), sigma, {{start.with_values(lam), cls.label}}};
      dir.setZero();
      dir[0] = sigma * std::cos(zz.theta);
      dir[1] = std::sin(zz.theta);
      countdown = -1;
    }
  }
  tr.segments.push_back(std::move(seg));
  return tr;
}

struct SurfaceSlice {
  double lambda3 = 0.0;
  ZigzagTrace trace;
  std::string error;
};

/// detect_curve on each lambda_3 slice.  `start` supplies lambda_1, lambda_2
/// (and any components beyond the third); its third entry is replaced per slice.
inline std::vector<SurfaceSlice> detect_surface(const Problem& problem, const DetectSettings& st,
                                                const std::vector<double>& lambda3_grid, const ParamVec& start,
                                                const Vector& u0) {
  if (problem.param_count() < 3) throw ConfigError("detect_surface needs three parameters");
  std::vector<SurfaceSlice> out;
  for (double l3 : lambda3_grid) {
    SurfaceSlice sl;
    sl.lambda3 = l3;
    try {
      sl.trace = detect_curve(problem, st, start.with(2, l3), u0);
    } catch (const std::exception& e) {
      sl.error = e.what();
      sl.trace.status = TraceStatus::start_failed;
    }
    out.push_back(std::move(sl));
  }
  return out;
}

}  // namespace bifurcate
