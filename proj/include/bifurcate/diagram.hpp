#pragma once

// Deflated arclength continuation: one branch is stepped by arclength, every
// other known branch is re-solved at the new parameter value by deflated
// Newton, and deflation from the seed looks for branches not yet known.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "continuation.hpp"
#include "core.hpp"
#include "deflation.hpp"
#include "newton.hpp"
#include "problems.hpp"

namespace bifurcate {

enum class BranchStatus { active, completed, step_failed, left_bounds };

inline const char* to_string(BranchStatus s) {
  switch (s) {
    case BranchStatus::active: return "active";
    case BranchStatus::completed: return "completed";
    case BranchStatus::step_failed: return "step_failed";
    case BranchStatus::left_bounds: return "left_bounds";
  }
  return "unknown";
}

struct BranchPoint {
  Point point;
  double q = 0.0;
  int step = 0;                    // index of the continuation step this point belongs to
  std::optional<Tangent> tangent;  // set for points produced by arclength steps
};

struct Branch {
  int id = 0;
  std::vector<BranchPoint> points;
  std::optional<int> parent_event;
  BranchStatus status = BranchStatus::active;
  int misses = 0;  // consecutive steps without a point

  const BranchPoint& last() const { return points.back(); }
};

enum class EventKind { new_branches, fold, existence_boundary };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::new_branches: return "new_branches";
    case EventKind::fold: return "fold";
    case EventKind::existence_boundary: return "existence_boundary";
  }
  return "unknown";
}

struct BifurcationEvent {
  int id = 0;
  EventKind kind = EventKind::new_branches;
  ParamVec bracket_lo;
  ParamVec bracket_hi;
  std::vector<int> branch_ids;
  std::optional<ParamVec> estimate;  // interpolated location (folds)
  int lo_step = -1;
  int hi_step = -1;

  int count() const { return static_cast<int>(branch_ids.size()); }
};

struct DiagramConfig {
  ContinuationConfig continuation;
  DeflationConfig deflation;                             // warm-started solves
  DeflationConfig discovery = DeflationConfig::discovery();  // solves from the seed
  NewtonConfig newton;
  std::vector<Interval> bounds;  // stop box; empty means the problem's parameter bounds
  double jump_guard = 10.0;
  int max_steps = 20000;
  int max_misses = 3;
};

struct BifurcationDiagram {
  std::string problem_id;
  std::string path_label;
  std::vector<Branch> branches;
  std::vector<BifurcationEvent> events;
  DiagramConfig config;
  int steps = 0;

  std::size_t count_events(EventKind k) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [k](const BifurcationEvent& e) { return e.kind == k; }));
  }
};

/// A solution at the current parameter value, tagged with the branch whose
/// previous point warm-started it (if any).
struct Candidate {
  Vector u;
  std::optional<int> tag;
};

struct Assignment {
  std::vector<std::pair<int, Vector>> appended;
  std::vector<Vector> new_branches;
  std::vector<int> missed;
};

namespace detail {

/// Branch-continuity test: within C ds (1 + |u_prev|) of the previous point,
/// or (near a pitchfork root, where the branch moves fast) nearer to its own
/// previous point than to any other previous state and no farther from it
/// than max(|u_prev|, |u|).
inline bool continues(const Vector& u, const Vector& up, const std::vector<Vector>& others, double ds, double guard) {
  const double dist = (u - up).norm();
  if (dist <= guard * ds * (1.0 + up.norm())) return true;
  if (dist > std::max(up.norm(), u.norm())) return false;
  for (const auto& v : others)
    if ((u - v).norm() <= dist) return false;
  return true;
}

inline bool continues(int id, const Vector& u, const std::map<int, Vector>& prev, double ds, double guard) {
  std::vector<Vector> others;
  for (const auto& [other, v] : prev)
    if (other != id) others.push_back(v);
  return continues(u, prev.at(id), others, ds, guard);
}

}  // namespace detail

/// Sorts solutions found at one parameter value onto branches.  `prev` holds
/// the previous state of every branch being tracked.
inline Assignment assign_to_branches(const std::vector<Candidate>& candidates, const std::map<int, Vector>& prev,
                                     double ds, double guard = 10.0) {
  Assignment out;
  std::vector<Vector> taken;
  auto duplicate = [&](const Vector& u) {
    return std::any_of(taken.begin(), taken.end(), [&](const Vector& v) { return (u - v).norm() <= kDistinctTol; });
  };
  std::map<int, bool> filled;
  std::vector<Vector> untagged;
  for (const auto& c : candidates) {
    if (duplicate(c.u)) continue;
    if (c.tag && prev.count(*c.tag) && !filled[*c.tag] && detail::continues(*c.tag, c.u, prev, ds, guard)) {
      out.appended.emplace_back(*c.tag, c.u);
      filled[*c.tag] = true;
      taken.push_back(c.u);
    } else {
      untagged.push_back(c.u);
      taken.push_back(c.u);
    }
  }
  for (const auto& u : untagged) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [id, up] : prev) {
      if (filled[id] || !detail::continues(id, u, prev, ds, guard)) continue;
      const double d = (u - up).norm();
      if (d < best_d) best = id, best_d = d;
    }
    if (best >= 0) {
      out.appended.emplace_back(best, u);
      filled[best] = true;
    } else {
      out.new_branches.push_back(u);
    }
  }
  for (const auto& [id, up] : prev)
    if (!filled[id]) out.missed.push_back(id);
  return out;
}

namespace detail {

inline bool in_box(const Vector& lam, const std::vector<Interval>& box) {
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (!box[static_cast<std::size_t>(i)].contains(lam[i])) return false;
  return true;
}

/// Fold between consecutive arclength points a, b (leading component changes
/// sign).  Returns {lo, hi, estimate}: lo is the point further along the
/// leading parameter, hi the crossing of the two tangent lines (beyond the
/// turning point for a quadratic fold), estimate the extremum of the cubic
/// Hermite interpolant in s.
struct FoldBracket {
  Vector lo, hi, estimate;
};

inline FoldBracket fold_bracket(const ExtendedPoint& a, const ExtendedPoint& b, Eigen::Index lead) {
  const Vector& la = a.point.lambda.values();
  const Vector& lb = b.point.lambda.values();
  const Vector& ta = a.tangent.dlambda();
  const Vector& tb = b.tangent.dlambda();
  const double sa = a.point.s, sb = b.point.s;
  const double h = sb - sa;
  const double dir = ta[lead] > 0.0 ? 1.0 : -1.0;  // leading parameter grows toward the fold when dir > 0

  FoldBracket out;
  out.lo = (dir * la[lead] >= dir * lb[lead]) ? la : lb;

  const double denom = ta[lead] - tb[lead];
  double s_star = 0.5 * (sa + sb);
  if (denom != 0.0) s_star = (lb[lead] - la[lead] + ta[lead] * sa - tb[lead] * sb) / denom;
  out.hi = la + ta * (s_star - sa);

  // Hermite basis derivatives in t = (s - sa)/h; solve d/dt lambda_lead(t) = 0 on [0, 1].
  const double p0 = la[lead], p1 = lb[lead], m0 = ta[lead] * h, m1 = tb[lead] * h;
  const double qa = 3.0 * (2.0 * p0 + m0 - 2.0 * p1 + m1);
  const double qb = 2.0 * (-3.0 * p0 - 2.0 * m0 + 3.0 * p1 - m1);
  const double qc = m0;
  double t = 0.5;
  if (std::abs(qa) > 1e-300) {
    const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
    const double r1 = (-qb + std::sqrt(disc)) / (2.0 * qa);
    const double r2 = (-qb - std::sqrt(disc)) / (2.0 * qa);
    t = (r1 >= 0.0 && r1 <= 1.0) ? r1 : r2;
  } else if (qb != 0.0) {
    t = -qc / qb;
  }
  t = std::clamp(t, 0.0, 1.0);
  const double h00 = 2 * t * t * t - 3 * t * t + 1, h10 = t * t * t - 2 * t * t + t;
  const double h01 = -2 * t * t * t + 3 * t * t, h11 = t * t * t - t * t;
  out.estimate = h00 * la + h10 * h * ta + h01 * lb + h11 * h * tb;
  // components held fixed by the path stay exact
  for (Eigen::Index i = 0; i < la.size(); ++i)
    if (la[i] == lb[i]) out.hi[i] = out.estimate[i] = la[i];
  return out;
}

}  // namespace detail

/// Deflated arclength continuation along the curve cut out by `constraints`
/// (p - 1 of them) from `lambda_start`.  `u0` is both the initial guess and
/// the restart point of every discovery solve.
inline BifurcationDiagram run_diagram(const Problem& problem, const std::vector<PathConstraint>& constraints,
                                      const Vector& u0, const ParamVec& lambda_start, const DiagramConfig& cfg,
                                      const std::string& path_label = "") {
  cfg.continuation.validate();
  cfg.deflation.validate();
  cfg.discovery.validate();
  cfg.newton.validate();
  problem.check_params(lambda_start.values());
  if (u0.size() != static_cast<Eigen::Index>(problem.dof_count())) throw ConfigError("run_diagram: u0 has wrong length");
  for (const auto& c : constraints)
    if (std::abs(c.eval(lambda_start.values())) > 1e-8)
      throw ConfigError("run_diagram: start point violates constraint " + c.label);

  BifurcationDiagram dg;
  dg.problem_id = problem.id();
  dg.path_label = path_label;
  dg.config = cfg;
  std::vector<Interval> box = cfg.bounds.empty() ? problem.param_bounds() : cfg.bounds;
  if (box.size() != problem.param_count()) throw ConfigError("run_diagram: bounds size mismatch");
  dg.config.bounds = box;
  const Eigen::Index lead = leading_param(constraints, lambda_start.values());
  const double ds = cfg.continuation.ds;

  auto start = start_point(problem, constraints, u0, lambda_start, cfg.continuation.direction, cfg.newton);
  if (!start) return dg;

  std::vector<ParamVec> step_lambda;      // parameter value of each step
  std::vector<double> step_s;             // driver arclength of each step
  std::vector<std::vector<Vector>> sols;  // all accepted states per step

  auto q_of = [&](const Vector& u, const ParamVec& lam) { return problem.output(u, lam.values()); };
  auto new_branch = [&](const Vector& u, int step) {
    Branch b;
    b.id = static_cast<int>(dg.branches.size());
    b.points.push_back({Point{u, step_lambda[static_cast<std::size_t>(step)], step_s[static_cast<std::size_t>(step)]},
                        q_of(u, step_lambda[static_cast<std::size_t>(step)]), step, std::nullopt});
    dg.branches.push_back(std::move(b));
    return dg.branches.back().id;
  };

  // Walks a freshly found branch back over earlier steps while it still
  // exists there; returns the first step at which it was found.  Plain Newton
  // from the neighbouring point first, deflated Newton if that fails or lands
  // on a state already known at that step.
  auto backfill = [&](int id) {
    Branch& b = dg.branches[static_cast<std::size_t>(id)];
    int step = b.points.front().step;
    while (step > 0) {
      const auto k = static_cast<std::size_t>(step - 1);
      const Vector up = b.points.front().point.u;
      const Vector& lam = step_lambda[k].values();
      const auto& here = sols[k];
      NewtonResult r = newton_solve([&](const Vector& u) { return problem.residual(u, lam); },
                                    [&](const Vector& u) { return problem.jacobian_u(u, lam); }, up, cfg.newton);
      if (!r.converged() || std::any_of(here.begin(), here.end(), [&](const Vector& v) {
            return (v - r.solution).norm() <= kDistinctTol;
          })) {
        DeflationSet set(cfg.deflation);
        for (const auto& v : here) set.add(v);
        r = deflated_solve(problem, lam, up, set, cfg.newton);
        if (!r.converged()) break;
      }
      if (!detail::continues(r.solution, up, {}, ds, cfg.jump_guard)) break;
      b.points.insert(b.points.begin(), {Point{r.solution, step_lambda[k], step_s[k]}, q_of(r.solution, step_lambda[k]),
                                         step - 1, std::nullopt});
      sols[k].push_back(r.solution);
      --step;
    }
    return step;
  };

  auto open_branches = [&](const std::vector<Vector>& found, int step) {
    for (const auto& u : found) {
      const int id = new_branch(u, step);
      sols[static_cast<std::size_t>(step)].push_back(u);
      const int first = backfill(id);
      if (first == 0) continue;  // present from the start: not a bifurcation
      auto it = std::find_if(dg.events.begin(), dg.events.end(), [&](const BifurcationEvent& e) {
        return e.kind == EventKind::new_branches && e.hi_step == first;
      });
      if (it == dg.events.end()) {
        BifurcationEvent e;
        e.id = static_cast<int>(dg.events.size());
        e.kind = EventKind::new_branches;
        e.lo_step = first - 1;
        e.hi_step = first;
        e.bracket_lo = step_lambda[static_cast<std::size_t>(first - 1)];
        e.bracket_hi = step_lambda[static_cast<std::size_t>(first)];
        dg.events.push_back(e);
        it = std::prev(dg.events.end());
      }
      it->branch_ids.push_back(id);
      dg.branches[static_cast<std::size_t>(id)].parent_event = it->id;
    }
  };

  step_lambda.push_back(start->point.lambda);
  step_s.push_back(0.0);
  sols.emplace_back();
  {
    const int id = new_branch(start->point.u, 0);
    dg.branches[static_cast<std::size_t>(id)].points.back().tangent = start->tangent;
    sols[0].push_back(start->point.u);
    DeflationSet set(cfg.discovery);
    set.add(start->point.u);
    open_branches(discover_more(problem, lambda_start.values(), u0, set, cfg.newton), 0);
  }

  int driver = 0;
  ExtendedPoint ext = *start;
  auto active = [&](const Branch& b) { return b.status == BranchStatus::active; };

  for (int step = 1; step <= cfg.max_steps; ++step) {
    // Lowest-id active branch drives the arclength continuation.
    auto drv = std::find_if(dg.branches.begin(), dg.branches.end(), active);
    if (drv == dg.branches.end()) break;
    if (drv->id != driver) {
      driver = drv->id;
      const BranchPoint& bp = drv->last();
      try {
        ext = ExtendedPoint{bp.point, compute_tangent(problem, bp.point, constraints, nullptr, cfg.continuation.direction)};
      } catch (const NumericalError&) {
        drv->status = BranchStatus::step_failed;
        continue;
      }
    }
    Branch& d = dg.branches[static_cast<std::size_t>(driver)];

    const StepResult sr = arclength_step(problem, constraints, ext, cfg.continuation, cfg.newton);
    if (!sr.accepted()) {
      const Point pred = predictor(ext, cfg.continuation.ds_min);
      const Vector& pl = pred.lambda.values();
      const bool exists = newton_solve([&](const Vector& u) { return problem.residual(u, pl); },
                                       [&](const Vector& u) { return problem.jacobian_u(u, pl); }, ext.point.u,
                                       cfg.newton)
                              .converged();
      if (!exists) {
        BifurcationEvent e;
        e.id = static_cast<int>(dg.events.size());
        e.kind = EventKind::existence_boundary;
        e.bracket_lo = ext.point.lambda;
        e.bracket_hi = pred.lambda;
        e.branch_ids = {driver};
        dg.events.push_back(e);
      }
      d.status = BranchStatus::step_failed;
      continue;
    }
    const ExtendedPoint& nx = sr.ext;
    if (!detail::in_box(nx.point.lambda.values(), box)) {
      for (auto& b : dg.branches)
        if (active(b)) b.status = BranchStatus::left_bounds;
      break;
    }

    step_lambda.push_back(nx.point.lambda);
    step_s.push_back(step_s.back() + sr.ds_used);
    sols.emplace_back();
    dg.steps = step;
    const auto su = static_cast<std::size_t>(step);
    const Point at{nx.point.u, nx.point.lambda, step_s.back()};
    d.points.push_back({at, q_of(at.u, at.lambda), step, nx.tangent});
    d.misses = 0;
    sols[su].push_back(nx.point.u);

    const double ta = ext.tangent.dlambda()[lead], tb = nx.tangent.dlambda()[lead];
    if (ta * tb < 0.0) {
      const detail::FoldBracket fb = detail::fold_bracket(ext, nx, lead);
      BifurcationEvent e;
      e.id = static_cast<int>(dg.events.size());
      e.kind = EventKind::fold;
      e.bracket_lo = nx.point.lambda.with_values(fb.lo);
      e.bracket_hi = nx.point.lambda.with_values(fb.hi);
      e.estimate = nx.point.lambda.with_values(fb.estimate);
      e.lo_step = step - 1;
      e.hi_step = step;
      e.branch_ids = {driver};
      // The branch coming back from the fold is the one the driver now runs onto.
      int partner = -1;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& b : dg.branches) {
        if (b.id == driver || !active(b)) continue;
        const double dist = (b.last().point.u - nx.point.u).norm();
        if (dist < best && dist <= cfg.jump_guard * ds * (1.0 + nx.point.u.norm())) best = dist, partner = b.id;
      }
      if (partner >= 0) {
        e.branch_ids.push_back(partner);
        d.status = BranchStatus::completed;
        dg.branches[static_cast<std::size_t>(partner)].status = BranchStatus::completed;
      }
      dg.events.push_back(e);
      ext = nx;
      if (partner >= 0) continue;
    }
    ext = nx;

    // Known branches, warm-started from their previous points.
    DeflationSet set(cfg.deflation);
    set.add(nx.point.u);
    std::vector<Candidate> cands;
    std::map<int, Vector> prev;
    for (auto& b : dg.branches) {
      if (b.id == driver || !active(b)) continue;
      prev[b.id] = b.last().point.u;
      const NewtonResult r = deflated_solve(problem, at.lambda.values(), b.last().point.u, set, cfg.newton);
      if (r.converged() && set.add(r.solution)) cands.push_back({r.solution, b.id});
    }
    // Untracked branches, by deflation from the seed.
    DeflationSet dset(cfg.discovery);
    for (const auto& v : set.known()) dset.add(v);
    for (const auto& u : discover_more(problem, at.lambda.values(), u0, dset, cfg.newton)) cands.push_back({u, std::nullopt});

    const Assignment as = assign_to_branches(cands, prev, ds, cfg.jump_guard);
    for (const auto& [id, u] : as.appended) {
      Branch& b = dg.branches[static_cast<std::size_t>(id)];
      b.points.push_back({Point{u, at.lambda, at.s}, q_of(u, at.lambda), step, std::nullopt});
      b.misses = 0;
      sols[su].push_back(u);
    }
    for (int id : as.missed) {
      Branch& b = dg.branches[static_cast<std::size_t>(id)];
      if (++b.misses >= cfg.max_misses) b.status = BranchStatus::step_failed;
    }
    open_branches(as.new_branches, step);
  }
  for (auto& b : dg.branches)
    if (active(b)) b.status = BranchStatus::completed;
  return dg;
}

/// Smallest-lambda_1 point on the boundary of `box` (first two components)
/// where g vanishes; other components are taken from `base`.
inline std::optional<Vector> family_start(const PathConstraint& g, const std::vector<Interval>& box, const Vector& base,
                                          int samples = 400) {
  std::optional<Vector> best;
  auto consider = [&](const Vector& v) {
    if (!best || v[0] < (*best)[0]) best = v;
  };
  auto edge = [&](const Vector& from, const Vector& to) {
    auto at = [&](double t) { return Vector(from + t * (to - from)); };
    double t0 = 0.0, g0 = g.eval(at(0.0));
    if (g0 == 0.0) consider(at(0.0));
    for (int i = 1; i <= samples; ++i) {
      const double t1 = static_cast<double>(i) / samples;
      const double g1 = g.eval(at(t1));
      if (g1 == 0.0) consider(at(t1));
      if (g0 * g1 < 0.0) {
        double a = t0, b = t1, ga = g0;
        for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
          const double m = 0.5 * (a + b);
          const double gm = g.eval(at(m));
          if (gm == 0.0) a = b = m;
          else if (ga * gm < 0.0) b = m;
          else a = m, ga = gm;
        }
        consider(at(0.5 * (a + b)));
      }
      t0 = t1;
      g0 = g1;
    }
  };
  Vector c00 = base, c10 = base, c01 = base, c11 = base;
  c00[0] = box[0].lo, c00[1] = box[1].lo;
  c10[0] = box[0].hi, c10[1] = box[1].lo;
  c01[0] = box[0].lo, c01[1] = box[1].hi;
  c11[0] = box[0].hi, c11[1] = box[1].hi;
  edge(c00, c01);  // lambda_1 = lo
  edge(c00, c10);  // lambda_2 = lo
  edge(c01, c11);  // lambda_2 = hi
  edge(c10, c11);  // lambda_1 = hi
  return best;
}

struct FamilyRun {
  std::string label;
  std::optional<BifurcationDiagram> diagram;  // empty when the curve misses the box or the start solve fails
  std::string error;
};

/// One diagram per family member.  Parameters beyond the second are frozen at
/// their values in `base`.
inline std::vector<FamilyRun> run_diagram_family(const Problem& problem, const PathFamily& family, const Vector& u0,
                                                 const Vector& base, const DiagramConfig& cfg) {
  if (problem.param_count() < 2) throw ConfigError("path families need at least two parameters");
  const std::vector<Interval> box = cfg.bounds.empty() ? problem.param_bounds() : cfg.bounds;
  std::vector<FamilyRun> out;
  for (const auto& g : path_family(family)) {
    FamilyRun run;
    run.label = g.label;
    std::vector<PathConstraint> cons{g};
    for (std::size_t i = 2; i < problem.param_count(); ++i) cons.push_back(fix_param(i, base[static_cast<Eigen::Index>(i)]));
    const auto start = family_start(g, box, base);
    if (!start) {
      run.error = "path does not meet the parameter box";
    } else {
      try {
        BifurcationDiagram dg =
            run_diagram(problem, cons, u0, ParamVec(*start, problem.param_names()), cfg, g.label);
        if (dg.branches.empty()) run.error = "start solve failed";
        run.diagram = std::move(dg);
      } catch (const std::exception& e) {
        run.error = e.what();
      }
    }
    out.push_back(std::move(run));
  }
  return out;
}

}  // namespace bifurcate
