#pragma once

// Pseudo-arclength predictor-corrector on the bordered system
// [G(u, lambda); g_1(lambda); ...; g_{p-1}(lambda); N(u, lambda, s)].

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "newton.hpp"
#include "problems.hpp"

namespace bifurcate {

/// Scalar constraint g(lambda) = 0 on parameter space, with its gradient.
struct PathConstraint {
  std::function<double(const Vector&)> eval;
  std::function<Vector(const Vector&)> grad;
  std::string label;
};

/// g = lambda_i - value.  Freezes one parameter.
inline PathConstraint fix_param(std::size_t i, double value, const std::string& name = "") {
  const auto k = static_cast<Eigen::Index>(i);
  PathConstraint c;
  c.eval = [k, value](const Vector& lam) { return lam[k] - value; };
  c.grad = [k](const Vector& lam) {
    Vector g = Vector::Zero(lam.size());
    g[k] = 1.0;
    return g;
  };
  c.label = (name.empty() ? "lambda_" + std::to_string(i + 1) : name) + "=" + std::to_string(value);
  return c;
}

enum class FamilyKind { horizontal, diagonal, elliptic };

inline const char* to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::horizontal: return "horizontal";
    case FamilyKind::diagonal: return "diagonal";
    case FamilyKind::elliptic: return "elliptic";
  }
  return "unknown";
}

inline FamilyKind family_kind_from_string(const std::string& s) {
  if (s == "horizontal") return FamilyKind::horizontal;
  if (s == "diagonal") return FamilyKind::diagonal;
  if (s == "elliptic") return FamilyKind::elliptic;
  throw ConfigError("unknown path family '" + s + "'");
}

/// Family box: lambda_1 in [a, b], lambda_2 in [c, d].
struct FamilyBounds {
  double a = 0.0, b = 1.0, c = 0.0, d = 1.0;
};

struct PathFamily {
  FamilyKind kind = FamilyKind::horizontal;
  FamilyBounds bounds;
  int n = 1;  // n + 1 curves
};

/// The n+1 constraints of a family, i = 0..n, with h1 = (d-c)/n, h2 = (b-a)/n:
///   horizontal  lambda_2 - (c + i h1)
///   diagonal    lambda_2/(c + i h1) + lambda_1/(a + i h2) - 1
///   elliptic    lambda_2^2/(c + i h1)^2 + lambda_1^2/(a + i h2)^2 - 1
inline std::vector<PathConstraint> path_family(const PathFamily& fam) {
  const auto& [a, b, c, d] = fam.bounds;
  if (!(a < b) || !(c < d)) throw ConfigError("path family: need a < b and c < d");
  if (fam.n < 1) throw ConfigError("path family: need n >= 1");
  const double h1 = (d - c) / fam.n;
  const double h2 = (b - a) / fam.n;
  std::vector<PathConstraint> out;
  for (int i = 0; i <= fam.n; ++i) {
    const double cy = c + i * h1;
    const double ax = a + i * h2;
    PathConstraint g;
    g.label = std::string(to_string(fam.kind)) + "_" + std::to_string(i);
    switch (fam.kind) {
      case FamilyKind::horizontal:
        g.eval = [cy](const Vector& l) { return l[1] - cy; };
        g.grad = [](const Vector& l) {
          Vector v = Vector::Zero(l.size());
          v[1] = 1.0;
          return v;
        };
        break;
      case FamilyKind::diagonal:
        if (cy == 0.0 || ax == 0.0) throw ConfigError("diagonal path: zero intercept");
        g.eval = [cy, ax](const Vector& l) { return l[1] / cy + l[0] / ax - 1.0; };
        g.grad = [cy, ax](const Vector& l) {
          Vector v = Vector::Zero(l.size());
          v[0] = 1.0 / ax;
          v[1] = 1.0 / cy;
          return v;
        };
        break;
      case FamilyKind::elliptic:
        if (cy == 0.0 || ax == 0.0) throw ConfigError("elliptic path: zero semi-axis");
        g.eval = [cy, ax](const Vector& l) { return l[1] * l[1] / (cy * cy) + l[0] * l[0] / (ax * ax) - 1.0; };
        g.grad = [cy, ax](const Vector& l) {
          Vector v = Vector::Zero(l.size());
          v[0] = 2.0 * l[0] / (ax * ax);
          v[1] = 2.0 * l[1] / (cy * cy);
          return v;
        };
        break;
    }
    out.push_back(std::move(g));
  }
  return out;
}

struct ExtendedPoint {
  Point point;
  Tangent tangent;
};

/// Index of the parameter used for orientation and fold detection: the first
/// one whose unit vector is not fully determined by the constraints.
inline Eigen::Index leading_param(const std::vector<PathConstraint>& constraints, const Vector& lambda) {
  const Eigen::Index p = lambda.size();
  if (constraints.empty()) return 0;
  Matrix c(static_cast<Eigen::Index>(constraints.size()), p);
  for (std::size_t i = 0; i < constraints.size(); ++i) c.row(static_cast<Eigen::Index>(i)) = constraints[i].grad(lambda);
  // lambda_j is free if some null vector of c has a nonzero j-th entry.
  const Matrix ker = Eigen::FullPivLU<Matrix>(c).kernel();
  for (Eigen::Index j = 0; j < p; ++j)
    if (ker.cols() > 0 && ker.row(j).cwiseAbs().maxCoeff() > 1e-12) return j;
  return 0;
}

/// Orients t by prev (positive inner product) or, without prev, so that the
/// leading parameter component has the sign of `direction`.
inline Tangent orient(const Tangent& t, const Tangent* prev, Eigen::Index lead, int direction) {
  if (prev != nullptr) return t.dot(*prev) < 0.0 ? t.flipped() : t;
  const double c = t.dlambda()[lead];
  if (c * direction < 0.0) return t.flipped();
  if (c == 0.0) {
    // Pure state direction: fall back to the first nonzero entry.
    const Vector x = t.stacked();
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] != 0.0) return (x[i] * direction < 0.0) ? t.flipped() : t;
  }
  return t;
}

/// Closed-form tangent for one free parameter `i` (all others held fixed):
/// w = G_u^-1 G_lambda_i, |lambda_i'| = (1 + |w|^2)^-1/2, u' = -w lambda_i'.
inline Tangent tangent_single(const Problem& problem, const Point& point, std::size_t i, const Tangent* prev,
                              int direction = +1) {
  const Vector& lam = point.lambda.values();
  const DenseLU lu(problem.jacobian_u(point.u, lam));
  if (lu.singular()) throw NumericalError("turning point tangent undefined");
  const Vector w = lu.solve(problem.jacobian_lambda(point.u, lam, i));
  const double ldot = 1.0 / std::sqrt(1.0 + w.squaredNorm());
  Vector dl = Vector::Zero(lam.size());
  dl[static_cast<Eigen::Index>(i)] = ldot;
  const Tangent t(Vector(-w * ldot), dl);
  return orient(t, prev, static_cast<Eigen::Index>(i), direction);
}

/// Bordered matrix [[G_u, G_lambda], [0, grad g_i^T]] of size (N+p-1) x (N+p).
inline Matrix tangent_system(const Problem& problem, const Vector& u, const Vector& lam,
                             const std::vector<PathConstraint>& constraints) {
  const Eigen::Index n = u.size();
  const Eigen::Index p = lam.size();
  const auto m = static_cast<Eigen::Index>(constraints.size());
  Matrix a = Matrix::Zero(n + m, n + p);
  a.topRows(n) = problem.jacobian_full(u, lam);
  for (Eigen::Index i = 0; i < m; ++i) a.block(n + i, n, 1, p) = constraints[static_cast<std::size_t>(i)].grad(lam).transpose();
  return a;
}

/// Unit tangent as the one-dimensional null space of the bordered matrix.
inline Tangent tangent_multi(const Problem& problem, const Point& point, const std::vector<PathConstraint>& constraints,
                             const Tangent* prev, int direction = +1) {
  const Vector& lam = point.lambda.values();
  const Eigen::Index n = point.u.size();
  const Eigen::Index p = lam.size();
  if (static_cast<Eigen::Index>(constraints.size()) != p - 1)
    throw ConfigError("tangent_multi: need exactly p-1 = " + std::to_string(p - 1) + " constraints, got " +
                      std::to_string(constraints.size()));
  const Matrix a = tangent_system(problem, point.u, lam, constraints);
  const Matrix at = a.transpose();
  Eigen::ColPivHouseholderQR<Matrix> qr(at);
  qr.setThreshold(1e-13);
  if (qr.rank() < n + p - 1)
    throw NumericalError("tangent undefined: bordered matrix rank " + std::to_string(qr.rank()) + " < " +
                         std::to_string(n + p - 1));
  const Matrix q = qr.householderQ();
  const Vector x = q.col(n + p - 1);
  const Tangent t = Tangent::from_stacked(x, n);
  return orient(t, prev, leading_param(constraints, lam), direction);
}

inline Tangent compute_tangent(const Problem& problem, const Point& point, const std::vector<PathConstraint>& constraints,
                               const Tangent* prev, int direction) {
  return tangent_multi(problem, point, constraints, prev, direction);
}

/// Linear extrapolation along the tangent.
inline Point predictor(const ExtendedPoint& ext, double ds) {
  const auto& [pt, t] = ext;
  return Point{pt.u + ds * t.du(), pt.lambda.with_values(pt.lambda.values() + ds * t.dlambda()), pt.s + ds};
}

/// N(u, lambda, s) = u0'.(u - u0) + lambda0'.(lambda - lambda0) - ds.
inline double arclength_constraint(const ExtendedPoint& ext, const Vector& u, const Vector& lam, double ds) {
  return ext.tangent.du().dot(u - ext.point.u) + ext.tangent.dlambda().dot(lam - ext.point.lambda.values()) - ds;
}

struct CorrectorResult {
  NewtonResult newton;
  Point point;  // valid iff newton.converged()
  bool converged() const { return newton.converged(); }
};

/// Newton on the square bordered system in the stacked unknown (u, lambda),
/// started from the predictor.  Never deflated.
inline CorrectorResult corrector(const Problem& problem, const std::vector<PathConstraint>& constraints,
                                 const ExtendedPoint& ext, double ds, const NewtonConfig& newton_cfg) {
  const Eigen::Index n = ext.point.u.size();
  const Eigen::Index p = ext.point.lambda.values().size();
  const auto m = static_cast<Eigen::Index>(constraints.size());
  if (m != p - 1) throw ConfigError("corrector: need exactly p-1 constraints");

  auto residual = [&](const Vector& x) -> Vector {
    const Vector u = x.head(n);
    const Vector lam = x.tail(p);
    Vector r(n + p);
    try {
      problem.check_params(lam);
      r.head(n) = problem.residual(u, lam);
    } catch (const ConfigError&) {
      r.setConstant(std::numeric_limits<double>::infinity());
      return r;
    }
    for (Eigen::Index i = 0; i < m; ++i) r[n + i] = constraints[static_cast<std::size_t>(i)].eval(lam);
    r[n + p - 1] = arclength_constraint(ext, u, lam, ds);
    return r;
  };
  auto jacobian = [&](const Vector& x) -> Matrix {
    const Vector u = x.head(n);
    const Vector lam = x.tail(p);
    Matrix j(n + p, n + p);
    j.topRows(n + m) = tangent_system(problem, u, lam, constraints);
    j.row(n + p - 1) = ext.tangent.stacked().transpose();
    return j;
  };

  const Point pred = predictor(ext, ds);
  Vector x0(n + p);
  x0 << pred.u, pred.lambda.values();

  CorrectorResult out;
  out.newton = newton_solve(residual, jacobian, x0, newton_cfg);
  if (out.converged()) {
    const Vector& x = out.newton.solution;
    out.point = Point{x.head(n), ext.point.lambda.with_values(x.tail(p)), ext.point.s + ds};
  }
  return out;
}

enum class StepStatus { accepted, step_failed };

struct StepResult {
  StepStatus status = StepStatus::step_failed;
  ExtendedPoint ext;      // valid iff accepted
  double ds_used = 0.0;
  int halvings = 0;
  bool accepted() const { return status == StepStatus::accepted; }
};

/// One continuation step: predictor, corrector, tangent at the new point.
/// On corrector failure ds is halved until it would drop below ds_min.
inline StepResult arclength_step(const Problem& problem, const std::vector<PathConstraint>& constraints,
                                 const ExtendedPoint& ext, const ContinuationConfig& cfg, const NewtonConfig& newton_cfg) {
  cfg.validate();
  StepResult out;
  double ds = cfg.ds;
  for (int halvings = 0; ds >= cfg.ds_min; ++halvings, ds *= 0.5) {
    const CorrectorResult c = corrector(problem, constraints, ext, ds, newton_cfg);
    if (!c.converged()) continue;
    Tangent t;
    try {
      t = compute_tangent(problem, c.point, constraints, &ext.tangent, cfg.direction);
    } catch (const NumericalError&) {
      continue;
    }
    out.status = StepStatus::accepted;
    out.ext = ExtendedPoint{c.point, t};
    out.ds_used = ds;
    out.halvings = halvings;
    return out;
  }
  return out;
}

/// Solves G(u, lambda) = 0 at fixed lambda and attaches the oriented tangent.
inline std::optional<ExtendedPoint> start_point(const Problem& problem, const std::vector<PathConstraint>& constraints,
                                                const Vector& u0, const ParamVec& lambda, int direction,
                                                const NewtonConfig& newton_cfg) {
  problem.check_params(lambda.values());
  const Vector& lam = lambda.values();
  const NewtonResult r = newton_solve([&](const Vector& u) { return problem.residual(u, lam); },
                                      [&](const Vector& u) { return problem.jacobian_u(u, lam); }, u0, newton_cfg);
  if (!r.converged()) return std::nullopt;
  Point pt{r.solution, lambda, 0.0};
  try {
    return ExtendedPoint{pt, compute_tangent(problem, pt, constraints, nullptr, direction)};
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

}  // namespace bifurcate
