#pragma once

// Deflation: rescale G by eta(u) = prod_i (||u - u_i||^-power + shift) so that
// Newton is repelled from known roots u_i.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "core.hpp"
#include "newton.hpp"
#include "problems.hpp"

namespace bifurcate {

/// Two states closer than this are the same solution.
inline constexpr double kDistinctTol = 1e-6;

/// Known solutions at one parameter value.  Members are pairwise distinct.
class DeflationSet {
 public:
  DeflationSet() = default;
  explicit DeflationSet(DeflationConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  const DeflationConfig& config() const { return cfg_; }
  const std::vector<Vector>& known() const { return known_; }
  std::size_t size() const { return known_.size(); }
  bool empty() const { return known_.empty(); }

  /// Distance to the nearest known solution (infinity for an empty set).
  double distance(const Vector& u) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& k : known_) best = std::min(best, (u - k).norm());
    return best;
  }
  bool contains(const Vector& u) const { return distance(u) <= kDistinctTol; }

  /// Adds u unless it duplicates a member; returns whether it was added.
  bool add(const Vector& u) {
    if (!all_finite(u)) throw NumericalError("DeflationSet: non-finite solution");
    if (contains(u)) return false;
    known_.push_back(u);
    return true;
  }

 private:
  DeflationConfig cfg_;
  std::vector<Vector> known_;
};

/// Thrown when a deflation quantity is evaluated exactly at a known root.
class AtDeflatedRoot : public NumericalError {
 public:
  AtDeflatedRoot() : NumericalError("at deflated root") {}
};

/// Thrown when 1 - d vanishes in the rescaled step.
class DeflationStepSingular : public NumericalError {
 public:
  DeflationStepSingular() : NumericalError("deflation step singular") {}
};

/// eta(u) = prod_i (||u - u_i||^-power + shift); 1 for an empty set.
inline double deflation_factor(const Vector& u, const DeflationSet& set) {
  const auto& cfg = set.config();
  double eta = 1.0;
  for (const auto& k : set.known()) {
    const double r = (u - k).norm();
    if (r == 0.0) throw AtDeflatedRoot();
    eta *= std::pow(r, -cfg.power) + cfg.shift;
  }
  return eta;
}

/// grad eta = eta * sum_i [-power r_i^(-power-2) / (r_i^-power + shift)] (u - u_i).
inline Vector deflation_gradient(const Vector& u, const DeflationSet& set) {
  const auto& cfg = set.config();
  Vector acc = Vector::Zero(u.size());
  for (const auto& k : set.known()) {
    const Vector diff = u - k;
    const double r = diff.norm();
    if (r == 0.0) throw AtDeflatedRoot();
    const double m = std::pow(r, -cfg.power) + cfg.shift;
    acc += (-cfg.power * std::pow(r, -cfg.power - 2.0) / m) * diff;
  }
  return deflation_factor(u, set) * acc;
}

/// Newton step of F = eta G recovered from the undeflated step by a scalar:
/// d = grad(eta).du / eta, returns du / (1 - d)  (= (1 + d/(1-d)) du).
inline Vector deflated_newton_step(const Vector& delta_u_g, const Vector& u, const DeflationSet& set) {
  if (set.empty()) return delta_u_g;
  const double eta = deflation_factor(u, set);
  const double d = deflation_gradient(u, set).dot(delta_u_g) / eta;
  if (std::abs(1.0 - d) < 1e-12) throw DeflationStepSingular();
  const double tau = 1.0 + d / (1.0 - d);
  return tau * delta_u_g;
}

/// Newton on G(., lambda) with every step deflated against `set`.  Convergence
/// is judged on the undeflated residual plus distinctness from the set.  With a
/// non-empty set the iteration cap is the larger of newton_cfg.max_iter and
/// the set's deflation max_iter.
inline NewtonResult deflated_solve(const Problem& problem, const Vector& lambda, const Vector& u0,
                                   const DeflationSet& set, const NewtonConfig& newton_cfg) {
  problem.check_params(lambda);
  auto res = [&](const Vector& u) { return problem.residual(u, lambda); };
  auto jac = [&](const Vector& u) { return problem.jacobian_u(u, lambda); };
  auto map_step = [&](const Vector& u, const Vector& du) -> std::optional<Vector> {
    try {
      return deflated_newton_step(du, u, set);
    } catch (const NumericalError&) {
      return std::nullopt;
    }
  };
  auto accept = [&](const Vector& u) { return set.distance(u) > kDistinctTol; };
  NewtonConfig cfg = newton_cfg;
  if (!set.empty()) cfg.max_iter = std::max(cfg.max_iter, set.config().max_iter);
  return detail::newton_loop(res, jac, u0, cfg, map_step, accept, [](int, const Vector&, double) {});
}

/// Grows `set` with new solutions found by restarting deflated Newton from u0,
/// until a solve fails or the set holds cfg.max_solutions members.  Returns the
/// newly found solutions in discovery order.
inline std::vector<Vector> discover_more(const Problem& problem, const Vector& lambda, const Vector& u0,
                                         DeflationSet& set, const NewtonConfig& newton_cfg) {
  std::vector<Vector> found;
  while (set.size() < static_cast<std::size_t>(set.config().max_solutions)) {
    const NewtonResult r = deflated_solve(problem, lambda, u0, set, newton_cfg);
    if (!r.converged() || !set.add(r.solution)) break;
    found.push_back(r.solution);
  }
  return found;
}

/// All distinct solutions reachable from u0 by repeated deflation (the first
/// solve is undeflated).  Empty when even that first solve fails.
inline std::vector<Vector> discover_all(const Problem& problem, const Vector& lambda, const Vector& u0,
                                        const DeflationConfig& cfg, const NewtonConfig& newton_cfg) {
  DeflationSet set(cfg);
  return discover_more(problem, lambda, u0, set, newton_cfg);
}

}  // namespace bifurcate
