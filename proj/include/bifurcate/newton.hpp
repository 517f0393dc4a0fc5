#pragma once

// Dense Newton iteration for square nonlinear systems.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "core.hpp"

namespace bifurcate {

enum class NewtonStatus { converged, diverged, max_iter_exceeded, singular_jacobian };

inline const char* to_string(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::converged: return "converged";
    case NewtonStatus::diverged: return "diverged";
    case NewtonStatus::max_iter_exceeded: return "max_iter_exceeded";
    case NewtonStatus::singular_jacobian: return "singular_jacobian";
  }
  return "unknown";
}

struct NewtonResult {
  NewtonStatus status = NewtonStatus::diverged;
  Vector solution;  // meaningful only when converged
  int iterations = 0;
  double final_residual_norm = std::numeric_limits<double>::infinity();

  bool converged() const { return status == NewtonStatus::converged; }
};

/// Iterates/residuals above this magnitude count as divergence.
inline constexpr double kDivergenceBound = 1e12;
/// Relative pivot threshold for declaring an LU factorization singular.
inline constexpr double kSingularPivot = 1e-14;

/// LU with partial pivoting plus a relative pivot check.
class DenseLU {
 public:
  explicit DenseLU(const Matrix& a) : lu_(a) {
    const double scale = a.cwiseAbs().maxCoeff();
    const double min_pivot = lu_.matrixLU().diagonal().cwiseAbs().minCoeff();
    singular_ = !(std::isfinite(scale)) || !(min_pivot >= kSingularPivot * scale) || scale == 0.0;
  }
  bool singular() const { return singular_; }
  Vector solve(const Vector& b) const { return lu_.solve(b); }
  Matrix solve(const Matrix& b) const { return lu_.solve(b); }

 private:
  Eigen::PartialPivLU<Matrix> lu_;
  bool singular_ = false;
};

namespace detail {

/// Shared Newton loop.  `map_step(u, du)` may rescale the raw Newton step and
/// returns nullopt to abort as diverged; `accept(u)` gives an extra acceptance
/// test on top of the residual tolerance.
template <class Residual, class Jacobian, class MapStep, class Accept, class Observer>
NewtonResult newton_loop(Residual&& residual, Jacobian&& jacobian, const Vector& u0, const NewtonConfig& cfg,
                         MapStep&& map_step, Accept&& accept, Observer&& observe) {
  cfg.validate();
  NewtonResult out;
  Vector u = u0;
  auto diverging = [](const Vector& v) { return !all_finite(v) || v.norm() > kDivergenceBound; };

  if (diverging(u)) {
    out.status = NewtonStatus::diverged;
    return out;
  }
  for (int it = 0;; ++it) {
    const Vector g = residual(u);
    const double gnorm = all_finite(g) ? g.norm() : std::numeric_limits<double>::infinity();
    out.iterations = it;
    out.final_residual_norm = gnorm;
    observe(it, u, gnorm);
    if (!std::isfinite(gnorm) || gnorm > kDivergenceBound) {
      out.status = NewtonStatus::diverged;
      return out;
    }
    if (gnorm <= cfg.tol && accept(u)) {
      out.status = NewtonStatus::converged;
      out.solution = u;
      return out;
    }
    if (it >= cfg.max_iter) {
      out.status = NewtonStatus::max_iter_exceeded;
      return out;
    }
    const DenseLU lu(jacobian(u));
    if (lu.singular()) {
      out.status = NewtonStatus::singular_jacobian;
      return out;
    }
    const Vector du = lu.solve(Vector(-g));
    std::optional<Vector> step = map_step(u, du);
    if (!step || diverging(*step)) {
      out.status = NewtonStatus::diverged;
      return out;
    }
    u += *step;
    if (diverging(u)) {
      out.status = NewtonStatus::diverged;
      out.iterations = it + 1;
      return out;
    }
  }
}

}  // namespace detail

using IterationObserver = std::function<void(int iteration, const Vector& u, double residual_norm)>;

/// Plain Newton: J(u) du = -G(u), u += du, until ||G(u)|| <= tol.
template <class Residual, class Jacobian>
NewtonResult newton_solve(Residual&& residual, Jacobian&& jacobian, const Vector& u0, const NewtonConfig& cfg,
                          const IterationObserver& observe = {}) {
  return detail::newton_loop(
      residual, jacobian, u0, cfg, [](const Vector&, const Vector& du) { return std::optional<Vector>(du); },
      [](const Vector&) { return true; },
      [&](int it, const Vector& u, double r) {
        if (observe) observe(it, u, r);
      });
}

}  // namespace bifurcate
