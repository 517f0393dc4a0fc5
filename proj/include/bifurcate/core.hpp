#pragma once

// Shared value types for the continuation toolkit.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace bifurcate {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown for invalid user-facing configuration (bad ids, bounds, counts).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot produce a meaningful answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Euclidean norm; the single norm convention used throughout.
inline double norm(const Vector& v) { return v.norm(); }

/// Discrete solution values u_h (interior degrees of freedom).
using StateVec = Vector;

/// Parameter vector lambda in R^p with named components.
class ParamVec {
 public:
  ParamVec() = default;
  ParamVec(Vector values, std::vector<std::string> names)
      : values_(std::move(values)), names_(std::move(names)) {
    if (values_.size() < 1) throw ConfigError("ParamVec: need at least one parameter");
    if (static_cast<std::size_t>(values_.size()) != names_.size())
      throw ConfigError("ParamVec: value/name count mismatch");
    if (!all_finite(values_)) throw NumericalError("ParamVec: non-finite entry");
  }

  const Vector& values() const { return values_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  double at(const std::string& name) const { return values_[static_cast<Eigen::Index>(index_of(name))]; }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    throw ConfigError("unknown parameter name '" + name + "'");
  }

  ParamVec with(std::size_t i, double value) const {
    Vector v = values_;
    v[static_cast<Eigen::Index>(i)] = value;
    return ParamVec(std::move(v), names_);
  }
  ParamVec with_values(Vector v) const { return ParamVec(std::move(v), names_); }

 private:
  Vector values_;
  std::vector<std::string> names_;
};

/// Canonical names lambda_1 ... lambda_p.
inline std::vector<std::string> default_param_names(std::size_t p) {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= p; ++i) names.push_back("lambda_" + std::to_string(i));
  return names;
}

/// A point on a solution curve: state, parameters and cumulative arclength.
struct Point {
  StateVec u;
  ParamVec lambda;
  double s = 0.0;
};

/// Unit tangent (du, dlambda) of a solution curve.
class Tangent {
 public:
  Tangent() = default;

  /// Normalizes the stacked vector, so the unit-norm invariant always holds.
  Tangent(const Vector& du, const Vector& dlambda) {
    Vector x(du.size() + dlambda.size());
    x << du, dlambda;
    set_stacked(x, du.size());
  }

  static Tangent from_stacked(const Vector& x, Eigen::Index n_state) {
    Tangent t;
    t.set_stacked(x, n_state);
    return t;
  }

  const Vector& du() const { return du_; }
  const Vector& dlambda() const { return dlambda_; }

  Vector stacked() const {
    Vector x(du_.size() + dlambda_.size());
    x << du_, dlambda_;
    return x;
  }

  double dot(const Tangent& other) const {
    return du_.dot(other.du_) + dlambda_.dot(other.dlambda_);
  }

  Tangent flipped() const {
    Tangent t;
    t.du_ = -du_;
    t.dlambda_ = -dlambda_;
    return t;
  }

 private:
  void set_stacked(const Vector& x, Eigen::Index n_state) {
    if (!all_finite(x)) throw NumericalError("Tangent: non-finite entry");
    const double nx = x.norm();
    if (!(nx > 0.0)) throw NumericalError("Tangent: zero vector");
    Vector y = x / nx;
    // One more pass takes the residual norm error down to a few ulps.
    y /= y.norm();
    du_ = y.head(n_state);
    dlambda_ = y.tail(x.size() - n_state);
  }

  Vector du_;
  Vector dlambda_;
};

struct NewtonConfig {
  double tol = 1e-10;
  int max_iter = 50;

  void validate() const {
    if (!(tol > 0.0)) throw ConfigError("newton.tol must be > 0");
    if (max_iter < 1) throw ConfigError("newton.max_iter must be >= 1");
  }
};

/// Deflation operator settings.  `power` is the exponent, `shift` the additive alpha.
/// `max_iter` caps each deflated Newton solve; deflated iterates travel far
/// before settling, so it is much larger than the plain Newton cap.
struct DeflationConfig {
  double power = 2.0;
  double shift = 1.0;
  int max_solutions = 16;
  int max_iter = 500;

  void validate() const {
    if (!(power > 0.0)) throw ConfigError("deflation.power must be > 0");
    if (!(shift >= 0.0)) throw ConfigError("deflation.shift must be >= 0");
    if (max_solutions < 1) throw ConfigError("deflation.max_solutions must be >= 1");
    if (max_iter < 1) throw ConfigError("deflation.max_iter must be >= 1");
  }

  /// Settings for discovery from a fixed seed: a small shift keeps the
  /// repulsion strong far from known roots.
  static DeflationConfig discovery() {
    DeflationConfig c;
    c.shift = 0.01;
    return c;
  }
};

struct ContinuationConfig {
  double ds = 0.1;
  double ds_min = 0.1 / 16.0;
  int direction = +1;  // sign of the leading parameter's tangent at the first point

  void validate() const {
    if (!(ds_min > 0.0) || !(ds_min <= ds)) throw ConfigError("continuation: need 0 < ds_min <= ds");
    if (direction != 1 && direction != -1) throw ConfigError("continuation.direction must be +1 or -1");
  }

  static ContinuationConfig with_step(double ds, int direction = +1) {
    ContinuationConfig c;
    c.ds = ds;
    c.ds_min = ds / 16.0;
    c.direction = direction;
    return c;
  }
};

/// Closed interval.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

}  // namespace bifurcate
