#pragma once

// Reference values for the test suite, computed without the continuation or
// deflation machinery: only problem residuals/Jacobians and plain Newton.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "core.hpp"
#include "newton.hpp"
#include "problems.hpp"

namespace bifurcate {

struct OracleReport {
  std::string quantity;
  double value = 0.0;
  std::string method;
  std::string resolution;
};

struct EigenOracleResult {
  std::vector<double> values;       // distinct, ascending
  std::vector<int> multiplicities;  // same length as values
};

/// lambda_1 values at which G_u(0, lambda) is singular, for problems whose
/// Jacobian at u = 0 has the form A + lambda_1 I.  Eigenvalues within a
/// relative 1e-8 of each other are merged and counted.
inline EigenOracleResult eigen_bifurcation_oracle(const Problem& problem, const Vector& lambda) {
  const auto n = static_cast<Eigen::Index>(problem.dof_count());
  const Vector zero = Vector::Zero(n);
  Vector l0 = lambda;
  l0[0] = 0.0;
  Vector l1 = lambda;
  l1[0] = 1.0;
  const Matrix a = problem.jacobian_u(zero, l0);
  const Matrix d = problem.jacobian_u(zero, l1) - a;
  if ((d - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError("eigen oracle: jacobian at u=0 is not affine in lambda_1 with unit slope");

  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigen oracle: eigen-decomposition failed");
  const double scale = a.cwiseAbs().maxCoeff();
  std::vector<double> crit;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto mu = es.eigenvalues()[i];
    if (std::abs(mu.imag()) > 1e-9 * scale) throw NumericalError("eigen oracle: complex spectrum");
    crit.push_back(-mu.real());
  }
  std::sort(crit.begin(), crit.end());

  EigenOracleResult out;
  for (double v : crit) {
    if (!out.values.empty() && std::abs(v - out.values.back()) <= 1e-8 * std::max(1.0, std::abs(v))) {
      ++out.multiplicities.back();
    } else {
      out.values.push_back(v);
      out.multiplicities.push_back(1);
    }
  }
  return out;
}

/// Existence boundary in lambda_1: the largest lambda_1 in [lo, hi] for which
/// Newton from u = 0 converges, to within `resolution`.  The predicate is
/// sampled on `samples` points first and must switch from true to false once.
inline double fold_bisection_oracle(const Problem& problem, const Vector& lambda, double lo, double hi,
                                    double resolution = 1e-4, int samples = 64) {
  if (!(lo < hi) || !(resolution > 0.0) || samples < 2) throw ConfigError("fold oracle: bad interval");
  const auto n = static_cast<Eigen::Index>(problem.dof_count());
  NewtonConfig cfg;
  cfg.tol = 1e-10;
  cfg.max_iter = 200;
  auto converges = [&](double l1) {
    Vector lam = lambda;
    lam[0] = l1;
    return newton_solve([&](const Vector& u) { return problem.residual(u, lam); },
                        [&](const Vector& u) { return problem.jacobian_u(u, lam); }, Vector::Zero(n), cfg)
        .converged();
  };

  std::vector<bool> pred;
  for (int i = 0; i < samples; ++i) pred.push_back(converges(lo + (hi - lo) * i / (samples - 1)));
  int switches = 0;
  for (int i = 1; i < samples; ++i) switches += pred[i] != pred[i - 1];
  if (!pred.front() || pred.back() || switches != 1)
    throw NumericalError("fold oracle: existence predicate is not monotone on [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
  int k = 0;
  while (pred[k + 1]) ++k;
  double a = lo + (hi - lo) * k / (samples - 1);
  double b = lo + (hi - lo) * (k + 1) / (samples - 1);
  while (b - a > resolution) {
    const double m = 0.5 * (a + b);
    (converges(m) ? a : b) = m;
  }
  return 0.5 * (a + b);
}

inline std::vector<OracleReport> eigen_reports(const EigenOracleResult& r, std::size_t count) {
  std::vector<OracleReport> out;
  for (std::size_t i = 0; i < std::min(count, r.values.size()); ++i)
    out.push_back({"lambda_1 bifurcation " + std::to_string(i + 1) + " (multiplicity " +
                       std::to_string(r.multiplicities[i]) + ")",
                   r.values[i], "eigenvalues of G_u(0, lambda) at lambda_1 = 0", "dense, full spectrum"});
  return out;
}

}  // namespace bifurcate
