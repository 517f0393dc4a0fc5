#pragma once

// Parametric nonlinear systems G(u, lambda) = 0 from second-order finite
// differences on the unit interval / unit square.

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "core.hpp"

namespace bifurcate {

/// Uniform grid of interior nodes on [0,1]^dim with Dirichlet elimination.
struct Grid {
  int dim = 1;
  int n_interior = 32;

  double h() const { return 1.0 / (n_interior + 1); }
  int dof_count() const { return dim == 1 ? n_interior : n_interior * n_interior; }

  void validate() const {
    if (dim != 1 && dim != 2) throw ConfigError("grid.dim must be 1 or 2");
    if (n_interior < 1) throw ConfigError("grid.n_interior must be >= 1");
  }
};

/// Dense second-order Laplacian with homogeneous Dirichlet rows eliminated.
/// 2D uses the Kronecker sum I (x) L1 + L1 (x) I, node index = iy * n + ix.
inline Matrix build_laplacian(const Grid& grid) {
  grid.validate();
  const int n = grid.n_interior;
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  Matrix l1 = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    l1(i, i) = -2.0 * inv_h2;
    if (i > 0) l1(i, i - 1) = inv_h2;
    if (i + 1 < n) l1(i, i + 1) = inv_h2;
  }
  if (grid.dim == 1) return l1;

  const int m = n * n;
  Matrix l2 = Matrix::Zero(m, m);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const int row = iy * n + ix;
      for (int k = 0; k < n; ++k) {
        l2(row, iy * n + k) += l1(ix, k);
        l2(row, k * n + ix) += l1(iy, k);
      }
    }
  return l2;
}

/// Laplacian on [0,1] with u'(0) = 0 (ghost-node mirror) and u(1) = 0.
/// Unknowns sit at x_j = j/n, j = 0..n-1.
inline Matrix build_mixed_laplacian(int n) {
  if (n < 2) throw ConfigError("mixed Laplacian needs at least 2 nodes");
  const double h = 1.0 / n;
  const double inv_h2 = 1.0 / (h * h);
  Matrix l = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    l(i, i) = -2.0 * inv_h2;
    if (i > 0) l(i, i - 1) = inv_h2;
    if (i + 1 < n) l(i, i + 1) = inv_h2;
  }
  l(0, 1) = 2.0 * inv_h2;
  return l;
}

/// Behavioral contract for a discretized parametric system.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string id() const = 0;
  virtual std::size_t dof_count() const = 0;
  virtual std::size_t param_count() const = 0;

  virtual Vector residual(const Vector& u, const Vector& lambda) const = 0;
  virtual Matrix jacobian_u(const Vector& u, const Vector& lambda) const = 0;
  /// dG/dlambda_i, i zero-based.
  virtual Vector jacobian_lambda(const Vector& u, const Vector& lambda, std::size_t i) const = 0;
  /// Scalar diagram quantity q(u).  Takes lambda because the probe location may scale with it.
  virtual double output(const Vector& u, const Vector& lambda) const = 0;

  virtual std::vector<Interval> param_bounds() const = 0;
  virtual Vector default_params() const = 0;

  /// Deterministic initial guess used when searching for new solutions.
  virtual Vector discovery_seed() const { return Vector::Zero(static_cast<Eigen::Index>(dof_count())); }

  /// Throws ConfigError when lambda is outside the model's domain of definition.
  virtual void check_params(const Vector& lambda) const {
    if (static_cast<std::size_t>(lambda.size()) != param_count())
      throw ConfigError(id() + ": expected " + std::to_string(param_count()) + " parameters");
  }

  std::vector<std::string> param_names() const { return default_param_names(param_count()); }
  ParamVec make_params(const Vector& values) const { return ParamVec(values, param_names()); }

  /// Full Jacobian [G_u, G_lambda] of size N x (N + p).
  Matrix jacobian_full(const Vector& u, const Vector& lambda) const {
    const auto n = static_cast<Eigen::Index>(dof_count());
    const auto p = static_cast<Eigen::Index>(param_count());
    Matrix j(n, n + p);
    j.leftCols(n) = jacobian_u(u, lambda);
    for (Eigen::Index i = 0; i < p; ++i) j.col(n + i) = jacobian_lambda(u, lambda, static_cast<std::size_t>(i));
    return j;
  }
};

using ProblemPtr = std::shared_ptr<const Problem>;

namespace detail {

// Nearest interior node to reference coordinate x (nodes at (i+1)h); ties go to the lower index.
inline int nearest_node(double x, int n) {
  const double t = x * (n + 1) - 1.0;
  int lo = static_cast<int>(std::floor(t));
  int pick = (t - lo <= (lo + 1) - t) ? lo : lo + 1;
  if (pick < 0) pick = 0;
  if (pick > n - 1) pick = n - 1;
  return pick;
}

inline double signed_sup(const Vector& u, Eigen::Index probe) {
  const double sup = u.cwiseAbs().maxCoeff();
  return u[probe] < 0.0 ? -sup : sup;
}

// Small, deliberately asymmetric bump built from the first few sine modes,
// so that Newton iterates are not confined to a symmetry subspace.
inline Vector mode_mix_seed(const Grid& grid, double amplitude) {
  const int n = grid.n_interior;
  const double h = grid.h();
  const double pi = std::numbers::pi;
  auto prof = [&](double x) {
    return std::sin(pi * x) + 0.6 * std::sin(2 * pi * x) + 0.35 * std::sin(3 * pi * x) +
           0.2 * std::sin(4 * pi * x);
  };
  auto prof_y = [&](double y) {
    return std::sin(pi * y) + 0.45 * std::sin(2 * pi * y) + 0.3 * std::sin(3 * pi * y) +
           0.15 * std::sin(4 * pi * y);
  };
  Vector v(grid.dof_count());
  if (grid.dim == 1) {
    for (int i = 0; i < n; ++i) v[i] = amplitude * prof((i + 1) * h);
  } else {
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) v[iy * n + ix] = amplitude * prof((ix + 1) * h) * prof_y((iy + 1) * h);
  }
  return v;
}

}  // namespace detail

/// lambda_2 * Lap(u) + lambda_1 * exp(u) = 0 with u = lambda_3 on the boundary.
class BratuProblem final : public Problem {
 public:
  explicit BratuProblem(Grid grid) : grid_(grid), lap_(build_laplacian(grid)), bdry_(boundary_pattern(grid)) {}

  std::string id() const override { return grid_.dim == 1 ? "bratu1d" : "bratu2d"; }
  std::size_t dof_count() const override { return static_cast<std::size_t>(grid_.dof_count()); }
  std::size_t param_count() const override { return 3; }
  const Grid& grid() const { return grid_; }

  Vector residual(const Vector& u, const Vector& lam) const override {
    Vector g = lam[1] * (lap_ * u + lam[2] * bdry_) + lam[0] * u.array().exp().matrix();
    return g;
  }

  Matrix jacobian_u(const Vector& u, const Vector& lam) const override {
    Matrix j = lam[1] * lap_;
    j.diagonal() += lam[0] * u.array().exp().matrix();
    return j;
  }

  Vector jacobian_lambda(const Vector& u, const Vector& lam, std::size_t i) const override {
    switch (i) {
      case 0: return u.array().exp().matrix();
      case 1: return lap_ * u + lam[2] * bdry_;
      case 2: return lam[1] * bdry_;
      default: throw ConfigError("bratu: parameter index out of range");
    }
  }

  double output(const Vector& u, const Vector&) const override { return u.cwiseAbs().maxCoeff(); }

  std::vector<Interval> param_bounds() const override {
    if (grid_.dim == 1) return {{0.0, 4.0}, {0.0, 10.0}, {0.0, 1.5}};
    return {{0.0, 7.0}, {0.0, 6.0}, {0.0, 1.5}};
  }
  Vector default_params() const override { return Eigen::Vector3d(1.0, 1.0, 0.0); }

 private:
  // Row j holds (number of boundary neighbours of node j) / h^2.
  static Vector boundary_pattern(const Grid& grid) {
    const int n = grid.n_interior;
    const double inv_h2 = 1.0 / (grid.h() * grid.h());
    Vector b = Vector::Zero(grid.dof_count());
    auto edge = [n](int i) { return (i == 0 ? 1 : 0) + (i == n - 1 ? 1 : 0); };
    if (grid.dim == 1) {
      for (int i = 0; i < n; ++i) b[i] = edge(i) * inv_h2;
    } else {
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) b[iy * n + ix] = (edge(ix) + edge(iy)) * inv_h2;
    }
    return b;
  }

  Grid grid_;
  Matrix lap_;
  Vector bdry_;
};

/// lambda_2 Lap(u) - u (u^2 - lambda_1) = 0 on [0, lambda_3]^d, homogeneous Dirichlet.
/// Realized on the reference square with coefficient lambda_2 / lambda_3^2.
class AllenCahnProblem final : public Problem {
 public:
  explicit AllenCahnProblem(Grid grid) : grid_(grid), lap_(build_laplacian(grid)) {}

  std::string id() const override { return grid_.dim == 1 ? "allencahn1d" : "allencahn2d"; }
  std::size_t dof_count() const override { return static_cast<std::size_t>(grid_.dof_count()); }
  std::size_t param_count() const override { return 3; }
  const Grid& grid() const { return grid_; }

  void check_params(const Vector& lam) const override {
    Problem::check_params(lam);
    if (!(lam[2] > 0.0)) throw ConfigError("allencahn: lambda_3 (domain length) must be > 0");
  }

  Vector residual(const Vector& u, const Vector& lam) const override {
    const double coef = lam[1] / (lam[2] * lam[2]);
    return coef * (lap_ * u) - (u.array() * (u.array().square() - lam[0])).matrix();
  }

  Matrix jacobian_u(const Vector& u, const Vector& lam) const override {
    const double coef = lam[1] / (lam[2] * lam[2]);
    Matrix j = coef * lap_;
    j.diagonal() -= (3.0 * u.array().square() - lam[0]).matrix();
    return j;
  }

  Vector jacobian_lambda(const Vector& u, const Vector& lam, std::size_t i) const override {
    switch (i) {
      case 0: return u;
      case 1: return (lap_ * u) / (lam[2] * lam[2]);
      case 2: return (-2.0 * lam[1] / (lam[2] * lam[2] * lam[2])) * (lap_ * u);
      default: throw ConfigError("allencahn: parameter index out of range");
    }
  }

  double output(const Vector& u, const Vector& lam) const override { return detail::signed_sup(u, probe_index(lam[2])); }

  /// Node nearest to x = 2.19 / lambda_3 (1D) or (0.02, 2.19) / lambda_3 (2D).
  Eigen::Index probe_index(double lambda3) const {
    const int n = grid_.n_interior;
    const int iy = detail::nearest_node(2.19 / lambda3, n);
    if (grid_.dim == 1) return iy;
    const int ix = detail::nearest_node(0.02 / lambda3, n);
    return iy * n + ix;
  }

  std::vector<Interval> param_bounds() const override {
    const double pi = std::numbers::pi;
    if (grid_.dim == 1) return {{0.0, 14.0}, {1.0, 10.0}, {pi, 3.8}};
    return {{0.0, 12.0}, {1.0, 8.0}, {pi, 3.8}};
  }
  Vector default_params() const override { return Eigen::Vector3d(0.0, 1.0, std::numbers::pi); }
  Vector discovery_seed() const override { return detail::mode_mix_seed(grid_, 0.3); }

 private:
  Grid grid_;
  Matrix lap_;
};

/// rho(lambda_2) u'' - u (u^2 - lambda_1) = 0 on [0,1], u'(0) = 0, u(1) = 0,
/// rho(l) = -(l - 1)^2 + 3.
class ModifiedAllenCahnProblem final : public Problem {
 public:
  explicit ModifiedAllenCahnProblem(Grid grid) : grid_(grid) {
    if (grid.dim != 1) throw ConfigError("allencahn-mod1d is defined for d = 1 only");
    grid.validate();
    lap_ = build_mixed_laplacian(grid.n_interior);
  }

  static double rho(double l2) { return -(l2 - 1.0) * (l2 - 1.0) + 3.0; }
  static double drho(double l2) { return -2.0 * (l2 - 1.0); }

  std::string id() const override { return "allencahn-mod1d"; }
  std::size_t dof_count() const override { return static_cast<std::size_t>(grid_.n_interior); }
  std::size_t param_count() const override { return 2; }
  const Matrix& laplacian() const { return lap_; }

  Vector residual(const Vector& u, const Vector& lam) const override {
    return rho(lam[1]) * (lap_ * u) - (u.array() * (u.array().square() - lam[0])).matrix();
  }

  Matrix jacobian_u(const Vector& u, const Vector& lam) const override {
    Matrix j = rho(lam[1]) * lap_;
    j.diagonal() -= (3.0 * u.array().square() - lam[0]).matrix();
    return j;
  }

  Vector jacobian_lambda(const Vector& u, const Vector& lam, std::size_t i) const override {
    switch (i) {
      case 0: return u;
      case 1: return drho(lam[1]) * (lap_ * u);
      default: throw ConfigError("allencahn-mod1d: parameter index out of range");
    }
  }

  double output(const Vector& u, const Vector&) const override { return detail::signed_sup(u, 0); }

  std::vector<Interval> param_bounds() const override { return {{0.0, 10.0}, {0.0, 2.0}}; }
  Vector default_params() const override { return Eigen::Vector2d(0.0, 1.0); }
  Vector discovery_seed() const override {
    // Neumann end at x = 0: use cosine-type profile plus an asymmetric component.
    const int n = grid_.n_interior;
    const double pi = std::numbers::pi;
    Vector v(n);
    for (int j = 0; j < n; ++j) {
      const double x = static_cast<double>(j) / n;
      v[j] = 0.3 * (std::cos(0.5 * pi * x) + 0.5 * std::cos(1.5 * pi * x) + 0.25 * std::cos(2.5 * pi * x));
    }
    return v;
  }

 private:
  Grid grid_;
  Matrix lap_;
};

/// Registered ids: bratu1d, bratu2d, allencahn1d, allencahn2d, allencahn-mod1d.
/// n_interior <= 0 selects the default resolution (32 nodes in 1D, 8x8 in 2D).
inline ProblemPtr make_problem(const std::string& id, int n_interior = 0) {
  auto grid = [n_interior](int dim) {
    Grid g{dim, n_interior > 0 ? n_interior : (dim == 1 ? 32 : 8)};
    g.validate();
    return g;
  };
  if (id == "bratu1d") return std::make_shared<BratuProblem>(grid(1));
  if (id == "bratu2d") return std::make_shared<BratuProblem>(grid(2));
  if (id == "allencahn1d") return std::make_shared<AllenCahnProblem>(grid(1));
  if (id == "allencahn2d") return std::make_shared<AllenCahnProblem>(grid(2));
  if (id == "allencahn-mod1d") return std::make_shared<ModifiedAllenCahnProblem>(grid(1));
  throw ConfigError("unknown problem id '" + id + "'");
}

inline std::vector<std::string> problem_ids() {
  return {"bratu1d", "bratu2d", "allencahn1d", "allencahn2d", "allencahn-mod1d"};
}

}  // namespace bifurcate
