#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <bifurcate/deflation.hpp>

#include "toy_problems.hpp"

using namespace bifurcate;

namespace {

DeflationSet make_set(std::initializer_list<Vector> pts, DeflationConfig cfg = {}) {
  DeflationSet s(cfg);
  for (const auto& p : pts) s.add(p);
  return s;
}

// Deflated Newton step by direct assembly of J_F = eta J_G + G grad(eta)^T.
Vector direct_step(const Matrix& jg, const Vector& g, const Vector& u, const DeflationSet& set) {
  const double eta = deflation_factor(u, set);
  const Vector grad = deflation_gradient(u, set);
  const Matrix jf = eta * jg + g * grad.transpose();
  return jf.partialPivLu().solve(Vector(-eta * g));
}

bool same_set(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  if (a.size() != b.size()) return false;
  return std::all_of(a.begin(), a.end(), [&](const Vector& x) {
    return std::any_of(b.begin(), b.end(), [&](const Vector& y) { return (x - y).norm() <= 1e-6; });
  });
}

}  // namespace

TEST(DeflationFactor, Examples) {
  EXPECT_DOUBLE_EQ(deflation_factor(Eigen::Vector2d(0.5, 0), make_set({Eigen::Vector2d(0, 0)})), 5.0);
  EXPECT_DOUBLE_EQ(deflation_factor(Eigen::Vector2d(0, 0), make_set({Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 2)})),
                   2.5);
  EXPECT_DOUBLE_EQ(deflation_factor(Eigen::Vector2d(3, 1), DeflationSet{}), 1.0);
  EXPECT_THROW(deflation_factor(Eigen::Vector2d(1, 0), make_set({Eigen::Vector2d(1, 0)})), AtDeflatedRoot);
}

TEST(DeflationGradient, ExampleAndFiniteDifferences) {
  EXPECT_EQ(deflation_gradient(Eigen::Vector2d(1, 2), DeflationSet{}), Vector::Zero(2));
  const auto one = make_set({Eigen::Vector2d(0, 0)});
  const Vector g = deflation_gradient(Eigen::Vector2d(0.5, 0), one);
  EXPECT_NEAR(g[0], -16.0, 1e-12);
  EXPECT_NEAR(g[1], 0.0, 1e-12);

  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    DeflationConfig cfg;
    cfg.power = 1 + trial % 3;
    cfg.shift = 0.5 * (trial % 4);
    DeflationSet s(cfg);
    for (int k = 0; k < 1 + trial % 3; ++k) s.add(Vector::NullaryExpr(4, [&] { return nd(rng); }));
    const Vector u = Vector::NullaryExpr(4, [&] { return nd(rng); });
    const Vector an = deflation_gradient(u, s);
    for (Eigen::Index i = 0; i < 4; ++i) {
      Vector a = u, b = u;
      a[i] += 1e-6;
      b[i] -= 1e-6;
      const double fd = (deflation_factor(a, s) - deflation_factor(b, s)) / 2e-6;
      EXPECT_NEAR(an[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
    // repulsive: each term pulls grad eta opposite to (u - u_i)
    if (s.size() == 1) EXPECT_LT(an.dot(u - s.known()[0]), 0.0);
  }
}

TEST(DeflatedStep, TrivialCases) {
  const Vector du = Eigen::Vector2d(0.3, -0.7);
  EXPECT_EQ(deflated_newton_step(du, Eigen::Vector2d(1, 1), DeflationSet{}), du);
  // du orthogonal to grad eta (u - u1 along e1, du along e2) gives tau = 1
  const auto s = make_set({Eigen::Vector2d(0, 0)});
  const Vector step = deflated_newton_step(Eigen::Vector2d(0, 0.4), Eigen::Vector2d(0.5, 0), s);
  EXPECT_NEAR((step - Eigen::Vector2d(0, 0.4)).norm(), 0.0, 1e-15);
}

TEST(DeflatedStep, ShermanMorrisonMatchesDirectAssembly) {
  std::mt19937 rng(11);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> dim(1, 8), count(1, 3);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(rng);
    const Matrix jg = Matrix::NullaryExpr(n, n, [&] { return nd(rng); }) + 3.0 * Matrix::Identity(n, n);
    const Vector g = Vector::NullaryExpr(n, [&] { return nd(rng); });
    const Vector u = Vector::NullaryExpr(n, [&] { return nd(rng); });
    DeflationSet s;
    const int m = count(rng);
    for (int k = 0; k < m; ++k) s.add(Vector::NullaryExpr(n, [&] { return nd(rng); }));
    const Vector dug = jg.partialPivLu().solve(Vector(-g));
    const Vector sm = deflated_newton_step(dug, u, s);
    const Vector direct = direct_step(jg, g, u, s);
    EXPECT_LE((sm - direct).norm(), 1e-10 * direct.norm()) << "trial " << trial;
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}

TEST(DeflatedSolve, ScalarFindsOtherRoot) {
  const bifurcate::testing::SquareProblem p(1.0);
  const auto s = make_set({Vector::Constant(1, 1.0)});
  const auto r = deflated_solve(p, Vector::Zero(1), Vector::Constant(1, 0.9), s, NewtonConfig{});
  ASSERT_TRUE(r.converged());
  EXPECT_NEAR(r.solution[0], -1.0, 1e-10);
}

TEST(DeflatedSolve, EmptySetMatchesPlainNewton) {
  const auto p = make_problem("bratu1d");
  const Eigen::Vector3d lam(2, 1, 0);
  std::vector<Vector> plain;
  const Vector u0 = Vector::Constant(32, 0.2);
  newton_solve([&](const Vector& u) { return p->residual(u, lam); },
               [&](const Vector& u) { return p->jacobian_u(u, lam); }, u0, NewtonConfig{},
               [&](int, const Vector& u, double) { plain.push_back(u); });
  const auto r = deflated_solve(*p, lam, u0, DeflationSet{}, NewtonConfig{});
  ASSERT_TRUE(r.converged());
  EXPECT_EQ(r.solution, plain.back());
  EXPECT_EQ(static_cast<std::size_t>(r.iterations) + 1, plain.size());
}

TEST(DeflatedSolve, BratuSecondSolution) {
  const auto p = make_problem("bratu1d");
  const Eigen::Vector3d lam(1, 1, 0);
  const Vector z = Vector::Zero(32);
  const auto lower = newton_solve([&](const Vector& u) { return p->residual(u, lam); },
                                  [&](const Vector& u) { return p->jacobian_u(u, lam); }, z, NewtonConfig{});
  ASSERT_TRUE(lower.converged());
  DeflationSet s(DeflationConfig::discovery());
  s.add(lower.solution);
  const auto upper = deflated_solve(*p, lam, z, s, NewtonConfig{});
  ASSERT_TRUE(upper.converged());
  EXPECT_GT((upper.solution - lower.solution).norm(), 1e-6);
  EXPECT_GT(upper.solution.cwiseAbs().maxCoeff(), lower.solution.cwiseAbs().maxCoeff());
  EXPECT_LE(p->residual(upper.solution, lam).norm(), 1e-10);
}

TEST(DiscoverAll, AllenCahnBelowFirstBifurcation) {
  const auto p = make_problem("allencahn1d");
  const auto sols = discover_all(*p, Eigen::Vector3d(0.5, 1, std::numbers::pi), Vector::Zero(32),
                                 DeflationConfig::discovery(), NewtonConfig{});
  ASSERT_EQ(sols.size(), 1u);
  EXPECT_LE(sols[0].norm(), 1e-10);
}

TEST(DiscoverAll, BratuBeyondFoldIsEmpty) {
  const auto p = make_problem("bratu1d");
  EXPECT_TRUE(discover_all(*p, Eigen::Vector3d(5, 1, 0), Vector::Zero(32), DeflationConfig{}, NewtonConfig{}).empty());
}

TEST(DiscoverAll, SolutionsAreDistinctRoots) {
  const auto p = make_problem("allencahn1d");
  const Eigen::Vector3d lam(13, 1, std::numbers::pi);
  const auto sols = discover_all(*p, lam, p->discovery_seed(), DeflationConfig::discovery(), NewtonConfig{});
  ASSERT_GE(sols.size(), 3u);
  for (std::size_t i = 0; i < sols.size(); ++i) {
    EXPECT_LE(p->residual(sols[i], lam).norm(), 1e-10);
    for (std::size_t j = 0; j < i; ++j) EXPECT_GT((sols[i] - sols[j]).norm(), kDistinctTol);
  }
}

TEST(DiscoverAll, SetInvariantUnderOrderOfFirstTwo) {
  const auto p = make_problem("allencahn1d");
  const Eigen::Vector3d lam(13, 1, std::numbers::pi);
  const Vector seed = p->discovery_seed();
  const DeflationConfig cfg = DeflationConfig::discovery();
  const auto ref = discover_all(*p, lam, seed, cfg, NewtonConfig{});
  ASSERT_GE(ref.size(), 3u);
  DeflationSet swapped(cfg);
  swapped.add(ref[1]);
  swapped.add(ref[0]);
  discover_more(*p, lam, seed, swapped, NewtonConfig{});
  EXPECT_TRUE(same_set(ref, swapped.known())) << ref.size() << " vs " << swapped.size();
}

TEST(DeflationSet, Deduplicates) {
  DeflationSet s;
  EXPECT_TRUE(s.add(Eigen::Vector2d(1, 0)));
  EXPECT_FALSE(s.add(Eigen::Vector2d(1 + 1e-9, 0)));
  EXPECT_TRUE(s.add(Eigen::Vector2d(1 + 1e-3, 0)));
  EXPECT_EQ(s.size(), 2u);
}
