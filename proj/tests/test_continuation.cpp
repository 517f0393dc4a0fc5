#include <gtest/gtest.h>

#include <cmath>

#include <bifurcate/continuation.hpp>
#include <bifurcate/detect.hpp>

#include "toy_problems.hpp"

using namespace bifurcate;

namespace {

Point point1(double u, double lam) { return Point{Vector::Constant(1, u), ParamVec(Vector::Constant(1, lam), {"lambda_1"}), 0.0}; }

std::vector<PathConstraint> bratu_line() { return {fix_param(1, 1.0), fix_param(2, 0.0)}; }

ExtendedPoint bratu_start(const Problem& p, double l1) {
  const auto s = start_point(p, bratu_line(), Vector::Zero(32), p.make_params(Eigen::Vector3d(l1, 1, 0)), +1, NewtonConfig{});
  if (!s) throw std::runtime_error("bratu start failed");
  return *s;
}

double fd_grad(const PathConstraint& g, Vector l, Eigen::Index i) {
  const double h = 1e-6;
  l[i] += h;
  const double a = g.eval(l);
  l[i] -= 2 * h;
  return (a - g.eval(l)) / (2 * h);
}

}  // namespace

TEST(TangentSingle, UMinusLambda) {
  const auto p = bifurcate::testing::u_minus_lambda();
  const Tangent t = tangent_single(p, point1(0, 0), 0, nullptr);
  EXPECT_NEAR(t.du()[0], std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(t.dlambda()[0], std::sqrt(0.5), 1e-12);
}

TEST(TangentSingle, ParameterFreeResidual) {
  const bifurcate::testing::LinearProblem p(Matrix::Identity(1, 1), Matrix::Zero(1, 1));
  const Tangent t = tangent_single(p, point1(0, 0), 0, nullptr);
  EXPECT_NEAR(t.du()[0], 0.0, 1e-15);
  EXPECT_NEAR(t.dlambda()[0], 1.0, 1e-15);
  const Tangent back = tangent_single(p, point1(0, 0), 0, nullptr, -1);
  EXPECT_NEAR(back.dlambda()[0], -1.0, 1e-15);
}

TEST(TangentSingle, OrientedByPrevious) {
  const auto p = bifurcate::testing::u_minus_lambda();
  const Tangent prev(Vector::Constant(1, -1), Vector::Constant(1, -1));
  const Tangent t = tangent_single(p, point1(0, 0), 0, &prev);
  EXPECT_GT(t.dot(prev), 0.0);
}

TEST(TangentMulti, InclinedConstraint) {
  // G = u - lambda_1 - lambda_2 with lambda_2 = lambda_1
  Matrix b(1, 2);
  b << -1, -1;
  const bifurcate::testing::LinearProblem p(Matrix::Identity(1, 1), b);
  const Point pt{Vector::Zero(1), ParamVec(Eigen::Vector2d(0, 0), default_param_names(2)), 0.0};
  const Tangent t = tangent_multi(p, pt, {zigzag_line(Eigen::Vector2d(0, 0), std::numbers::pi / 4, +1)}, nullptr);
  const Eigen::Vector3d want = Eigen::Vector3d(2, 1, 1) / std::sqrt(6.0);
  EXPECT_LE((t.stacked() - want).norm(), 1e-12);
}

TEST(TangentMulti, HorizontalMatchesSingle) {
  const auto p = make_problem("bratu1d");
  const auto s = bratu_start(*p, 1.0);
  const Tangent multi = tangent_multi(*p, s.point, bratu_line(), nullptr);
  const Tangent single = tangent_single(*p, s.point, 0, nullptr);
  EXPECT_LE((multi.stacked() - single.stacked()).norm(), 1e-10);
}

TEST(TangentMulti, WrongConstraintCount) {
  const auto p = make_problem("bratu1d");
  const auto s = bratu_start(*p, 1.0);
  EXPECT_THROW(tangent_multi(*p, s.point, {fix_param(1, 1.0)}, nullptr), ConfigError);
  EXPECT_THROW(corrector(*p, {fix_param(1, 1.0)}, s, 0.1, NewtonConfig{}), ConfigError);
}

TEST(LeadingParam, FirstFreeComponent) {
  const Vector l = Eigen::Vector3d(1, 1, 0);
  EXPECT_EQ(leading_param({fix_param(1, 1.0), fix_param(2, 0.0)}, l), 0);
  EXPECT_EQ(leading_param({fix_param(0, 1.0), fix_param(2, 0.0)}, l), 1);
  EXPECT_EQ(leading_param({fix_param(0, 1.0), fix_param(1, 0.0)}, l), 2);
}

TEST(Predictor, LinearExtrapolation) {
  const ExtendedPoint e{point1(0, 0), Tangent(Vector::Constant(1, 1), Vector::Constant(1, 1))};
  const Point q = predictor(e, 0.1);
  EXPECT_NEAR(q.u[0], 0.070711, 1e-6);
  EXPECT_NEAR(q.lambda[0], 0.070711, 1e-6);
  EXPECT_DOUBLE_EQ(q.s, 0.1);
  EXPECT_NEAR(arclength_constraint(e, q.u, q.lambda.values(), 0.1), 0.0, 1e-15);
}

TEST(Corrector, LinearProblemInOneIteration) {
  Matrix a(2, 2), b(2, 2);
  a << 2, 1, 0, 3;
  b << 1, 0, -1, 2;
  const bifurcate::testing::LinearProblem p(a, b);
  const Vector lam0 = Eigen::Vector2d(0.3, 0.1);
  const Vector u0 = a.partialPivLu().solve(Vector(-b * lam0));
  const std::vector<PathConstraint> cons{zigzag_line(lam0, 0.3, +1)};
  const Point pt{u0, ParamVec(lam0, default_param_names(2)), 0.0};
  // deliberately skewed tangent: the predictor leaves the solution set
  const ExtendedPoint e{pt, Tangent(Eigen::Vector2d(0.4, -0.2), Eigen::Vector2d(1, 0.5))};
  const auto c = corrector(p, cons, e, 0.1, NewtonConfig{});
  ASSERT_TRUE(c.converged());
  EXPECT_LE(c.newton.iterations, 1);
  EXPECT_LE(p.residual(c.point.u, c.point.lambda.values()).norm(), 1e-12);
  EXPECT_LE(std::abs(cons[0].eval(c.point.lambda.values())), 1e-12);
  EXPECT_NEAR(arclength_constraint(e, c.point.u, c.point.lambda.values(), 0.1), 0.0, 1e-12);
}

TEST(ArclengthStep, ThreeStepsOnStraightLine) {
  const auto p = bifurcate::testing::u_minus_lambda();
  const std::vector<PathConstraint> none;
  auto s = start_point(p, none, Vector::Zero(1), ParamVec(Vector::Zero(1), {"lambda_1"}), +1, NewtonConfig{});
  ASSERT_TRUE(s);
  ExtendedPoint e = *s;
  for (int k = 1; k <= 3; ++k) {
    const auto r = arclength_step(p, none, e, ContinuationConfig::with_step(0.1), NewtonConfig{});
    ASSERT_TRUE(r.accepted());
    e = r.ext;
    EXPECT_NEAR(e.point.u[0], 0.1 * k * std::sqrt(0.5), 1e-12);
    EXPECT_NEAR(e.point.lambda[0], 0.1 * k * std::sqrt(0.5), 1e-12);
    EXPECT_NEAR(e.point.s, 0.1 * k, 1e-12);
  }
}

TEST(ArclengthStep, BratuThroughTheFold) {
  const auto p = make_problem("bratu1d");
  ExtendedPoint e = bratu_start(*p, 0.1);
  const auto cons = bratu_line();
  const auto cfg = ContinuationConfig::with_step(0.1);
  std::vector<double> ldot{e.tangent.dlambda()[0]};
  std::vector<double> l1{e.point.lambda[0]};
  int turned = -1;
  for (int step = 0; step < 400 && turned < 0; ++step) {
    const auto r = arclength_step(*p, cons, e, cfg, NewtonConfig{});
    ASSERT_TRUE(r.accepted()) << "step " << step;
    EXPECT_GT(r.ext.tangent.dot(e.tangent), 0.0);
    EXPECT_NEAR(r.ext.tangent.stacked().norm(), 1.0, 1e-12);
    e = r.ext;
    ldot.push_back(e.tangent.dlambda()[0]);
    l1.push_back(e.point.lambda[0]);
    if (ldot.back() < 0.0) turned = static_cast<int>(ldot.size()) - 1;
  }
  ASSERT_GT(turned, 5);
  const double top = std::max(l1[turned - 1], l1[turned]);
  EXPECT_GT(top, 3.4);
  EXPECT_LT(top, 3.52);
  for (int i = turned - 5; i < turned - 1; ++i) EXPECT_GT(ldot[i], ldot[i + 1]);
}

TEST(PathFamily, HorizontalMembers) {
  PathFamily f{FamilyKind::horizontal, {0, 1, 0, 1}, 4};
  const auto g = path_family(f);
  ASSERT_EQ(g.size(), 5u);
  for (int i = 0; i <= 4; ++i) EXPECT_DOUBLE_EQ(g[i].eval(Eigen::Vector2d(0.7, 0.25 * i)), 0.0);
  EXPECT_EQ(g[2].label, "horizontal_2");
}

TEST(PathFamily, DiagonalAndEllipticThroughIntercepts) {
  const FamilyBounds fb{1, 3, 2, 4};
  for (auto kind : {FamilyKind::diagonal, FamilyKind::elliptic}) {
    const auto g = path_family({kind, fb, 2});
    for (int i = 0; i <= 2; ++i) {
      const double ax = 1 + i, cy = 2 + i;
      EXPECT_NEAR(g[i].eval(Eigen::Vector2d(ax, 0)), 0.0, 1e-15);
      EXPECT_NEAR(g[i].eval(Eigen::Vector2d(0, cy)), 0.0, 1e-15);
      const Vector l = Eigen::Vector3d(0.7, 1.3, 5.0);
      const Vector gr = g[i].grad(l);
      for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(gr[j], fd_grad(g[i], l, j), 1e-8);
    }
  }
}

TEST(PathFamily, Errors) {
  EXPECT_THROW(path_family({FamilyKind::diagonal, {0, 1, 1, 2}, 2}), ConfigError);
  EXPECT_THROW(path_family({FamilyKind::elliptic, {1, 2, 0, 1}, 2}), ConfigError);
  EXPECT_THROW(path_family({FamilyKind::horizontal, {1, 1, 0, 1}, 2}), ConfigError);
  EXPECT_THROW(path_family({FamilyKind::horizontal, {0, 1, 0, 1}, 0}), ConfigError);
  EXPECT_THROW(family_kind_from_string("spiral"), ConfigError);
  EXPECT_EQ(family_kind_from_string("elliptic"), FamilyKind::elliptic);
}

TEST(FixParam, ValueAndGradient) {
  const auto g = fix_param(1, 2.5);
  EXPECT_DOUBLE_EQ(g.eval(Eigen::Vector3d(0, 3, 0)), 0.5);
  EXPECT_EQ(g.grad(Eigen::Vector3d(0, 3, 0)), Vector(Eigen::Vector3d(0, 1, 0)));
}
