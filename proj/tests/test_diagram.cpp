#include <gtest/gtest.h>

#include <bifurcate/diagram.hpp>
#include <bifurcate/oracles.hpp>

using namespace bifurcate;

namespace {

Vector v2(double a, double b) { return Eigen::Vector2d(a, b); }

DiagramConfig bratu_cfg(double ds) {
  DiagramConfig cfg;
  cfg.continuation = ContinuationConfig::with_step(ds);
  return cfg;
}

BifurcationDiagram bratu_line(const Problem& p, double ds, std::vector<Interval> bounds = {}) {
  DiagramConfig cfg = bratu_cfg(ds);
  cfg.bounds = std::move(bounds);
  return run_diagram(p, {fix_param(1, 1.0), fix_param(2, 0.0)}, Vector::Zero(static_cast<Eigen::Index>(p.dof_count())),
                     p.make_params(Eigen::Vector3d(0.1, 1, 0)), cfg);
}

}  // namespace

TEST(AssignToBranches, TaggedContinuationAndNewBranch) {
  const std::map<int, Vector> prev{{0, v2(1, 0)}};
  const auto a = assign_to_branches({{v2(1.01, 0), 0}, {v2(-5, 0), std::nullopt}}, prev, 0.1);
  ASSERT_EQ(a.appended.size(), 1u);
  EXPECT_EQ(a.appended[0].first, 0);
  ASSERT_EQ(a.new_branches.size(), 1u);
  EXPECT_EQ(a.new_branches[0], v2(-5, 0));
  EXPECT_TRUE(a.missed.empty());
}

TEST(AssignToBranches, UntaggedGoToNearestAndDuplicatesDrop) {
  const std::map<int, Vector> prev{{0, v2(1, 0)}, {1, v2(-1, 0)}};
  const auto a = assign_to_branches({{v2(-0.99, 0), std::nullopt}, {v2(1.01, 0), std::nullopt}, {v2(1.01, 0), 1}}, prev, 0.1);
  ASSERT_EQ(a.appended.size(), 2u);
  for (const auto& [id, u] : a.appended) EXPECT_EQ(id == 0, u[0] > 0);
  EXPECT_TRUE(a.new_branches.empty());
  EXPECT_TRUE(a.missed.empty());
}

TEST(AssignToBranches, MissedBranch) {
  const std::map<int, Vector> prev{{0, v2(1, 0)}, {1, v2(-1, 0)}};
  const auto a = assign_to_branches({{v2(1.01, 0), 0}}, prev, 0.1);
  EXPECT_EQ(a.missed, std::vector<int>{1});
}

TEST(AssignToBranches, WrongTagIsReassigned) {
  const std::map<int, Vector> prev{{0, v2(1, 0)}, {1, v2(-1, 0)}};
  const auto a = assign_to_branches({{v2(-1.01, 0), 0}}, prev, 0.1);
  ASSERT_EQ(a.appended.size(), 1u);
  EXPECT_EQ(a.appended[0].first, 1);
}

TEST(RunDiagram, BratuFoldBracketsOracle) {
  const auto p = make_problem("bratu1d");
  const double oracle = fold_bisection_oracle(*p, Eigen::Vector3d(0, 1, 0), 1.0, 4.0);
  const auto dg = bratu_line(*p, 0.2);
  EXPECT_EQ(dg.branches.size(), 2u);
  ASSERT_EQ(dg.count_events(EventKind::fold), 1u);
  EXPECT_EQ(dg.count_events(EventKind::new_branches), 0u);
  for (const auto& e : dg.events) {
    if (e.kind != EventKind::fold) continue;
    EXPECT_LE(e.bracket_lo[0], oracle);
    EXPECT_GE(e.bracket_hi[0], oracle);
    ASSERT_TRUE(e.estimate);
    EXPECT_NEAR((*e.estimate)[0], oracle, 1e-2);
    EXPECT_EQ(e.bracket_hi[2], 0.0);
  }
}

TEST(RunDiagram, AcceptedPointsSatisfyPath) {
  const auto p = make_problem("bratu1d");
  const auto dg = bratu_line(*p, 0.2);
  int checked = 0;
  for (const auto& b : dg.branches) {
    int last_step = -1;
    for (const auto& bp : b.points) {
      EXPECT_GT(bp.step, last_step);
      last_step = bp.step;
      EXPECT_LE(p->residual(bp.point.u, bp.point.lambda.values()).norm(), 1e-9);
      EXPECT_EQ(bp.point.lambda[1], 1.0);
      EXPECT_EQ(bp.point.lambda[2], 0.0);
      EXPECT_DOUBLE_EQ(bp.q, p->output(bp.point.u, bp.point.lambda.values()));
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(RunDiagram, CappedBratuHasTwoBranchesNoFold) {
  const auto p = make_problem("bratu1d");
  const auto dg = bratu_line(*p, 0.05, {{0.0, 1.0}, {0.0, 10.0}, {0.0, 1.5}});
  EXPECT_EQ(dg.branches.size(), 2u);
  EXPECT_EQ(dg.count_events(EventKind::fold), 0u);
  for (const auto& b : dg.branches)
    for (const auto& bp : b.points) EXPECT_LE(bp.point.lambda[0], 1.0);
}

TEST(RunDiagram, StartValidation) {
  const auto p = make_problem("bratu1d");
  const DiagramConfig cfg = bratu_cfg(0.2);
  const std::vector<PathConstraint> cons{fix_param(1, 1.0), fix_param(2, 0.0)};
  EXPECT_THROW(run_diagram(*p, cons, Vector::Zero(32), p->make_params(Eigen::Vector3d(0.1, 2, 0)), cfg), ConfigError);
  EXPECT_THROW(run_diagram(*p, cons, Vector::Zero(31), p->make_params(Eigen::Vector3d(0.1, 1, 0)), cfg), ConfigError);
  const auto ac = make_problem("allencahn1d");
  EXPECT_THROW(run_diagram(*ac, cons, Vector::Zero(32), ac->make_params(Eigen::Vector3d(0.1, 1, 0)), cfg), ConfigError);
}

TEST(RunDiagram, NoSolutionAtStartGivesEmptyDiagram) {
  const auto p = make_problem("bratu1d");
  DiagramConfig cfg = bratu_cfg(0.2);
  const auto dg = run_diagram(*p, {fix_param(1, 1.0), fix_param(2, 0.0)}, Vector::Zero(32),
                              p->make_params(Eigen::Vector3d(3.9, 1, 0)), cfg);
  EXPECT_TRUE(dg.branches.empty());
}

TEST(RunDiagram, AllenCahnPitchforksComeInSymmetricPairs) {
  const auto p = make_problem("allencahn1d");
  DiagramConfig cfg;
  cfg.continuation = ContinuationConfig::with_step(0.01);
  cfg.bounds = {{0.0, 5.0}, {0.0, 10.0}, {0.0, 10.0}};
  const auto dg = run_diagram(*p, {fix_param(1, 1.0), fix_param(2, std::numbers::pi)}, p->discovery_seed(),
                              p->make_params(Eigen::Vector3d(0, 1, std::numbers::pi)), cfg);
  ASSERT_EQ(dg.count_events(EventKind::new_branches), 2u);
  const auto oracle = eigen_bifurcation_oracle(*p, Eigen::Vector3d(0, 1, std::numbers::pi));
  int k = 0;
  for (const auto& e : dg.events) {
    if (e.kind != EventKind::new_branches) continue;
    EXPECT_LE(e.bracket_lo[0], oracle.values[k]);
    EXPECT_GE(e.bracket_hi[0], oracle.values[k]);
    ++k;
    ASSERT_EQ(e.count(), 2);
    // the two new branches are mirror images: u -> -u
    const auto& a = dg.branches[static_cast<std::size_t>(e.branch_ids[0])];
    const auto& b = dg.branches[static_cast<std::size_t>(e.branch_ids[1])];
    ASSERT_FALSE(a.points.empty());
    for (const auto& bp : b.points)
      if (bp.step == a.points.back().step) EXPECT_LE((bp.point.u + a.points.back().point.u).norm(), 1e-6);
  }
}

TEST(RunDiagramFamily, HorizontalMembersEachFold) {
  const auto p = make_problem("bratu1d");
  DiagramConfig cfg = bratu_cfg(0.05);
  const auto runs = run_diagram_family(*p, {FamilyKind::horizontal, {2, 4, 0.5, 1.0}, 1}, Vector::Zero(32),
                                       p->default_params(), cfg);
  ASSERT_EQ(runs.size(), 2u);
  const double fold1 = fold_bisection_oracle(*p, Eigen::Vector3d(0, 1, 0), 1.0, 4.0);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    ASSERT_TRUE(runs[i].diagram) << runs[i].error;
    const auto& dg = *runs[i].diagram;
    EXPECT_EQ(dg.path_label, "horizontal_" + std::to_string(i));
    ASSERT_EQ(dg.count_events(EventKind::fold), 1u);
    for (const auto& e : dg.events) {
      if (e.kind != EventKind::fold) continue;
      const double l2 = 0.5 + 0.5 * static_cast<double>(i);
      EXPECT_DOUBLE_EQ(e.estimate->values()[1], l2);
      // Bratu scaling: the fold sits at lambda_2 times the lambda_2 = 1 value
      EXPECT_NEAR((*e.estimate)[0], l2 * fold1, 2e-3 * l2 * fold1);
    }
  }
}

TEST(FamilyStart, SmallestLambda1OnBoxBoundary) {
  const auto g = path_family({FamilyKind::diagonal, {1, 3, 1, 3}, 1})[0];  // lambda_1 + lambda_2 = 1
  const auto s = family_start(g, {{0, 4}, {0, 4}}, Eigen::Vector2d(0, 0));
  ASSERT_TRUE(s);
  EXPECT_NEAR((*s)[0], 0.0, 1e-12);
  EXPECT_NEAR((*s)[1], 1.0, 1e-12);
  EXPECT_FALSE(family_start(g, {{2, 4}, {2, 4}}, Eigen::Vector2d(0, 0)));
}
