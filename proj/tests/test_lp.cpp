#include "utilmax/lp.hpp"

#include <gtest/gtest.h>

using namespace utilmax;

TEST(Lp, TextbookMaximum) {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
  lp::Problem p(2);
  p.objective << 3, 5;
  p.add_le(Eigen::Vector2d(1, 0), 4);
  p.add_le(Eigen::Vector2d(0, 2), 12);
  p.add_le(Eigen::Vector2d(3, 2), 18);
  const auto s = lp::solve(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.value, 36.0, 1e-12);
  EXPECT_NEAR(s.x[0], 2.0, 1e-12);
  EXPECT_NEAR(s.x[1], 6.0, 1e-12);
}

TEST(Lp, FreeVariablesAndEqualities) {
  // max -x - y, x + y = -3 with x, y free, x >= -10, y <= 1 -> value 3
  lp::Problem p(2);
  p.objective << -1, -1;
  p.lower << -10, -lp::kInf;
  p.upper << lp::kInf, 1;
  p.add_eq(Eigen::Vector2d(1, 1), -3);
  const auto s = lp::solve(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.value, 3.0, 1e-12);
}

TEST(Lp, DetectsInfeasibleAndUnbounded) {
  lp::Problem a(1);
  a.objective << 1;
  a.lower << 0;
  a.add_le(Eigen::VectorXd::Constant(1, 1), -1);
  EXPECT_EQ(lp::solve(a).status, lp::Status::Infeasible);
  lp::Problem b(1);
  b.objective << 1;
  EXPECT_EQ(lp::solve(b).status, lp::Status::Unbounded);
}

TEST(Lp, ReverseOrderGivesSameValue) {
  lp::Problem p(3);
  p.objective << 1, 1, 1;
  p.add_le(Eigen::Vector3d(1, 1, 0), 1);
  p.add_le(Eigen::Vector3d(0, 1, 1), 1);
  p.add_le(Eigen::Vector3d(1, 0, 1), 1);
  lp::Options o;
  o.reverse_order = true;
  EXPECT_NEAR(lp::solve(p).value, 1.5, 1e-12);
  EXPECT_NEAR(lp::solve(p, o).value, 1.5, 1e-12);
}
