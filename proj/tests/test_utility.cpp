#include "utilmax/concave_fn.hpp"
#include "utilmax/utility.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace utilmax;

TEST(Utility, Example73Values) {
  const auto u = Utility::example73(100);
  EXPECT_DOUBLE_EQ(u.eval(0.0), 0.0);
  EXPECT_NEAR(u.eval(1.0), 2.0, 1e-15);
  EXPECT_NEAR(u.eval(-1.0), -2.0, 1e-15);
  EXPECT_NEAR(u.eval(3.0), 3.0 + 49.0 / 36.0, 1e-14);
  EXPECT_NEAR(u.eval(0.5), 1.0, 1e-15);
  // slope on (-2, -1] is 3 - 1/4
  EXPECT_NEAR(u.left_derivative(-1.0), 2.75, 1e-15);
  EXPECT_NEAR(u.right_derivative(-1.0), 2.0, 1e-15);
  const double h = 1e-7;
  EXPECT_NEAR((u.eval(-1.0) - u.eval(-1.0 - h)) / h, 2.75, 1e-6);
}

TEST(Utility, Example73FreezesBeyondN) {
  const auto u = Utility::example73(4);
  EXPECT_NEAR(u.left_derivative(10.0), 1.0, 1e-15);
  EXPECT_NEAR(u.right_derivative(-10.0), 3.0, 1e-15);
}

TEST(Utility, Exponential) {
  const auto u = Utility::exponential(2.0);
  EXPECT_NEAR(u.eval(1.0), 1.0 - std::exp(-2.0), 1e-15);
  EXPECT_NEAR(u.left_derivative(0.5), 2.0 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(u.second_derivative(0.0), -4.0, 1e-14);
  EXPECT_TRUE(u.is_strictly_concave());
  EXPECT_TRUE(u.is_smooth());
}

TEST(Utility, LinearBelowPowerAbove) {
  const auto u = Utility::linear_below_power_above(0.5);
  EXPECT_DOUBLE_EQ(u.eval(-2.0), -2.0);
  EXPECT_NEAR(u.eval(3.0), 2.0, 1e-15);  // ((1+3)^0.5 - 1)/0.5
  EXPECT_NEAR(u.left_derivative(3.0), 0.5, 1e-15);
  EXPECT_NEAR(u.left_derivative(0.0), 1.0, 1e-15);
}

TEST(Utility, LinearAboveExponentialBelow) {
  const auto u = Utility::linear_above_exponential_below();
  EXPECT_DOUBLE_EQ(u.eval(2.0), 2.0);
  EXPECT_NEAR(u.eval(-1.0), 1.0 - std::exp(1.0), 1e-15);
  EXPECT_NEAR(u.left_derivative(-1.0), std::exp(1.0), 1e-14);
}

TEST(Utility, PiecewiseLinearNormalizedAtZero) {
  const auto u = Utility::piecewise_linear({-1.0, 1.0}, {3.0, 2.0, 1.0});
  EXPECT_DOUBLE_EQ(u.eval(0.0), 0.0);
  EXPECT_DOUBLE_EQ(u.eval(1.0), 2.0);
  EXPECT_DOUBLE_EQ(u.eval(2.0), 3.0);
  EXPECT_DOUBLE_EQ(u.eval(-2.0), -5.0);
  ASSERT_TRUE(u.exact_pl().has_value());
}

TEST(Utility, ShiftIdentities) {
  const auto u = Utility::exponential(1.0);
  const auto s = u.shift(0.7);
  EXPECT_DOUBLE_EQ(s.eval(0.0), 0.0);
  for (double x : {-2.0, -0.3, 0.0, 1.5})
    EXPECT_NEAR(s.eval(x), u.eval(x + 0.7) - u.eval(0.7), 1e-15);
  EXPECT_NEAR(s.left_derivative(0.2), u.left_derivative(0.9), 1e-15);
}

TEST(Utility, GrowthChecks) {
  EXPECT_TRUE(check_ae_plus(Utility::exponential(1.0), 0.9, 1.0).pass);
  EXPECT_TRUE(check_ae_plus(Utility::linear_below_power_above(0.5), 0.9, 1.0).pass);
  // linear growth above zero violates any gamma < 1
  EXPECT_FALSE(check_ae_plus(Utility::example73(1000), 0.9, 1.0).pass);
  const auto r = check_ae_plus(Utility::exponential(1.0), 0.9, 1.0);
  EXPECT_NEAR(r.C, 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_TRUE(check_ae_minus(Utility::exponential(1.0), 0.5, -1.0).pass);
  // linear losses: U(lx) = l U(x) > l^(1+alpha) U(x) for x < 0
  EXPECT_FALSE(check_ae_minus(Utility::linear_below_power_above(0.5), 0.1, -1.0).pass);
}

TEST(ConcaveFn, EvalAndSlopes) {
  const PLConcave f({0.0, 1.0, 3.0}, {0.0, 2.0, 3.0}, 4.0, 0.0);
  EXPECT_DOUBLE_EQ(f(-1.0), -4.0);
  EXPECT_DOUBLE_EQ(f(2.0), 2.5);
  EXPECT_DOUBLE_EQ(f(10.0), 3.0);
  EXPECT_DOUBLE_EQ(f.left_derivative(1.0), 2.0);
  EXPECT_DOUBLE_EQ(f.right_derivative(1.0), 0.5);
  EXPECT_EQ(f.segment(1.0), 1);
  EXPECT_EQ(f.segment(-5.0), -1);
  EXPECT_DOUBLE_EQ(f.shifted(1.0)(3.0), 2.5);
  EXPECT_TRUE(is_concave_nondecreasing(f));
  const auto lines = sup_lines(f);
  ASSERT_EQ(lines.size(), 4u);
  for (double x : {-2.0, 0.5, 2.0, 7.0}) {
    double m = lines[0](x);
    for (const auto& l : lines) m = std::min(m, l(x));
    EXPECT_DOUBLE_EQ(m, f(x));
  }
}

TEST(ConcaveFn, InterpolationBound) {
  const auto u = Utility::exponential(1.0);
  const auto g = uniform_grid(-2.0, 2.0, 41);
  const auto f = from_utility(u, g);
  const double bound = interpolation_error_bound(u, g);
  double worst = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double x = -2.0 + 4.0 * i / 4000.0;
    worst = std::max(worst, u.eval(x) - f(x));
  }
  EXPECT_GE(worst, 0.0);
  EXPECT_LE(worst, bound + 1e-15);
  // second-order: h^2 |U''| / 8 at the left end
  EXPECT_NEAR(worst, 0.01 * std::exp(2.0) / 8.0, 2e-3);
}
