#include "test_support.hpp"
#include "utilmax/one_step.hpp"
#include "utilmax/utility.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace utilmax;

namespace {

OneStepProblem binomial_problem(const ScenarioTree& t, const PLConcave& f, double phi) {
  const auto d = conditional_dist(t, 0, false);
  return OneStepProblem{d, {&f, &f}, linear_span(d), std::nullopt, phi};
}

}  // namespace

TEST(OneStep, KinkedUtilityOptimumAtKink) {
  // U = 4x below 0, 2x on [0,1], slope 1/2 above: EU(xi) peaks at xi = 1 with 1/2
  const auto u = Utility::piecewise_linear({0.0, 1.0}, {4.0, 2.0, 0.5});
  const auto f = *u.exact_pl();
  const auto t = fixtures::binomial(0.75);
  const auto pt = solve_at(binomial_problem(t, f, 100.0), 0.0);
  EXPECT_NEAR(pt.xi[0], 1.0, 1e-12);
  EXPECT_NEAR(pt.value, 0.5, 1e-12);
  EXPECT_TRUE(pt.interior);
}

TEST(OneStep, Example73HitsTheBound) {
  const auto u = Utility::example73(200);
  const auto f = *u.exact_pl();
  const auto t = fixtures::binomial(0.75);
  const auto pt = solve_at(binomial_problem(t, f, 50.0), 0.0);
  double s = 0.0;
  for (int j = 1; j <= 50; ++j) s += 1.0 / (j * static_cast<double>(j));
  EXPECT_NEAR(pt.xi[0], 50.0, 1e-12);
  EXPECT_NEAR(pt.value, s, 1e-12);
  EXPECT_FALSE(pt.interior);
}

TEST(OneStep, ExponentialOnFineGrid) {
  const auto u = Utility::exponential(1.0);
  const auto g = uniform_grid(-5.0, 5.0, 2049);
  const auto f = from_utility(u, g);
  const auto t = fixtures::binomial(0.75);
  const auto pt = solve_at(binomial_problem(t, f, 1e3), 0.0);
  // PL interpolation moves the optimizer by at most about a grid cell
  EXPECT_NEAR(pt.xi[0], 0.5 * std::log(3.0), 5e-3);
  EXPECT_NEAR(pt.value, 1.0 - std::sqrt(3.0) / 2.0, 1e-5);
}

TEST(OneStep, GridSolutionIsConcaveMajorant) {
  const auto u = Utility::piecewise_linear({0.0, 1.0}, {4.0, 2.0, 0.5});
  const auto f = *u.exact_pl();
  const auto t = fixtures::binomial(0.75);
  const auto g = uniform_grid(-2.0, 2.0, 33);
  const auto sol = solve_one_step(binomial_problem(t, f, 100.0), g);
  EXPECT_TRUE(is_concave_nondecreasing(sol.G));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_GE(sol.G(g[i]) + 1e-12, u.eval(g[i]));
}

TEST(OneStep, ConcaveMajorant) {
  const std::vector<double> g{0, 1, 2, 3};
  const std::vector<double> v{0, 0, 2, 2.5};
  const auto m = concave_majorant(g, v);
  EXPECT_DOUBLE_EQ(m[1], 1.0);
  EXPECT_DOUBLE_EQ(m[2], 2.0);
  EXPECT_DOUBLE_EQ(m[3], 2.5);
}

TEST(OneStep, ProjectionRemovesOrthogonalPart) {
  const Subspace D{Eigen::MatrixXd::Identity(2, 1)};
  const auto p = project_strategy(fixtures::vec2(3.0, 4.0), D);
  EXPECT_DOUBLE_EQ(p[0], 3.0);
  EXPECT_DOUBLE_EQ(p[1], 0.0);
}
