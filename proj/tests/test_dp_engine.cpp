#include "test_support.hpp"
#include "utilmax/dp_engine.hpp"
#include "utilmax/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>

using namespace utilmax;

namespace {

// Exponential utility is wealth-independent: the one-period optimum
// 1 - sqrt(3)/2 compounds multiplicatively.
double exp_value(double c, int T) { return 1.0 - std::exp(-c) * std::pow(std::sqrt(3.0) / 2.0, T); }

}  // namespace

TEST(DpEngine, BinomialExponentialOnePeriod) {
  const auto r = solve(fixtures::binomial(0.75), Utility::exponential(1.0), 0.0);
  EXPECT_NEAR(r.strategy[0][0], 0.5 * std::log(3.0), 1e-9);
  EXPECT_NEAR(r.root_value, exp_value(0.0, 1), 1e-12);
  EXPECT_FALSE(r.boundary);
  EXPECT_TRUE(r.attained_interior[0]);
}

TEST(DpEngine, SmoothOptimumClippedToBox) {
  // unconstrained optimum ln(3)/2 ~ 0.549 lies outside |xi| <= 0.3
  SolveConfig cfg;
  cfg.phi_max = 0.3;
  const auto r = solve(fixtures::binomial(0.75), Utility::exponential(1.0), 0.0, cfg);
  EXPECT_NEAR(r.strategy[0][0], 0.3, 1e-9);
  EXPECT_NEAR(r.root_value, 1.0 - 0.75 * std::exp(-0.3) - 0.25 * std::exp(0.3), 1e-10);
  EXPECT_TRUE(r.boundary);
}

TEST(DpEngine, MultiPeriodExponential) {
  for (int T : {2, 3}) {
    const auto t = fixtures::binomial_T(0.75, T);
    const auto r = solve(t, Utility::exponential(1.0), 0.4);
    EXPECT_NEAR(r.root_value, exp_value(0.4, T), 1e-10) << "T=" << T;
    for (NodeIndex n : t.interior_nodes()) EXPECT_NEAR(r.strategy[n][0], 0.5 * std::log(3.0), 1e-7);
  }
}

TEST(DpEngine, GridOnlyIsCloseAndConverges) {
  SolveConfig cfg;
  cfg.polish = false;
  const auto t = fixtures::binomial_T(0.75, 2);
  const auto r = solve(t, Utility::exponential(1.0), 0.0, cfg);
  EXPECT_FALSE(r.polished);
  EXPECT_NEAR(r.root_value, exp_value(0.0, 2), 1e-4);
  EXPECT_LE(r.root_value, exp_value(0.0, 2) + 1e-15);
  EXPECT_FALSE(r.history.empty());
}

TEST(DpEngine, ExactOnlyMatches) {
  SolveConfig cfg;
  cfg.exact_only = true;
  const auto r = solve(fixtures::binomial_T(0.75, 3), Utility::exponential(1.0), 0.0, cfg);
  EXPECT_NEAR(r.root_value, exp_value(0.0, 3), 1e-12);
}

TEST(DpEngine, ConstantClaimShiftsCapital) {
  const auto t = fixtures::binomial_T(0.75, 2);
  const auto claim = constant_claim(t, 0.3);
  const auto r = solve(t, Utility::exponential(1.0), 1.0, {}, &claim);
  EXPECT_NEAR(r.root_value, exp_value(0.7, 2), 1e-10);
}

TEST(DpEngine, Example73BoundaryAtPhiMax) {
  SolveConfig cfg;
  cfg.phi_max = 200;
  const auto r = solve(fixtures::binomial(0.75), Utility::example73(1000), 0.0, cfg);
  double s = 0.0;
  for (int j = 1; j <= 200; ++j) s += 1.0 / (j * static_cast<double>(j));
  EXPECT_TRUE(r.boundary);
  EXPECT_FALSE(r.attained_interior[0]);
  EXPECT_NEAR(r.strategy[0][0], 200.0, 1e-9);
  EXPECT_NEAR(r.root_value, s, 1e-12);
  EXPECT_LT(std::numbers::pi * std::numbers::pi / 6.0 - r.root_value, 5e-3);
}

TEST(DpEngine, LinearUtilityWithDriftDiverges) {
  SolveConfig cfg;
  cfg.phi_max = 10;
  EXPECT_THROW(
      {
        try {
          solve(fixtures::binomial(0.75), Utility::piecewise_linear({}, {1.0}), 0.0, cfg);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::ValueDiverged);
          throw;
        }
      },
      Error);
}

TEST(DpEngine, RejectsArbitrage) {
  std::mt19937_64 rng(3);
  const auto t = fixtures::random_tree(rng, {}, true);
  try {
    solve(t, Utility::exponential(1.0), 0.0);
    FAIL() << "expected ArbitrageDetected";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ArbitrageDetected);
  }
}

TEST(DpEngine, DegenerateSupportStaysInD) {
  // d = 2 but both assets move together: only the span of (1,1) matters
  std::vector<NodeSpec> s;
  s.push_back({0, std::nullopt, 1.0, fixtures::vec2(0, 0)});
  s.push_back({1, 0, 0.75, fixtures::vec2(1, 1)});
  s.push_back({2, 0, 0.25, fixtures::vec2(-1, -1)});
  const ScenarioTree t(2, 1, s);
  const auto r = solve(t, Utility::exponential(1.0), 0.0);
  EXPECT_EQ(r.D[0].dim(), 1);
  EXPECT_NEAR(r.strategy[0][0], r.strategy[0][1], 1e-12);
  EXPECT_NEAR(r.strategy[0][0] + r.strategy[0][1], 0.5 * std::log(3.0), 1e-9);
}

TEST(DpEngine, WealthGridIsCentred) {
  SolveConfig cfg;
  cfg.grid_points = 9;
  const auto g = wealth_grid(fixtures::binomial(0.5), 2.0, cfg);
  ASSERT_EQ(g.size(), 9u);
  EXPECT_DOUBLE_EQ(g[4], 2.0);
  EXPECT_NEAR(g.back() - g.front(), 10.0, 1e-12);
}

TEST(DpEngine, ThreadOverride) {
  setenv("UTILMAX_THREADS", "3", 1);
  EXPECT_EQ(resolve_threads(8), 3);
  unsetenv("UTILMAX_THREADS");
  EXPECT_EQ(resolve_threads(2), 2);
}
