#include "test_support.hpp"
#include "utilmax/errors.hpp"
#include "utilmax/report.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace utilmax;

TEST(Report, StrategyCsvRow) {
  const auto t = fixtures::binomial(0.75);
  const auto r = solve(t, Utility::exponential(1.0), 0.0);
  std::ostringstream os;
  write_strategy_csv(os, t, r);
  const auto text = os.str();
  EXPECT_NE(text.find("root, 0.549306"), std::string::npos) << text;
}

TEST(Report, ZeroIncrementTreeHasZeroStrategy) {
  std::vector<NodeSpec> s;
  s.push_back({0, std::nullopt, 1.0, fixtures::vec1(1.0)});
  s.push_back({1, 0, 0.5, fixtures::vec1(1.0)});
  s.push_back({2, 0, 0.5, fixtures::vec1(1.0)});
  const ScenarioTree t(1, 1, s);
  const auto r = solve(t, Utility::exponential(1.0), 0.0);
  std::ostringstream os;
  write_strategy_csv(os, t, r);
  EXPECT_EQ(os.str(), "node, xi_1\nroot, 0\n");
}

TEST(Report, SolveJsonIsDeterministicAndFlagsBoundary) {
  const auto t = fixtures::binomial(0.75);
  const auto u = Utility::example73(800);
  Config c;
  c.solve.phi_max = 200;
  const auto a = solve_report_json(t, u, solve(t, u, 0.0, c.solve), c);
  const auto b = solve_report_json(t, u, solve(t, u, 0.0, c.solve), c);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("\"attained_interior\": false"), std::string::npos);
  EXPECT_NE(a.find("\"config\""), std::string::npos);
}

TEST(Report, UtilityJsonRoundTrip) {
  const auto u = utility_from_json_text(
      R"({"variant":"piecewise_linear","params":{"breakpoints":[0,1],"slopes":[4,2,0.5]},"ae":{"gamma":0.5,"xtilde":1}})");
  EXPECT_DOUBLE_EQ(u.eval(2.0), 2.5);
  ASSERT_TRUE(u.ae().gamma.has_value());
  const auto v = utility_from_json_text(utility_to_json_text(u));
  for (double x : {-3.0, 0.5, 4.0}) EXPECT_DOUBLE_EQ(v.eval(x), u.eval(x));
  EXPECT_THROW(utility_from_json_text(R"({"variant":"cubic"})"), Error);
  EXPECT_THROW(utility_from_json_text(R"({"variant":"exponential","params":{"a":-1}})"), Error);
}

TEST(Report, ClaimAndConeParsing) {
  const auto t = fixtures::binomial(0.75);
  const auto c = claim_from_json_text(t, R"({"bound":1,"payoffs":[{"node":1,"value":1}]})");
  EXPECT_DOUBLE_EQ(c.payoff[0], 1.0);
  EXPECT_DOUBLE_EQ(c.payoff[1], 0.0);
  EXPECT_THROW(claim_from_json_text(t, R"({"bound":0.5,"payoffs":[{"node":1,"value":1}]})"), Error);
  EXPECT_THROW(claim_from_json_text(t, R"({"payoffs":[{"node":0,"value":1}]})"), Error);
  const auto k = cone_from_json_text(2, R"({"rays":[[1,0],[0,1]]})");
  EXPECT_EQ(k.rays.cols(), 2);
  EXPECT_THROW(cone_from_json_text(2, R"({"rays":[[1]]})"), Error);
}

TEST(Report, ConfigValidation) {
  Config c;
  EXPECT_NO_THROW(c.validate());
  c.solve.grid_points = 2;
  EXPECT_THROW(c.validate(), Error);
  c.solve.grid_points = 9;
  c.fo_tol = 0.0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(parse_ae_policy("strict"), AePolicy::Strict);
  EXPECT_THROW(parse_ae_policy("loose"), Error);
}

TEST(Report, Example73Demo) {
  const auto d = run_example73(50, 200);
  ASSERT_EQ(d.rows.size(), 50u);
  EXPECT_DOUBLE_EQ(d.rows[0].expected_utility, 1.0);
  EXPECT_NEAR(d.rows[2].expected_utility, 49.0 / 36.0, 1e-15);
  EXPECT_NEAR(d.rows[49].expected_utility, 1.625132733621529, 1e-12);
  EXPECT_LE(d.max_error, 1e-12);
  EXPECT_TRUE(d.increasing);
  EXPECT_TRUE(d.boundary);
}
