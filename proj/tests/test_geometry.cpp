#include "test_support.hpp"
#include "utilmax/geometry.hpp"

#include <gtest/gtest.h>

using namespace utilmax;
using fixtures::vec1;
using fixtures::vec2;

namespace {

ConditionalDist dist(std::vector<Eigen::VectorXd> ys, std::vector<double> ps) {
  ConditionalDist d;
  d.increments = std::move(ys);
  d.probs = std::move(ps);
  return d;
}

}  // namespace

TEST(Geometry, RowSpanRank) {
  Eigen::MatrixXd pts(3, 3);
  pts << 1, 2, 0, 2, 4, 0, -1, -2, 0;
  const auto s = row_span(pts);
  ASSERT_EQ(s.dim(), 1);
  const Eigen::Vector3d e(1, 2, 0);
  EXPECT_NEAR(std::abs(s.basis.col(0).dot(e.normalized())), 1.0, 1e-12);
}

TEST(Geometry, AffineHullOffset) {
  const auto through = support_subspace(dist({vec2(1, 0), vec2(-2, 0)}, {0.5, 0.5}));
  EXPECT_EQ(through.direction.dim(), 1);
  EXPECT_TRUE(through.contains_origin());
  const auto off = support_subspace(dist({vec2(1, 1), vec2(-1, 1)}, {0.5, 0.5}));
  EXPECT_EQ(off.direction.dim(), 1);
  EXPECT_FALSE(off.contains_origin());
  EXPECT_NEAR(off.offset.norm(), 1.0, 1e-12);
}

TEST(Geometry, BinomialCertificate) {
  const auto t = fixtures::binomial(0.75);
  const auto d = conditional_dist(t, 0);
  const auto c = na_certificate(d, linear_span(d));
  EXPECT_DOUBLE_EQ(c.kappa, 0.25);
  EXPECT_GT(c.beta, 0.0);
  EXPECT_LT(c.beta, 1.0);
}

TEST(Geometry, PlanarCertificate) {
  const auto d = dist({vec2(1, 0), vec2(0, 1), vec2(-1, -1)}, {0.2, 0.3, 0.5});
  const auto D = linear_span(d);
  ASSERT_EQ(D.dim(), 2);
  // every direction loses on at least one outcome; the cheapest is 0.2
  EXPECT_NEAR(kappa_at(d, D, 1e-6), 0.2, 1e-12);
  const auto c = na_certificate(d, D);
  EXPECT_GT(c.kappa, 0.0);
  for (int k = 0; k < 3600; ++k) {
    const double a = 2.0 * 3.141592653589793 * k / 3600.0;
    const Eigen::Vector2d p(std::cos(a), std::sin(a));
    double mass = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (p.dot(d.increments[i]) < -c.beta) mass += d.probs[i];
    EXPECT_GE(mass, c.kappa - 1e-12);
  }
}

TEST(Geometry, ArbitrageWitness) {
  const auto d = dist({vec1(1.0), vec1(2.0)}, {0.5, 0.5});
  const auto v = check_na(d, linear_span(d));
  ASSERT_TRUE(v.arbitrage);
  double total = 0.0;
  for (const auto& y : d.increments) {
    EXPECT_GE(v.witness.dot(y), 0.0);
    total += v.witness.dot(y);
  }
  EXPECT_GT(total, 0.0);
  EXPECT_FALSE(check_na(dist({vec1(1.0), vec1(-2.0)}, {0.5, 0.5}), Subspace::full(1)).arbitrage);
}

TEST(Geometry, ConeRemovesArbitrage) {
  // all increments negative: arbitrage by shorting, none if only long positions
  const auto d = dist({vec1(-1.0), vec1(-0.5)}, {0.5, 0.5});
  EXPECT_TRUE(check_na(d, linear_span(d)).arbitrage);
  const auto cone = Cone::nonnegative_orthant(1);
  EXPECT_FALSE(check_na(d, linear_span(d), &cone).arbitrage);
}

TEST(Geometry, ValidateTreeReportsFirstArbitrage) {
  std::mt19937_64 rng(7);
  const auto t = fixtures::random_tree(rng, {}, true);
  const auto rep = validate_tree(t);
  EXPECT_FALSE(rep.arbitrage_free);
  ASSERT_TRUE(rep.first_arbitrage.has_value());
  EXPECT_EQ(*rep.first_arbitrage, t.root());
}
