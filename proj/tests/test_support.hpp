#pragma once

// Tree builders shared by the unit tests and the acceptance binary.

#include "utilmax/scenario_tree.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace utilmax::fixtures {

inline Eigen::VectorXd vec1(double a) { return Eigen::VectorXd::Constant(1, a); }

inline Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

/// One period, S_0 = 0, S_1 = +1 with probability p, -1 otherwise.
inline ScenarioTree binomial(double p) {
  std::vector<NodeSpec> s;
  s.push_back({0, std::nullopt, 1.0, vec1(0.0)});
  s.push_back({1, 0, p, vec1(1.0)});
  s.push_back({2, 0, 1.0 - p, vec1(-1.0)});
  return ScenarioTree(1, 1, std::move(s));
}

/// Recombination-free binomial over T periods with the same +-1 step law.
inline ScenarioTree binomial_T(double p, int T) {
  std::vector<NodeSpec> s;
  s.push_back({0, std::nullopt, 1.0, vec1(0.0)});
  std::vector<std::pair<NodeId, double>> level{{0, 0.0}};
  NodeId next = 1;
  for (int t = 0; t < T; ++t) {
    std::vector<std::pair<NodeId, double>> nl;
    for (auto [id, price] : level) {
      s.push_back({next, id, p, vec1(price + 1.0)});
      nl.emplace_back(next++, price + 1.0);
      s.push_back({next, id, 1.0 - p, vec1(price - 1.0)});
      nl.emplace_back(next++, price - 1.0);
    }
    level = std::move(nl);
  }
  return ScenarioTree(1, T, std::move(s));
}

struct RandomTreeSpec {
  int max_T = 3;
  int max_d = 2;
  int max_branches = 3;
  /// Only allow d = 2 for horizons up to this (keeps the lattice oracle cheap).
  int max_T_for_d2 = 2;
};

// Increments with 0 in the relative interior of their convex hull.
inline std::vector<Eigen::VectorXd> na_increments(std::mt19937_64& rng, int d, int k) {
  std::uniform_real_distribution<double> mag(0.3, 1.5);
  std::uniform_real_distribution<double> ang(0.0, 6.283185307179586);
  std::uniform_real_distribution<double> w(0.3, 1.0);
  std::vector<Eigen::VectorXd> ys;
  if (d == 1) {
    ys.push_back(vec1(mag(rng)));
    ys.push_back(vec1(-mag(rng)));
    if (k == 3) ys.push_back(vec1((rng() % 2 ? 1.0 : -1.0) * mag(rng)));
    return ys;
  }
  if (k == 2) {
    const double a = ang(rng);
    const Eigen::VectorXd y = mag(rng) * vec2(std::cos(a), std::sin(a));
    ys.push_back(y);
    ys.push_back(-w(rng) * y);
    return ys;
  }
  const double a = ang(rng);
  const double b = a + 0.6 + 0.4 * ang(rng) / 6.283185307179586 * 3.0;
  const Eigen::VectorXd y1 = mag(rng) * vec2(std::cos(a), std::sin(a));
  const Eigen::VectorXd y2 = mag(rng) * vec2(std::cos(b), std::sin(b));
  ys.push_back(y1);
  ys.push_back(y2);
  ys.push_back(-(w(rng) * y1 + w(rng) * y2));
  return ys;
}

inline std::vector<double> random_probs(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> p(static_cast<std::size_t>(k));
  double s = 0.0;
  for (auto& x : p) s += (x = u(rng));
  for (auto& x : p) x /= s;
  // make the last one absorb round-off
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) head += p[i];
  p.back() = 1.0 - head;
  return p;
}

/// Random arbitrage-free tree; `arbitrage_at_root` instead makes every root
/// increment point into one half-space.
inline ScenarioTree random_tree(std::mt19937_64& rng, const RandomTreeSpec& spec = {}, bool arbitrage_at_root = false) {
  const int T = 1 + static_cast<int>(rng() % static_cast<unsigned>(spec.max_T));
  int d = 1 + static_cast<int>(rng() % static_cast<unsigned>(spec.max_d));
  if (T > spec.max_T_for_d2) d = 1;
  std::vector<NodeSpec> s;
  s.push_back({0, std::nullopt, 1.0, Eigen::VectorXd::Zero(d)});
  std::vector<std::pair<NodeId, Eigen::VectorXd>> level{{0, Eigen::VectorXd::Zero(d)}};
  NodeId next = 1;
  for (int t = 0; t < T; ++t) {
    std::vector<std::pair<NodeId, Eigen::VectorXd>> nl;
    for (const auto& [id, price] : level) {
      const int k = 2 + static_cast<int>(rng() % static_cast<unsigned>(spec.max_branches - 1));
      auto ys = na_increments(rng, d, k);
      if (arbitrage_at_root && t == 0) {
        Eigen::VectorXd dir = Eigen::VectorXd::Zero(d);
        dir[0] = 1.0;
        for (auto& y : ys) {
          if (y.dot(dir) < 0.0) y -= 2.0 * y.dot(dir) * dir;
          y += 0.1 * dir;
        }
      }
      const auto p = random_probs(rng, k);
      for (int i = 0; i < k; ++i) {
        const Eigen::VectorXd np = price + ys[static_cast<std::size_t>(i)];
        s.push_back({next, id, p[static_cast<std::size_t>(i)], np});
        nl.emplace_back(next++, np);
      }
    }
    level = std::move(nl);
  }
  return ScenarioTree(d, T, std::move(s));
}

}  // namespace utilmax::fixtures
