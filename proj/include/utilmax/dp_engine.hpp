#pragma once

// Backward induction of the value functions U_t over a scenario tree and
// forward construction of the optimal strategy.

#include "utilmax/concave_fn.hpp"
#include "utilmax/geometry.hpp"
#include "utilmax/one_step.hpp"
#include "utilmax/scenario_tree.hpp"
#include "utilmax/utility.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace utilmax {

/// Contingent claim paid at the leaves; payoff is indexed like tree.leaves().
struct Claim {
  std::vector<double> payoff;
  double bound = 0.0;
};

/// Builds a claim from (leaf id, payoff) pairs; unlisted leaves pay 0.
Claim make_claim(const ScenarioTree& tree, const std::vector<std::pair<NodeId, double>>& payoffs, double bound);
Claim constant_claim(const ScenarioTree& tree, double b);

struct SolveConfig {
  std::size_t grid_points = 513;
  /// Wealth grid half-width is min(phi_max, range_phi) * (sum over t of the
  /// largest |increment|_1 in slice t).
  double range_phi = 5.0;
  double phi_max = 1e3;
  double value_tol = 1e-6;
  int refine_rounds = 4;
  double divergence_tol = 1e-3;
  bool check_divergence = true;
  bool check_arbitrage = true;
  bool polish = true;
  std::size_t polish_max_vars = 1500;
  /// Skip the grid and solve the whole tree directly at the capital.
  bool exact_only = false;
  /// Visit nodes and LP pivot candidates in mirrored order.
  bool reverse_order = false;
  int threads = 0;
  double rank_tol = 1e-9;
  std::optional<Cone> cone;
};

struct RefinementStep {
  std::size_t grid_points = 0;
  double root_value = 0.0;
};

struct SolveResult {
  double capital = 0.0;
  double phi_max = 0.0;
  std::vector<double> grid;
  std::vector<std::optional<PLConcave>> value_fns;  // per node; leaves hold the terminal function
  std::vector<Eigen::VectorXd> strategy;            // per node in R^d; empty for leaves
  std::vector<Eigen::VectorXd> strategy_coords;     // D-basis coordinates
  std::vector<Subspace> D;
  std::vector<double> wealth;
  std::vector<char> attained_interior;  // per node; 1 for leaves
  double root_value = 0.0;              // E U(V_T - B) under `strategy`
  double root_value_grid = 0.0;         // U_0(c) read from the grid value function
  bool polished = false;
  bool boundary = false;
  std::vector<RefinementStep> history;
  std::vector<double> divergence_values;  // root values at phi, 2 phi, 4 phi when checked
  std::vector<double> claim;
  std::optional<Cone> cone;
};

SolveResult solve(const ScenarioTree& tree, const Utility& u, double capital, const SolveConfig& config = {},
                  const Claim* claim = nullptr);

/// E U(V_T - B) for a strategy given per node in R^d.
double expected_utility(const ScenarioTree& tree, const Utility& u, double capital,
                        const std::vector<Eigen::VectorXd>& strategy, const Claim* claim = nullptr);

std::vector<Subspace> node_subspaces(const ScenarioTree& tree, double rank_tol = 1e-9);

std::vector<double> wealth_grid(const ScenarioTree& tree, double capital, const SolveConfig& config);

/// Throws ArbitrageDetected naming the first offending node.
void require_no_arbitrage(const ScenarioTree& tree, const std::optional<Cone>& cone, double rank_tol);

/// Worker count: UTILMAX_THREADS if set, else `requested` if positive, else
/// the hardware concurrency.
int resolve_threads(int requested);

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace utilmax
