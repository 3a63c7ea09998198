#pragma once

// Martingale measure built from the marginal utility of optimal terminal
// wealth, envelope checks, indifference pricing and the cone-constrained
// supermartingale test.

#include "utilmax/dp_engine.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace utilmax {

struct MeasureOptions {
  double fo_tol = 1e-6;
  /// Build the measure even when the optimum touches the strategy box.
  bool force = false;
};

struct MeasureReport {
  std::vector<double> density;              // dQ/dP per leaf, indexed like tree.leaves()
  std::vector<double> leaf_Q;
  std::vector<Eigen::VectorXd> residuals;   // E_Q[dS | node]; empty for leaves
  double density_min = 0.0;
  double density_max = 0.0;
  double expected_marginal = 0.0;           // E U'(V_T - B)
  double max_residual = 0.0;
  /// Piecewise-linear utilities: a derivative selection inside the
  /// subdifferential at every leaf that makes the residuals vanish.
  bool subdifferential = false;
  bool subdifferential_feasible = false;
  std::vector<double> selection_density;
  double selection_max_residual = 0.0;
  bool within_tol = false;
};

/// Throws BoundaryOptimum (unless forced) and ZeroDerivative.
MeasureReport martingale_measure(const SolveResult& result, const ScenarioTree& tree, const Utility& u,
                                 const MeasureOptions& opt = {});

/// Residuals E_Q[dS | node] for a leaf measure Q.
std::vector<Eigen::VectorXd> conditional_drifts(const ScenarioTree& tree, const std::vector<double>& leaf_Q);

struct EnvelopeReport {
  NodeIndex node = 0;
  double wealth = 0.0;
  double h = 0.0;
  double finite_difference = 0.0;   // (U_t(w + h) - U_t(w - h)) / 2h from exact subtree solves
  double expected_marginal = 0.0;   // E[U'(V_T - B) | node]
  double gap = 0.0;
};

EnvelopeReport envelope_check(const SolveResult& result, const ScenarioTree& tree, const Utility& u, NodeIndex node,
                              double h = 1e-4);

struct PriceReport {
  double price = 0.0;
  int iterations = 0;
  double residual = 0.0;   // u(B, c + price) - u(0, c)
  double lo = 0.0;
  double hi = 0.0;
  double base_value = 0.0;
};

/// Indifference price: p with u(B, c + p) = u(0, c), by bisection.
PriceReport price_claim(const ScenarioTree& tree, const Utility& u, double capital, const Claim& claim,
                        const SolveConfig& config = {}, double price_tol = 1e-6, int max_iterations = 200);

struct SupermartingaleReport {
  std::vector<Eigen::VectorXd> residuals;   // E_Q[dS | node]
  double max_violation = 0.0;               // max over nodes and rays of <r, E_Q dS>
  double max_slack_gap = 0.0;               // max |<r, E_Q dS>| over rays with positive weight
  bool pass = false;
};

SupermartingaleReport supermartingale_check(const SolveResult& result, const ScenarioTree& tree, const Utility& u,
                                            const Cone& cone, double fo_tol = 1e-6);

}  // namespace utilmax
