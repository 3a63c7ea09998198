#pragma once

// Independent checks of a SolveResult: brute-force competitors, restart
// agreement, and the structural properties of the value functions.

#include "utilmax/dp_engine.hpp"

#include <cstdint>
#include <optional>

namespace utilmax {

struct OptimalityOptions {
  std::size_t trials = 10000;
  double box = 5.0;  // random strategies are uniform in [-box, box]^d per node
  std::uint64_t seed = 42;
  double tol = 1e-9;
  bool lattice = true;
  double lattice_step = 0.05;
  double lattice_box = 3.0;
  /// Skip the lattice when its estimated utility evaluations exceed this.
  double lattice_budget = 5e8;
};

struct OptimalityReport {
  double root_value = 0.0;
  double max_random = 0.0;
  std::size_t trials = 0;
  bool lattice_run = false;
  double max_lattice = 0.0;
  double pl_error_bound = 0.0;
  bool pass = false;
};

OptimalityReport verify_optimality(const SolveResult& result, const ScenarioTree& tree, const Utility& u,
                                   double capital, const OptimalityOptions& opt = {}, const Claim* claim = nullptr);

/// Exhaustive maximum of E U(V_T - B) over strategies with every coordinate on
/// the lattice {-box, -box + step, ..., box}. Nodes whose children are all
/// leaves are searched row by row using concavity along each coordinate.
double lattice_max(const ScenarioTree& tree, const Utility& u, double capital, double step, double box,
                   const Claim* claim = nullptr);

/// Estimated utility evaluations of lattice_max.
double lattice_cost(const ScenarioTree& tree, double step, double box);

struct UniquenessReport {
  std::size_t restarts = 0;
  double max_strategy_gap = 0.0;   // after projection onto D at each node
  double max_value_gap = 0.0;
  double max_orthogonal = 0.0;     // largest component of a restart strategy outside D
  bool strict = false;             // strategy agreement was required
  bool pass = false;
};

/// Re-solves with mirrored node and pivot order and with refined grids.
UniquenessReport verify_uniqueness(const SolveResult& result, const ScenarioTree& tree, const Utility& u,
                                   const SolveConfig& config, std::size_t restarts = 5, double strategy_tol = 1e-6,
                                   const Claim* claim = nullptr);

struct StructureReport {
  bool concave_nondecreasing = true;
  double chain_violation = 0.0;   // max over the grid of (E[U_{t+1}(x)] - U_t(x)) / max(1, |U_t(x)|), same for U_T
  double orthogonal_max = 0.0;    // largest |xi - proj_D xi| over nodes
  bool scaling_checked = false;
  double scaling_violation = 0.0; // max excess over tolerance in the two scaling inequalities
  std::size_t scaling_samples = 0;
};

struct ScalingParams {
  double gamma = 0.5;
  double C = 0.0;
};

StructureReport check_structure(const SolveResult& result, const ScenarioTree& tree, const Utility& u,
                                std::optional<ScalingParams> scaling = std::nullopt);

}  // namespace utilmax
