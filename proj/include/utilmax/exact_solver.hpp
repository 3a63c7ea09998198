#pragma once

// Direct solve of the whole (sub)tree problem at one initial wealth:
// maximize E[U(V_T - B) | node] over predictable strategies, with strategy
// variables in D coordinates (or cone weights). Damped Newton for smooth
// utilities, cutting-plane LP for piecewise-linear ones.

#include "utilmax/geometry.hpp"
#include "utilmax/one_step.hpp"
#include "utilmax/scenario_tree.hpp"
#include "utilmax/utility.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace utilmax {

struct ExactOptions {
  double phi_max = 1e3;
  std::optional<Cone> cone;
  OneStepOptions one_step;
  int max_iterations = 200;
};

struct ExactSolution {
  std::vector<Eigen::VectorXd> xi;  // per node; empty for leaves and nodes outside the subtree
  std::vector<char> interior;       // per node; 1 unless the strategy touches the box
  double value = 0.0;
  bool boundary = false;
  bool converged = true;
  int iterations = 0;
  std::size_t num_vars = 0;
};

/// `claim` is indexed like tree.leaves() (empty means no claim); `D` holds
/// one subspace per node. `start`, when given, seeds the smooth solver.
ExactSolution solve_exact(const ScenarioTree& tree, const Utility& u, NodeIndex root, double wealth,
                          std::span<const double> claim, const std::vector<Subspace>& D, const ExactOptions& opt,
                          const std::vector<Eigen::VectorXd>* start = nullptr);

/// Number of strategy variables solve_exact would use on the subtree.
std::size_t exact_num_vars(const ScenarioTree& tree, NodeIndex root, const std::vector<Subspace>& D,
                           const std::optional<Cone>& cone);

/// Wealth at every node of the subtree under `xi` (NaN outside it).
std::vector<double> propagate_wealth(const ScenarioTree& tree, NodeIndex root, double wealth,
                                     const std::vector<Eigen::VectorXd>& xi);

/// Interior nodes of the subtree rooted at `root`, parents first.
std::vector<NodeIndex> subtree_interior(const ScenarioTree& tree, NodeIndex root);

}  // namespace utilmax
