#pragma once

// One-step problem at a node: G(x) = sup_xi sum_i p_i V_i(x + <xi, y_i>)
// with one piecewise-linear concave V_i per child.

#include "utilmax/concave_fn.hpp"
#include "utilmax/geometry.hpp"
#include "utilmax/lp.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace utilmax {

struct OneStepProblem {
  ConditionalDist dist;                 // one outcome per child, unmerged
  std::vector<const PLConcave*> values;  // V_i, aligned with dist.increments
  Subspace D;
  std::optional<Cone> cone;
  double phi_max = 1e3;
};

struct OneStepOptions {
  lp::Options lp;
  /// Pick the optimizer of least l1 norm among ties.
  bool min_norm = true;
  /// |xi_j| > phi_max * (1 - boundary_rel) counts as touching the box.
  double boundary_rel = 1e-6;
  int max_cut_rounds = 500;
};

struct OneStepPoint {
  Eigen::VectorXd xi;       // in R^d
  Eigen::VectorXd coords;   // D-basis coordinates of xi
  double value = 0.0;       // sum_i p_i V_i(x + <xi, y_i>), evaluated directly
  bool interior = true;
  int lp_solves = 0;
};

struct OneStepSolution {
  PLConcave G;
  std::vector<OneStepPoint> points;  // aligned with the grid

  std::vector<bool> attained_interior() const;
};

/// Carried between neighbouring wealth points: supporting lines already known
/// to be relevant, as (outcome, segment) pairs.
struct CutPool {
  std::vector<std::pair<std::size_t, long>> cuts;
};

/// maximize sum_l weights[l] * fns[l](offsets[l] + <maps[l], z>) subject to
/// |<box_rows.row(j), z>| <= phi and z >= lower. Solved exactly by cutting
/// planes over the supporting lines of the fns.
struct PLProgram {
  Eigen::Index nz = 0;
  Eigen::VectorXd lower;
  std::vector<Eigen::VectorXd> maps;
  std::vector<double> offsets;
  std::vector<double> weights;
  std::vector<const PLConcave*> fns;
  Eigen::MatrixXd box_rows;
  double phi = 1e3;
};

struct PLProgramResult {
  Eigen::VectorXd z;
  double value = 0.0;
  int lp_solves = 0;
};

PLProgramResult solve_pl_program(const PLProgram& program, const OneStepOptions& opt, CutPool* pool = nullptr);

OneStepPoint solve_at(const OneStepProblem& problem, double x, const OneStepOptions& opt = {},
                      CutPool* pool = nullptr);

OneStepSolution solve_one_step(const OneStepProblem& problem, std::span<const double> grid,
                               const OneStepOptions& opt = {});

double one_step_objective(const OneStepProblem& problem, double x, const Eigen::VectorXd& xi);

Eigen::VectorXd project_strategy(const Eigen::VectorXd& xi, const Subspace& D);

/// Smallest concave nondecreasing majorant of the points (grid[i], values[i]),
/// returned as values on the same grid.
std::vector<double> concave_majorant(std::span<const double> grid, std::span<const double> values);

}  // namespace utilmax
