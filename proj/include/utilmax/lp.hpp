#pragma once

// Small dense linear programs solved by a two-phase tableau simplex.
// Sizes here are tens to a few hundred rows, so a dense tableau is fine.

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace utilmax::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// maximize c^T x  subject to  a_k^T x <= b_k,  e_k^T x = f_k,  lower <= x <= upper.
struct Problem {
  explicit Problem(Eigen::Index n);

  Eigen::Index num_vars() const { return objective.size(); }
  void add_le(const Eigen::VectorXd& row, double rhs);
  void add_ge(const Eigen::VectorXd& row, double rhs) { add_le(-row, -rhs); }
  void add_eq(const Eigen::VectorXd& row, double rhs);

  Eigen::VectorXd objective;
  std::vector<Eigen::VectorXd> le_rows;
  std::vector<double> le_rhs;
  std::vector<Eigen::VectorXd> eq_rows;
  std::vector<double> eq_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(Status s);

struct Options {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-10;
  /// Pivot-rule mirror: prefer the highest-index candidate column on ties
  /// and in Bland mode. Used to perturb tie-breaking between restarts.
  bool reverse_order = false;
  int max_iterations = 100000;
  /// Consecutive degenerate pivots before switching from Dantzig's rule to
  /// Bland's rule (which cannot cycle).
  int degenerate_switch = 30;
};

struct Solution {
  Status status = Status::Infeasible;
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;

  bool optimal() const { return status == Status::Optimal; }
};

Solution solve(const Problem& problem, const Options& options = {});

}  // namespace utilmax::lp
