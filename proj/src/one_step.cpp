#include "utilmax/one_step.hpp"

#include "utilmax/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>

namespace utilmax {

std::vector<bool> OneStepSolution::attained_interior() const {
  std::vector<bool> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.interior);
  return out;
}

namespace {

using CutKey = std::pair<std::size_t, long>;

class CutSet {
 public:
  explicit CutSet(const PLProgram& p) : p_(p) {}

  bool insert(std::size_t l, long k) { return keys_.insert({l, k}).second; }

  // Supporting lines of fns[l] active at wealth w; true if any was new.
  bool add_active(std::size_t l, double w) {
    const auto& f = *p_.fns[l];
    const long k = f.segment(w);
    bool added = insert(l, k);
    if (k >= 0 && w == f.breakpoints()[static_cast<std::size_t>(k)]) added = insert(l, k - 1) || added;
    return added;
  }

  bool covers(std::size_t l) const {
    auto it = keys_.lower_bound({l, std::numeric_limits<long>::min()});
    return it != keys_.end() && it->first == l;
  }

  // Rows v_l - slope * <map_l, z> <= slope * offset_l + intercept, laid out
  // over `width` columns with z first and v next.
  void emit(lp::Problem& prob, Eigen::Index width) const {
    const Eigen::Index nz = p_.nz;
    for (const auto& [l, k] : keys_) {
      const Line line = p_.fns[l]->segment_line(k);
      Eigen::VectorXd row = Eigen::VectorXd::Zero(width);
      row.head(nz) = -line.slope * p_.maps[l];
      row[nz + static_cast<Eigen::Index>(l)] = 1.0;
      prob.add_le(row, line.slope * p_.offsets[l] + line.intercept);
    }
  }

 private:
  const PLProgram& p_;
  std::set<CutKey> keys_;
};

double wealth_of(const PLProgram& p, std::size_t l, const Eigen::VectorXd& z) { return p.offsets[l] + p.maps[l].dot(z); }

double true_value(const PLProgram& p, const Eigen::VectorXd& z) {
  double s = 0.0;
  for (std::size_t l = 0; l < p.fns.size(); ++l) s += p.weights[l] * p.fns[l]->eval(wealth_of(p, l, z));
  return s;
}

void check_status(const lp::Solution& sol) {
  switch (sol.status) {
    case lp::Status::Optimal: return;
    case lp::Status::Unbounded: raise(ErrorCode::UnboundedObjective, "one-step LP is unbounded");
    case lp::Status::Infeasible: raise(ErrorCode::InfeasibleCone, "one-step LP has an empty feasible set");
    case lp::Status::IterationLimit: raise(ErrorCode::UnboundedObjective, "one-step LP hit the iteration limit");
  }
}

void add_box(lp::Problem& prob, const PLProgram& p, Eigen::Index width) {
  for (Eigen::Index j = 0; j < p.box_rows.rows(); ++j) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(width);
    row.head(p.nz) = p.box_rows.row(j).transpose();
    prob.add_le(row, p.phi);
    prob.add_le(-row, p.phi);
  }
}

// Cut rounds: solve, add the lines active at the new wealths, repeat until
// no new line appears. `build` makes the LP for the current cut set.
template <class Build>
lp::Solution cut_loop(const PLProgram& p, CutSet& cuts, const OneStepOptions& opt, Build build, int& solves) {
  lp::Solution sol;
  for (int round = 0; round < opt.max_cut_rounds; ++round) {
    sol = lp::solve(build(), opt.lp);
    ++solves;
    check_status(sol);
    const Eigen::VectorXd z = sol.x.head(p.nz);
    bool added = false;
    for (std::size_t l = 0; l < p.fns.size(); ++l) {
      const double w = wealth_of(p, l, z);
      const double v = sol.x[p.nz + static_cast<Eigen::Index>(l)];
      const double f = p.fns[l]->eval(w);
      if (v > f + 1e-13 * std::max(1.0, std::abs(f))) added = cuts.add_active(l, w) || added;
    }
    if (!added) return sol;
  }
  return sol;
}

}  // namespace

PLProgramResult solve_pl_program(const PLProgram& p, const OneStepOptions& opt, CutPool* pool) {
  const Eigen::Index nv = static_cast<Eigen::Index>(p.fns.size());
  const Eigen::Index nz = p.nz;
  CutSet cuts(p);
  if (pool)
    for (const auto& [l, k] : pool->cuts)
      if (l < p.fns.size()) cuts.insert(l, k);
  for (std::size_t l = 0; l < p.fns.size(); ++l)
    if (!cuts.covers(l)) cuts.add_active(l, p.offsets[l]);

  PLProgramResult res;
  const Eigen::Index width = nz + nv;
  auto primary = [&]() {
    lp::Problem prob(width);
    for (Eigen::Index l = 0; l < nv; ++l) prob.objective[nz + l] = p.weights[static_cast<std::size_t>(l)];
    if (p.lower.size() == nz) prob.lower.head(nz) = p.lower;
    add_box(prob, p, width);
    cuts.emit(prob, width);
    return prob;
  };
  const auto sol = cut_loop(p, cuts, opt, primary, res.lp_solves);
  res.z = sol.x.head(nz);
  res.value = true_value(p, res.z);

  const Eigen::Index nb = p.box_rows.rows();
  if (opt.min_norm && nb > 0) {
    const double target = res.value - 1e-12 * std::max(1.0, std::abs(res.value));
    const Eigen::Index w2 = width + nb;
    auto secondary = [&]() {
      lp::Problem prob(w2);
      prob.objective.tail(nb).setConstant(-1.0);
      if (p.lower.size() == nz) prob.lower.head(nz) = p.lower;
      prob.lower.tail(nb).setZero();
      add_box(prob, p, w2);
      cuts.emit(prob, w2);
      Eigen::VectorXd obj = Eigen::VectorXd::Zero(w2);
      for (Eigen::Index l = 0; l < nv; ++l) obj[nz + l] = p.weights[static_cast<std::size_t>(l)];
      prob.add_ge(obj, target);
      for (Eigen::Index j = 0; j < nb; ++j) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(w2);
        row.head(nz) = p.box_rows.row(j).transpose();
        row[width + j] = -1.0;
        prob.add_le(row, 0.0);
        row.head(nz) *= -1.0;
        prob.add_le(row, 0.0);
      }
      return prob;
    };
    // The tie-break LP can fail on badly scaled cuts; the primary point stands then.
    std::optional<lp::Solution> sol2;
    try {
      sol2 = cut_loop(p, cuts, opt, secondary, res.lp_solves);
    } catch (const Error&) {
    }
    if (sol2) {
      const Eigen::VectorXd z2 = sol2->x.head(nz);
      const double v2 = true_value(p, z2);
      if (v2 >= res.value - 1e-14 * std::max(1.0, std::abs(res.value))) {
        res.z = z2;
        res.value = v2;
      }
    }
  }

  if (pool) {
    pool->cuts.clear();
    for (std::size_t l = 0; l < p.fns.size(); ++l) {
      const auto& f = *p.fns[l];
      const double w = wealth_of(p, l, res.z);
      const long k = f.segment(w);
      pool->cuts.emplace_back(l, k);
      if (k >= 0 && w == f.breakpoints()[static_cast<std::size_t>(k)]) pool->cuts.emplace_back(l, k - 1);
    }
  }
  return res;
}

double one_step_objective(const OneStepProblem& problem, double x, const Eigen::VectorXd& xi) {
  double s = 0.0;
  for (std::size_t i = 0; i < problem.dist.size(); ++i)
    s += problem.dist.probs[i] * problem.values[i]->eval(x + problem.dist.increments[i].dot(xi));
  return s;
}

Eigen::VectorXd project_strategy(const Eigen::VectorXd& xi, const Subspace& D) { return D.project(xi); }

OneStepPoint solve_at(const OneStepProblem& problem, double x, const OneStepOptions& opt, CutPool* pool) {
  const int d = problem.dist.dim();
  OneStepPoint pt;
  if (problem.values.size() != problem.dist.size())
    raise(ErrorCode::InvalidArgument, "one-step problem needs one value function per outcome");
  if (problem.D.dim() == 0) {
    pt.xi = Eigen::VectorXd::Zero(d);
    pt.coords = Eigen::VectorXd::Zero(0);
    pt.value = one_step_objective(problem, x, pt.xi);
    return pt;
  }
  const Eigen::MatrixXd gen = problem.cone ? problem.cone->rays : problem.D.basis;
  PLProgram p;
  p.nz = gen.cols();
  if (problem.cone) p.lower = Eigen::VectorXd::Zero(p.nz);
  for (std::size_t i = 0; i < problem.dist.size(); ++i) {
    p.maps.push_back(gen.transpose() * problem.dist.increments[i]);
    p.offsets.push_back(x);
    p.weights.push_back(problem.dist.probs[i]);
    p.fns.push_back(problem.values[i]);
  }
  std::vector<Eigen::Index> rows;
  for (Eigen::Index j = 0; j < gen.rows(); ++j)
    if (gen.row(j).cwiseAbs().maxCoeff() > 0.0) rows.push_back(j);
  p.box_rows.resize(static_cast<Eigen::Index>(rows.size()), p.nz);
  for (std::size_t r = 0; r < rows.size(); ++r) p.box_rows.row(static_cast<Eigen::Index>(r)) = gen.row(rows[r]);
  p.phi = problem.phi_max;

  const auto res = solve_pl_program(p, opt, pool);
  pt.xi = gen * res.z;
  pt.coords = problem.D.coords(pt.xi);
  pt.value = one_step_objective(problem, x, pt.xi);
  pt.interior = pt.xi.cwiseAbs().maxCoeff() < problem.phi_max * (1.0 - opt.boundary_rel);
  pt.lp_solves = res.lp_solves;
  return pt;
}

std::vector<double> concave_majorant(std::span<const double> grid, std::span<const double> values) {
  const std::size_t n = grid.size();
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < n; ++i) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2];
      const std::size_t b = hull.back();
      // Drop b when it lies on or below the chord from a to i.
      const double lhs = (values[b] - values[a]) * (grid[i] - grid[a]);
      const double rhs = (values[i] - values[a]) * (grid[b] - grid[a]);
      if (lhs <= rhs) hull.pop_back();
      else break;
    }
    hull.push_back(i);
  }
  std::vector<double> out(n);
  std::size_t h = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (h + 1 < hull.size() && hull[h + 1] <= i) ++h;
    const std::size_t a = hull[h];
    if (a == i) {
      out[i] = values[i];
      continue;
    }
    const std::size_t b = hull[h + 1];
    const double t = (grid[i] - grid[a]) / (grid[b] - grid[a]);
    out[i] = std::max(values[i], values[a] + t * (values[b] - values[a]));
  }
  for (std::size_t i = 1; i < n; ++i) out[i] = std::max(out[i], out[i - 1]);
  return out;
}

OneStepSolution solve_one_step(const OneStepProblem& problem, std::span<const double> grid,
                               const OneStepOptions& opt) {
  if (grid.size() < 2) raise(ErrorCode::InvalidArgument, "one-step grid needs at least two points");
  std::vector<OneStepPoint> points;
  points.reserve(grid.size());
  CutPool pool;
  std::vector<double> vals;
  vals.reserve(grid.size());
  for (double x : grid) {
    points.push_back(solve_at(problem, x, opt, &pool));
    vals.push_back(points.back().value);
  }
  auto g = concave_majorant(grid, vals);
  const double left = (g[1] - g[0]) / (grid[1] - grid[0]);
  const std::size_t n = g.size();
  const double right = std::max(0.0, (g[n - 1] - g[n - 2]) / (grid[n - 1] - grid[n - 2]));
  return {PLConcave(std::vector<double>(grid.begin(), grid.end()), std::move(g), left, right), std::move(points)};
}

}  // namespace utilmax
