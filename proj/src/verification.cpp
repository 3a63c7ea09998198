#include "utilmax/verification.hpp"

#include "utilmax/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace utilmax {

namespace {

double leaf_payoff(const Claim* claim, std::size_t k) { return claim ? claim->payoff[k] : 0.0; }

struct Lattice {
  const ScenarioTree& tree;
  const Utility& u;
  const Claim* claim;
  std::vector<double> pts;
  std::size_t first_leaf;

  bool pre_terminal(NodeIndex n) const {
    for (NodeIndex c : tree.children(n))
      if (!tree.node(c).is_leaf()) return false;
    return true;
  }

  // sum over children of p_c U(w + <theta, dS_c> - B_c)
  double one_step(NodeIndex n, double w, const Eigen::VectorXd& theta) const {
    double s = 0.0;
    for (NodeIndex c : tree.children(n))
      s += tree.node(c).branch_prob * u.eval(w + theta.dot(tree.increment(c)) - leaf_payoff(claim, c - first_leaf));
    return s;
  }

  // Maximum over the last coordinate of a concave lattice sequence.
  double best_last(NodeIndex n, double w, Eigen::VectorXd& theta) const {
    const Eigen::Index j = theta.size() - 1;
    auto f = [&](std::size_t k) {
      theta[j] = pts[k];
      return one_step(n, w, theta);
    };
    // first k with f(k+1) <= f(k)
    std::size_t lo = 0, hi = pts.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (f(mid + 1) > f(mid)) lo = mid + 1;
      else hi = mid;
    }
    return f(lo);
  }

  double rows(NodeIndex n, double w, Eigen::VectorXd& theta, Eigen::Index j) const {
    if (j == theta.size() - 1) return best_last(n, w, theta);
    double best = -std::numeric_limits<double>::infinity();
    for (double p : pts) {
      theta[j] = p;
      best = std::max(best, rows(n, w, theta, j + 1));
    }
    return best;
  }

  double brute(NodeIndex n, double w, Eigen::VectorXd& theta, Eigen::Index j) const {
    if (j == theta.size()) {
      double s = 0.0;
      for (NodeIndex c : tree.children(n)) s += tree.node(c).branch_prob * value(c, w + theta.dot(tree.increment(c)));
      return s;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (double p : pts) {
      theta[j] = p;
      best = std::max(best, brute(n, w, theta, j + 1));
    }
    return best;
  }

  double value(NodeIndex n, double w) const {
    if (tree.node(n).is_leaf()) return u.eval(w - leaf_payoff(claim, n - first_leaf));
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(tree.dim());
    if (pre_terminal(n)) return rows(n, w, theta, 0);
    return brute(n, w, theta, 0);
  }
};

std::vector<double> lattice_points(double step, double box) {
  const auto k = static_cast<long>(std::floor(box / step + 1e-9));
  std::vector<double> pts;
  for (long i = -k; i <= k; ++i) pts.push_back(static_cast<double>(i) * step);
  return pts;
}

double value_error_bound(const SolveResult& r, const ScenarioTree& tree, const Utility& u) {
  if (r.polished || r.grid.size() < 2 || u.exact_pl()) return 0.0;
  return static_cast<double>(tree.horizon()) * interpolation_error_bound(u, r.grid);
}

}  // namespace

double lattice_cost(const ScenarioTree& tree, double step, double box) {
  const double K = static_cast<double>(lattice_points(step, box).size());
  const int d = tree.dim();
  // cost[n] = evaluations to compute value(n, w) once
  std::vector<double> cost(tree.size(), 1.0);
  for (std::size_t i = tree.size(); i-- > 0;) {
    const auto& node = tree.node(i);
    if (node.is_leaf()) continue;
    bool pre = true;
    double child = 0.0;
    for (NodeIndex c : node.children) {
      pre = pre && tree.node(c).is_leaf();
      child += cost[c];
    }
    if (pre) cost[i] = std::pow(K, d - 1) * 2.0 * (std::log2(K) + 1.0) * child;
    else cost[i] = std::pow(K, d) * child;
  }
  return cost[tree.root()];
}

double lattice_max(const ScenarioTree& tree, const Utility& u, double capital, double step, double box,
                   const Claim* claim) {
  if (!(step > 0.0) || !(box >= 0.0)) raise(ErrorCode::InvalidArgument, "lattice step and box must be positive");
  Lattice lat{tree, u, claim, lattice_points(step, box), tree.leaves().front()};
  return lat.value(tree.root(), capital);
}

OptimalityReport verify_optimality(const SolveResult& r, const ScenarioTree& tree, const Utility& u, double capital,
                                   const OptimalityOptions& opt, const Claim* claim) {
  OptimalityReport rep;
  rep.root_value = r.root_value;
  rep.trials = opt.trials;
  rep.pl_error_bound = value_error_bound(r, tree, u);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> dist(-opt.box, opt.box);
  const auto interior = tree.interior_nodes();
  std::vector<Eigen::VectorXd> strat(tree.size());
  rep.max_random = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < opt.trials; ++t) {
    for (NodeIndex n : interior) {
      strat[n].resize(tree.dim());
      for (Eigen::Index j = 0; j < tree.dim(); ++j) strat[n][j] = dist(rng);
    }
    rep.max_random = std::max(rep.max_random, expected_utility(tree, u, capital, strat, claim));
  }
  const double scale = std::max(1.0, std::abs(r.root_value));
  rep.pass = opt.trials == 0 || r.root_value >= rep.max_random - opt.tol * scale;
  if (opt.lattice && lattice_cost(tree, opt.lattice_step, opt.lattice_box) <= opt.lattice_budget) {
    rep.lattice_run = true;
    rep.max_lattice = lattice_max(tree, u, capital, opt.lattice_step, opt.lattice_box, claim);
    rep.pass = rep.pass && r.root_value >= rep.max_lattice - rep.pl_error_bound - opt.tol * scale;
  }
  return rep;
}

UniquenessReport verify_uniqueness(const SolveResult& r, const ScenarioTree& tree, const Utility& u,
                                   const SolveConfig& config, std::size_t restarts, double strategy_tol,
                                   const Claim* claim) {
  UniquenessReport rep;
  rep.strict = u.is_strictly_concave();
  const auto interior = tree.interior_nodes();
  for (std::size_t k = 0; k < restarts; ++k) {
    SolveConfig cfg = config;
    cfg.reverse_order = (k % 2 == 0) != config.reverse_order;
    if (k >= 1) cfg.grid_points = 2 * config.grid_points - 1;
    if (k >= 3) cfg.polish = !config.polish;
    if (k >= 4) cfg.grid_points = (config.grid_points + 1) / 2 + ((config.grid_points + 1) / 2 % 2 == 0 ? 1 : 0);
    cfg.check_divergence = false;
    const auto s = solve(tree, u, r.capital, cfg, claim);
    ++rep.restarts;
    rep.max_value_gap = std::max(rep.max_value_gap, std::abs(s.root_value - r.root_value));
    for (NodeIndex n : interior) {
      const Eigen::VectorXd& a = r.strategy[n];
      const Eigen::VectorXd& b = s.strategy[n];
      rep.max_orthogonal = std::max(rep.max_orthogonal, (b - s.D[n].project(b)).norm());
      rep.max_strategy_gap = std::max(rep.max_strategy_gap, (r.D[n].project(a) - r.D[n].project(b)).norm());
    }
  }
  const double value_tol = config.value_tol * std::max(1.0, std::abs(r.root_value));
  rep.pass = rep.max_value_gap <= value_tol && rep.max_orthogonal <= 1e-10 &&
             (!rep.strict || rep.max_strategy_gap <= strategy_tol);
  return rep;
}

StructureReport check_structure(const SolveResult& r, const ScenarioTree& tree, const Utility& u,
                                std::optional<ScalingParams> scaling) {
  StructureReport rep;
  const auto leaves = tree.leaves();
  const double err = value_error_bound(r, tree, u);
  for (NodeIndex n : tree.interior_nodes()) {
    rep.orthogonal_max = std::max(rep.orthogonal_max, (r.strategy[n] - r.D[n].project(r.strategy[n])).norm());
    if (!r.value_fns[n]) continue;
    const PLConcave& f = *r.value_fns[n];
    if (!is_concave_nondecreasing(f)) rep.concave_nondecreasing = false;
    const auto [lb, le] = tree.leaf_range(n);
    const double pn = tree.node(n).path_prob;
    for (double x : r.grid) {
      const double ux = f(x);
      double next = 0.0;
      for (NodeIndex c : tree.children(n)) next += tree.node(c).branch_prob * (*r.value_fns[c])(x);
      double last = 0.0;
      for (std::size_t k = lb; k < le; ++k) last += tree.node(leaves[k]).path_prob / pn * (*r.value_fns[leaves[k]])(x);
      const double w = std::max(1.0, std::abs(ux));
      rep.chain_violation = std::max({rep.chain_violation, (next - ux) / w, (last - next) / w});
    }
    if (!scaling) continue;
    rep.scaling_checked = true;
    // Stay in the middle half of the grid, away from the extrapolated ends.
    const double lo = 0.5 * (r.grid.front() - r.capital) + r.capital;
    const double hi = 0.5 * (r.grid.back() - r.capital) + r.capital;
    const std::size_t stride = std::max<std::size_t>(1, r.grid.size() / 64);
    for (std::size_t i = 0; i < r.grid.size(); i += stride) {
      const double x = r.grid[i];
      for (double lam : {1.0, 1.25, 1.5, 2.0, 3.0, 5.0}) {
        const double lx = lam * x;
        if (x < lo || x > hi || lx < lo || lx > hi) continue;
        const double lhs = f(lx);
        const double fx = f(x);
        const double lg = std::pow(lam, scaling->gamma);
        const double r21 = lam * fx + scaling->C * lg;
        const double r22 = lg * fx + scaling->C * lg;
        const double tol21 = lam * err + 1e-9 * std::max(1.0, std::abs(r21));
        const double tol22 = lg * err + 1e-9 * std::max(1.0, std::abs(r22));
        rep.scaling_violation = std::max({rep.scaling_violation, lhs - r21 - tol21, lhs - r22 - tol22});
        ++rep.scaling_samples;
      }
    }
  }
  return rep;
}

}  // namespace utilmax
