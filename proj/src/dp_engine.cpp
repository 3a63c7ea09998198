#include "utilmax/dp_engine.hpp"

#include "utilmax/errors.hpp"
#include "utilmax/exact_solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace utilmax {

Claim make_claim(const ScenarioTree& tree, const std::vector<std::pair<NodeId, double>>& payoffs, double bound) {
  Claim c;
  c.bound = bound;
  c.payoff.assign(tree.leaves().size(), 0.0);
  const NodeIndex first = tree.leaves().front();
  for (const auto& [id, b] : payoffs) {
    const NodeIndex n = tree.index_of(id);
    if (!tree.node(n).is_leaf()) raise(ErrorCode::MalformedInput, "claim payoff given at a non-leaf node");
    if (!std::isfinite(b)) raise(ErrorCode::MalformedInput, "claim payoff is not finite");
    c.payoff[n - first] = b;
  }
  for (double b : c.payoff)
    if (std::abs(b) > bound) raise(ErrorCode::MalformedInput, "claim payoff exceeds its declared bound");
  return c;
}

Claim constant_claim(const ScenarioTree& tree, double b) {
  return {std::vector<double>(tree.leaves().size(), b), std::abs(b)};
}

int resolve_threads(int requested) {
  if (const char* env = std::getenv("UTILMAX_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<Subspace> node_subspaces(const ScenarioTree& tree, double rank_tol) {
  std::vector<Subspace> D(tree.size(), Subspace::zero(tree.dim()));
  for (NodeIndex n : tree.interior_nodes()) D[n] = linear_span(conditional_dist(tree, n), rank_tol);
  return D;
}

void require_no_arbitrage(const ScenarioTree& tree, const std::optional<Cone>& cone, double rank_tol) {
  for (NodeIndex n : tree.interior_nodes()) {
    const auto dist = conditional_dist(tree, n);
    const auto v = check_na(dist, linear_span(dist, rank_tol), cone ? &*cone : nullptr);
    if (v.arbitrage) {
      std::ostringstream os;
      os << "arbitrage at node " << tree.node(n).id;
      raise(ErrorCode::ArbitrageDetected, os.str());
    }
  }
}

std::vector<double> wealth_grid(const ScenarioTree& tree, double capital, const SolveConfig& config) {
  if (config.grid_points < 3) raise(ErrorCode::InvalidArgument, "grid needs at least 3 points");
  double M = 0.0;
  for (int t = 0; t < tree.horizon(); ++t) {
    double m = 0.0;
    for (NodeIndex n : tree.slice(t))
      for (NodeIndex c : tree.children(n)) m = std::max(m, tree.increment(c).lpNorm<1>());
    M += m;
  }
  double R = std::min(config.phi_max, config.range_phi) * M;
  if (!(R > 0.0)) R = 1.0;
  const std::size_t n = config.grid_points | 1u;  // odd, so the capital is a grid point
  const auto mid = static_cast<double>(n / 2);
  const double h = R / mid;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = capital + h * (static_cast<double>(i) - mid);
  g[n / 2] = capital;
  return g;
}

double expected_utility(const ScenarioTree& tree, const Utility& u, double capital,
                        const std::vector<Eigen::VectorXd>& strategy, const Claim* claim) {
  const auto w = propagate_wealth(tree, tree.root(), capital, strategy);
  const auto leaves = tree.leaves();
  double s = 0.0;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const double b = claim ? claim->payoff[k] : 0.0;
    s += tree.node(leaves[k]).path_prob * u.eval(w[leaves[k]] - b);
  }
  return s;
}

namespace {

PLConcave terminal_function(const Utility& u, double b, const std::vector<double>& grid) {
  if (auto f = u.exact_pl()) return f->shifted(b);
  std::vector<double> ys(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) ys[i] = u.eval(grid[i] - b);
  const std::size_t n = grid.size();
  const double left = (ys[1] - ys[0]) / (grid[1] - grid[0]);
  const double right = (ys[n - 1] - ys[n - 2]) / (grid[n - 1] - grid[n - 2]);
  return PLConcave(grid, std::move(ys), left, right);
}

OneStepProblem node_problem(const ScenarioTree& tree, NodeIndex n, const SolveResult& r, const SolveConfig& cfg) {
  OneStepProblem p{conditional_dist(tree, n, false), {}, r.D[n], cfg.cone, cfg.phi_max};
  for (NodeIndex c : tree.children(n)) p.values.push_back(&*r.value_fns[c]);
  return p;
}

OneStepOptions step_options(const SolveConfig& cfg) {
  OneStepOptions o;
  o.lp.reverse_order = cfg.reverse_order;
  return o;
}

// Grid backward pass followed by the forward pass at realized wealth.
void grid_pass(const ScenarioTree& tree, const Utility& u, SolveResult& r, const SolveConfig& cfg) {
  const int threads = resolve_threads(cfg.threads);
  const auto opt = step_options(cfg);
  r.value_fns.assign(tree.size(), std::nullopt);
  const auto leaves = tree.leaves();
  for (std::size_t k = 0; k < leaves.size(); ++k)
    r.value_fns[leaves[k]] = terminal_function(u, r.claim.empty() ? 0.0 : r.claim[k], r.grid);

  for (int t = tree.horizon() - 1; t >= 0; --t) {
    const auto slice = tree.slice(t);
    parallel_for(slice.size(), threads, [&](std::size_t k) {
      const NodeIndex n = slice[cfg.reverse_order ? slice.size() - 1 - k : k];
      const auto sol = solve_one_step(node_problem(tree, n, r, cfg), r.grid, opt);
      r.value_fns[n] = sol.G;
    });
  }

  r.strategy.assign(tree.size(), Eigen::VectorXd());
  r.strategy_coords.assign(tree.size(), Eigen::VectorXd());
  r.attained_interior.assign(tree.size(), 1);
  r.wealth.assign(tree.size(), 0.0);
  r.wealth[tree.root()] = r.capital;
  for (NodeIndex n : subtree_interior(tree, tree.root())) {
    const auto pt = solve_at(node_problem(tree, n, r, cfg), r.wealth[n], opt);
    r.strategy[n] = pt.xi;
    r.strategy_coords[n] = pt.coords;
    r.attained_interior[n] = pt.interior ? 1 : 0;
    for (NodeIndex c : tree.children(n)) r.wealth[c] = r.wealth[n] + pt.xi.dot(tree.increment(c));
  }
  r.boundary = std::any_of(r.attained_interior.begin(), r.attained_interior.end(), [](char c) { return c == 0; });
  r.root_value_grid = r.value_fns[tree.root()]->eval(r.capital);
}

void adopt_exact(const ScenarioTree& tree, const ExactSolution& ex, SolveResult& r) {
  r.strategy.assign(tree.size(), Eigen::VectorXd());
  r.strategy_coords.assign(tree.size(), Eigen::VectorXd());
  for (NodeIndex n : tree.interior_nodes()) {
    r.strategy[n] = ex.xi[n];
    r.strategy_coords[n] = r.D[n].coords(ex.xi[n]);
  }
  r.attained_interior = ex.interior;
  r.boundary = ex.boundary;
  r.wealth = propagate_wealth(tree, tree.root(), r.capital, r.strategy);
}

ExactOptions exact_options(const SolveConfig& cfg) {
  ExactOptions o;
  o.phi_max = cfg.phi_max;
  o.cone = cfg.cone;
  o.one_step = step_options(cfg);
  return o;
}

}  // namespace

SolveResult solve(const ScenarioTree& tree, const Utility& u, double capital, const SolveConfig& cfg,
                  const Claim* claim) {
  if (!std::isfinite(capital)) raise(ErrorCode::InvalidArgument, "capital must be finite");
  if (!(cfg.phi_max > 0.0)) raise(ErrorCode::InvalidArgument, "phi_max must be positive");
  if (cfg.cone && cfg.cone->rays.rows() != tree.dim())
    raise(ErrorCode::InvalidArgument, "cone rays must live in R^d");
  if (claim && claim->payoff.size() != tree.leaves().size())
    raise(ErrorCode::InvalidArgument, "claim needs one payoff per leaf");
  if (cfg.check_arbitrage) require_no_arbitrage(tree, cfg.cone, cfg.rank_tol);

  SolveResult r;
  r.capital = capital;
  r.phi_max = cfg.phi_max;
  r.cone = cfg.cone;
  r.D = node_subspaces(tree, cfg.rank_tol);
  if (claim) r.claim = claim->payoff;
  const Claim* cl = claim;

  if (cfg.exact_only) {
    const auto ex = solve_exact(tree, u, tree.root(), capital, r.claim, r.D, exact_options(cfg));
    adopt_exact(tree, ex, r);
    r.root_value = expected_utility(tree, u, capital, r.strategy, cl);
    r.root_value_grid = r.root_value;
    r.polished = true;
  } else {
    SolveConfig round_cfg = cfg;
    r.grid = wealth_grid(tree, capital, round_cfg);
    grid_pass(tree, u, r, round_cfg);
    r.root_value = expected_utility(tree, u, capital, r.strategy, cl);
    r.history.push_back({r.grid.size(), r.root_value});

    const bool can_polish = cfg.polish && exact_num_vars(tree, tree.root(), r.D, cfg.cone) <= cfg.polish_max_vars;
    if (can_polish) {
      // A boundary grid strategy can be an artefact of the linear extension
      // past the grid, so start from zero then.
      const auto* start = r.boundary ? nullptr : &r.strategy;
      const auto ex = solve_exact(tree, u, tree.root(), capital, r.claim, r.D, exact_options(cfg), start);
      SolveResult polished = r;
      adopt_exact(tree, ex, polished);
      const double v = expected_utility(tree, u, capital, polished.strategy, cl);
      if (v >= r.root_value - 1e-12 * std::max(1.0, std::abs(r.root_value))) {
        r = std::move(polished);
        r.root_value = v;
        r.polished = true;
      }
    }
    // With exact leaf functions and a single period the forward pass is exact.
    const bool grid_exact = tree.horizon() == 1 && u.exact_pl().has_value();
    if (!r.polished && !grid_exact) {
      bool converged = false;
      for (int round = 0; round < cfg.refine_rounds; ++round) {
        const double before = r.root_value;
        round_cfg.grid_points = 2 * r.grid.size() - 1;
        r.grid = wealth_grid(tree, capital, round_cfg);
        grid_pass(tree, u, r, round_cfg);
        r.root_value = expected_utility(tree, u, capital, r.strategy, cl);
        r.history.push_back({r.grid.size(), r.root_value});
        if (std::abs(r.root_value - before) < cfg.value_tol) {
          converged = true;
          break;
        }
      }
      if (!converged) {
        std::ostringstream os;
        os << "root value still moving after " << cfg.refine_rounds << " grid doublings";
        raise(ErrorCode::GridNotConverged, os.str());
      }
    }
  }

  if (r.boundary && cfg.check_divergence) {
    r.divergence_values.push_back(r.root_value);
    SolveConfig c2 = cfg;
    c2.check_divergence = false;
    c2.check_arbitrage = false;
    for (int k = 1; k <= 2; ++k) {
      c2.phi_max = cfg.phi_max * static_cast<double>(1 << k);
      r.divergence_values.push_back(solve(tree, u, capital, c2, claim).root_value);
    }
    const double d1 = r.divergence_values[1] - r.divergence_values[0];
    const double d2 = r.divergence_values[2] - r.divergence_values[1];
    // Growth that does not contract under doubling signals an infinite supremum.
    if (d1 > cfg.divergence_tol && d2 > cfg.divergence_tol && d2 >= 0.75 * d1) {
      std::ostringstream os;
      os << "root value keeps growing with the strategy bound (increments " << d1 << ", " << d2 << ")";
      raise(ErrorCode::ValueDiverged, os.str());
    }
  }
  return r;
}

}  // namespace utilmax
