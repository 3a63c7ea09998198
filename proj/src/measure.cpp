#include "utilmax/measure.hpp"

#include "utilmax/errors.hpp"
#include "utilmax/exact_solver.hpp"
#include "utilmax/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace utilmax {

std::vector<Eigen::VectorXd> conditional_drifts(const ScenarioTree& tree, const std::vector<double>& leaf_Q) {
  // Q mass of every node, accumulated leaves-up (BFS order puts parents first).
  std::vector<double> mass(tree.size(), 0.0);
  const auto leaves = tree.leaves();
  for (std::size_t k = 0; k < leaves.size(); ++k) mass[leaves[k]] = leaf_Q[k];
  for (std::size_t i = tree.size(); i-- > 0;)
    if (auto p = tree.node(i).parent) mass[*p] += mass[i];
  std::vector<Eigen::VectorXd> out(tree.size());
  for (NodeIndex n : tree.interior_nodes()) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(tree.dim());
    if (mass[n] > 0.0)
      for (NodeIndex c : tree.children(n)) e += (mass[c] / mass[n]) * tree.increment(c);
    out[n] = e;
  }
  return out;
}

namespace {

double max_norm(const std::vector<Eigen::VectorXd>& v) {
  double m = 0.0;
  for (const auto& e : v)
    if (e.size() > 0) m = std::max(m, e.cwiseAbs().maxCoeff());
  return m;
}

double leaf_claim(const SolveResult& r, std::size_t k) { return r.claim.empty() ? 0.0 : r.claim[k]; }

// Find g_l in [right slope, left slope] at every leaf with
// sum_{l below n} pi_l g_l dS_{n,l} = 0 at every interior node n.
std::optional<std::vector<double>> subdifferential_selection(const SolveResult& r, const ScenarioTree& tree,
                                                             const Utility& u) {
  const auto leaves = tree.leaves();
  const auto nl = static_cast<Eigen::Index>(leaves.size());
  const NodeIndex first = leaves.front();
  lp::Problem prob(nl);
  for (Eigen::Index k = 0; k < nl; ++k) {
    const NodeIndex leaf = leaves[static_cast<std::size_t>(k)];
    const double w = r.wealth[leaf] - leaf_claim(r, static_cast<std::size_t>(k));
    // a kink within eps of the realized wealth still counts
    const double eps = 1e-9 * std::max(1.0, std::abs(w));
    prob.lower[k] = std::max(0.0, u.right_derivative(w + eps));
    prob.upper[k] = u.left_derivative(w - eps);
    prob.objective[k] = tree.node(leaf).path_prob;
  }
  for (NodeIndex n : tree.interior_nodes()) {
    const auto& B = r.D[n].basis;
    if (B.cols() == 0) continue;
    const auto [lb, le] = tree.leaf_range(n);
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(B.cols(), nl);
    for (std::size_t k = lb; k < le; ++k) {
      const NodeIndex leaf = leaves[k];
      const NodeIndex c = tree.child_towards(n, leaf);
      rows.col(static_cast<Eigen::Index>(leaf - first)) = tree.node(leaf).path_prob * (B.transpose() * tree.increment(c));
    }
    for (Eigen::Index j = 0; j < rows.rows(); ++j) prob.add_eq(rows.row(j).transpose(), 0.0);
  }
  const auto sol = lp::solve(prob);
  if (!sol.optimal() || !(sol.value > 0.0)) return std::nullopt;
  return std::vector<double>(sol.x.data(), sol.x.data() + sol.x.size());
}

}  // namespace

MeasureReport martingale_measure(const SolveResult& r, const ScenarioTree& tree, const Utility& u,
                                 const MeasureOptions& opt) {
  if (r.boundary && !opt.force)
    raise(ErrorCode::BoundaryOptimum, "optimal strategy touches the strategy bound; first-order conditions need not hold");
  const auto leaves = tree.leaves();
  MeasureReport rep;
  std::vector<double> marg(leaves.size());
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    marg[k] = u.left_derivative(r.wealth[leaves[k]] - leaf_claim(r, k));
    if (!(marg[k] > 0.0)) {
      std::ostringstream os;
      os << "U' vanishes at the terminal wealth of leaf " << tree.node(leaves[k]).id;
      raise(ErrorCode::ZeroDerivative, os.str());
    }
    rep.expected_marginal += tree.node(leaves[k]).path_prob * marg[k];
  }
  rep.density.resize(leaves.size());
  rep.leaf_Q.resize(leaves.size());
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    rep.density[k] = marg[k] / rep.expected_marginal;
    rep.leaf_Q[k] = tree.node(leaves[k]).path_prob * rep.density[k];
  }
  rep.density_min = *std::min_element(rep.density.begin(), rep.density.end());
  rep.density_max = *std::max_element(rep.density.begin(), rep.density.end());
  rep.residuals = conditional_drifts(tree, rep.leaf_Q);
  rep.max_residual = max_norm(rep.residuals);
  rep.within_tol = rep.max_residual <= opt.fo_tol;

  if (!u.is_smooth() && !r.cone) {
    rep.subdifferential = true;
    if (auto g = subdifferential_selection(r, tree, u)) {
      double eg = 0.0;
      for (std::size_t k = 0; k < leaves.size(); ++k) eg += tree.node(leaves[k]).path_prob * (*g)[k];
      rep.selection_density.resize(leaves.size());
      std::vector<double> q(leaves.size());
      for (std::size_t k = 0; k < leaves.size(); ++k) {
        rep.selection_density[k] = (*g)[k] / eg;
        q[k] = tree.node(leaves[k]).path_prob * rep.selection_density[k];
      }
      rep.selection_max_residual = max_norm(conditional_drifts(tree, q));
      rep.subdifferential_feasible = true;
      rep.within_tol = rep.selection_max_residual <= opt.fo_tol;
    } else {
      rep.within_tol = false;
    }
  }
  return rep;
}

EnvelopeReport envelope_check(const SolveResult& r, const ScenarioTree& tree, const Utility& u, NodeIndex node,
                              double h) {
  if (!(h > 0.0)) raise(ErrorCode::InvalidArgument, "envelope step must be positive");
  EnvelopeReport rep;
  rep.node = node;
  rep.h = h;
  rep.wealth = r.wealth[node];
  ExactOptions opt;
  opt.phi_max = r.phi_max;
  opt.cone = r.cone;
  auto value_at = [&](double w) {
    if (tree.node(node).is_leaf()) {
      const double b = r.claim.empty() ? 0.0 : r.claim[node - tree.leaves().front()];
      return u.eval(w - b);
    }
    return solve_exact(tree, u, node, w, r.claim, r.D, opt, &r.strategy).value;
  };
  rep.finite_difference = (value_at(rep.wealth + h) - value_at(rep.wealth - h)) / (2.0 * h);
  const auto [lb, le] = tree.leaf_range(node);
  const auto leaves = tree.leaves();
  double s = 0.0;
  for (std::size_t k = lb; k < le; ++k)
    s += tree.node(leaves[k]).path_prob * u.left_derivative(r.wealth[leaves[k]] - leaf_claim(r, k));
  rep.expected_marginal = s / tree.node(node).path_prob;
  rep.gap = std::abs(rep.finite_difference - rep.expected_marginal);
  return rep;
}

PriceReport price_claim(const ScenarioTree& tree, const Utility& u, double capital, const Claim& claim,
                        const SolveConfig& config, double price_tol, int max_iterations) {
  if (!(price_tol > 0.0)) raise(ErrorCode::InvalidArgument, "price tolerance must be positive");
  if (claim.payoff.size() != tree.leaves().size()) raise(ErrorCode::InvalidArgument, "claim needs one payoff per leaf");
  for (double b : claim.payoff)
    if (std::abs(b) > claim.bound) raise(ErrorCode::InvalidArgument, "claim payoff exceeds its declared bound");
  SolveConfig cfg = config;
  cfg.exact_only = true;
  cfg.check_divergence = false;
  require_no_arbitrage(tree, cfg.cone, cfg.rank_tol);
  cfg.check_arbitrage = false;

  PriceReport rep;
  rep.base_value = solve(tree, u, capital, cfg).root_value;
  auto f = [&](double p) { return solve(tree, u, capital + p, cfg, &claim).root_value - rep.base_value; };

  // u(B, c - l) <= u(0, c) <= u(B, c + l) whenever |B| <= l.
  double lo = -claim.bound;
  double hi = claim.bound;
  if (hi - lo <= price_tol) {
    rep.price = 0.5 * (lo + hi);
    rep.residual = f(rep.price);
    rep.lo = lo;
    rep.hi = hi;
    return rep;
  }
  double flo = f(lo);
  double fhi = f(hi);
  for (int k = 0; k < 8 && (flo > 0.0 || fhi < 0.0); ++k) {
    const double w = hi - lo;
    if (flo > 0.0) flo = f(lo -= w);
    if (fhi < 0.0) fhi = f(hi += w);
  }
  if (flo > 0.0 || fhi < 0.0) raise(ErrorCode::BracketFailure, "could not bracket the indifference price");
  while (hi - lo > price_tol && rep.iterations < max_iterations) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    ++rep.iterations;
    if (fm == 0.0) {
      lo = hi = mid;
      flo = fhi = 0.0;
    } else if (fm < 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  rep.lo = lo;
  rep.hi = hi;
  // u(B, c + p) is concave in p, so the secant root stays in the bracket.
  rep.price = fhi > flo ? lo + (hi - lo) * (-flo) / (fhi - flo) : 0.5 * (lo + hi);
  rep.residual = f(rep.price);
  return rep;
}

SupermartingaleReport supermartingale_check(const SolveResult& r, const ScenarioTree& tree, const Utility& u,
                                            const Cone& cone, double fo_tol) {
  MeasureOptions mo;
  mo.force = true;
  mo.fo_tol = fo_tol;
  const auto m = martingale_measure(r, tree, u, mo);
  SupermartingaleReport rep;
  rep.residuals = m.residuals;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(cone.rays);
  for (NodeIndex n : tree.interior_nodes()) {
    const Eigen::VectorXd lambda = cod.solve(r.strategy[n]);
    const double scale = std::max(1.0, r.strategy[n].cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < cone.rays.cols(); ++j) {
      const double v = cone.rays.col(j).dot(m.residuals[n]);
      rep.max_violation = std::max(rep.max_violation, v);
      if (lambda[j] > 1e-9 * scale) rep.max_slack_gap = std::max(rep.max_slack_gap, std::abs(v));
    }
  }
  if (!std::isfinite(rep.max_violation)) rep.max_violation = 0.0;
  rep.pass = rep.max_violation <= fo_tol && rep.max_slack_gap <= fo_tol;
  return rep;
}

}  // namespace utilmax
