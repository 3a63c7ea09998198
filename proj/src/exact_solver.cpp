#include "utilmax/exact_solver.hpp"

#include "utilmax/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace utilmax {

std::vector<NodeIndex> subtree_interior(const ScenarioTree& tree, NodeIndex root) {
  std::vector<NodeIndex> out;
  if (tree.node(root).is_leaf()) return out;
  out.push_back(root);
  for (std::size_t k = 0; k < out.size(); ++k)
    for (NodeIndex c : tree.children(out[k]))
      if (!tree.node(c).is_leaf()) out.push_back(c);
  return out;
}

std::vector<double> propagate_wealth(const ScenarioTree& tree, NodeIndex root, double wealth,
                                     const std::vector<Eigen::VectorXd>& xi) {
  std::vector<double> w(tree.size(), std::numeric_limits<double>::quiet_NaN());
  w[root] = wealth;
  for (NodeIndex n : subtree_interior(tree, root))
    for (NodeIndex c : tree.children(n)) w[c] = w[n] + xi[n].dot(tree.increment(c));
  return w;
}

namespace {

Eigen::MatrixXd generator(const std::optional<Cone>& cone, const Subspace& D) {
  if (cone) return D.dim() == 0 ? Eigen::MatrixXd(cone->rays.rows(), 0) : cone->rays;
  return D.basis;
}

// Terminal wealth is affine in the stacked strategy variables: W = w + A theta.
struct Layout {
  std::vector<NodeIndex> nodes;
  std::vector<Eigen::Index> offset;  // per tree node
  std::vector<Eigen::MatrixXd> gen;  // per tree node
  Eigen::Index n = 0;
  std::vector<NodeIndex> leaves;
  std::vector<double> weights;
  Eigen::MatrixXd A;
};

Layout make_layout(const ScenarioTree& tree, NodeIndex root, const std::vector<Subspace>& D,
                   const std::optional<Cone>& cone) {
  Layout L;
  L.nodes = subtree_interior(tree, root);
  L.offset.assign(tree.size(), -1);
  L.gen.resize(tree.size());
  for (NodeIndex v : L.nodes) {
    L.gen[v] = generator(cone, D[v]);
    L.offset[v] = L.n;
    L.n += L.gen[v].cols();
  }
  const auto [lb, le] = tree.leaf_range(root);
  const auto leaves = tree.leaves();
  const double base = tree.node(root).path_prob;
  L.A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(le - lb), L.n);
  for (std::size_t k = lb; k < le; ++k) {
    const NodeIndex leaf = leaves[k];
    L.leaves.push_back(leaf);
    L.weights.push_back(tree.node(leaf).path_prob / base);
    const auto row = static_cast<Eigen::Index>(k - lb);
    NodeIndex child = leaf;
    while (child != root) {
      const NodeIndex parent = *tree.node(child).parent;
      const auto& g = L.gen[parent];
      if (g.cols() > 0) L.A.row(row).segment(L.offset[parent], g.cols()) = (g.transpose() * tree.increment(child)).transpose();
      child = parent;
    }
  }
  return L;
}

void unpack(const Layout& L, const Eigen::VectorXd& theta, const ScenarioTree& tree, double phi, double rel,
            ExactSolution& sol) {
  const int d = tree.dim();
  sol.xi.assign(tree.size(), Eigen::VectorXd());
  sol.interior.assign(tree.size(), 1);
  sol.boundary = false;
  for (NodeIndex v : L.nodes) {
    const auto& g = L.gen[v];
    sol.xi[v] = g.cols() > 0 ? Eigen::VectorXd(g * theta.segment(L.offset[v], g.cols())) : Eigen::VectorXd::Zero(d);
    if (sol.xi[v].size() > 0 && sol.xi[v].cwiseAbs().maxCoeff() >= phi * (1.0 - rel)) {
      sol.interior[v] = 0;
      sol.boundary = true;
    }
  }
}

// Row j gives one strategy component: xi = R theta.
Eigen::MatrixXd box_matrix(const Layout& L) {
  std::vector<Eigen::VectorXd> rows;
  for (NodeIndex v : L.nodes) {
    const auto& g = L.gen[v];
    for (Eigen::Index j = 0; j < g.rows(); ++j) {
      if (g.cols() == 0 || g.row(j).cwiseAbs().maxCoeff() == 0.0) continue;
      Eigen::VectorXd r = Eigen::VectorXd::Zero(L.n);
      r.segment(L.offset[v], g.cols()) = g.row(j).transpose();
      rows.push_back(std::move(r));
    }
  }
  Eigen::MatrixXd R(static_cast<Eigen::Index>(rows.size()), L.n);
  for (std::size_t j = 0; j < rows.size(); ++j) R.row(static_cast<Eigen::Index>(j)) = rows[j].transpose();
  return R;
}

double claim_at(std::span<const double> claim, const ScenarioTree& tree, NodeIndex leaf) {
  if (claim.empty()) return 0.0;
  return claim[leaf - tree.leaves().front()];
}

ExactSolution solve_smooth(const ScenarioTree& tree, const Utility& u, const Layout& L, double wealth,
                           std::span<const double> claim, const ExactOptions& opt, const Eigen::VectorXd& theta0) {
  const Eigen::Index n = L.n;
  const auto nl = static_cast<Eigen::Index>(L.leaves.size());
  Eigen::VectorXd pi(nl), shift(nl);
  for (Eigen::Index l = 0; l < nl; ++l) {
    pi[l] = L.weights[static_cast<std::size_t>(l)];
    shift[l] = wealth - claim_at(claim, tree, L.leaves[static_cast<std::size_t>(l)]);
  }
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  if (opt.cone) lower.setZero();

  auto value = [&](const Eigen::VectorXd& th) {
    const Eigen::VectorXd w = shift + L.A * th;
    double s = 0.0;
    for (Eigen::Index l = 0; l < nl; ++l) s += pi[l] * u.eval(w[l]);
    return std::isfinite(s) ? s : -std::numeric_limits<double>::infinity();
  };
  auto project = [&](Eigen::VectorXd th) { return Eigen::VectorXd(th.cwiseMax(lower)); };

  Eigen::VectorXd theta = project(theta0);
  double f = value(theta);
  if (!std::isfinite(f)) {
    theta.setZero();
    f = value(theta);
  }
  ExactSolution sol;
  sol.converged = false;
  for (int it = 0; it < opt.max_iterations; ++it) {
    sol.iterations = it + 1;
    const Eigen::VectorXd w = shift + L.A * theta;
    Eigen::VectorXd d1(nl), d2(nl);
    for (Eigen::Index l = 0; l < nl; ++l) {
      d1[l] = pi[l] * u.left_derivative(w[l]);
      d2[l] = pi[l] * u.second_derivative(w[l]);
    }
    const Eigen::VectorXd grad = L.A.transpose() * d1;
    // Variables held at their lower bound with an outward gradient stay fixed.
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!(theta[j] <= lower[j] && grad[j] <= 0.0)) free.push_back(j);
    if (free.empty()) {
      sol.converged = true;
      break;
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd Af(nl, nf);
    Eigen::VectorXd gf(nf);
    for (Eigen::Index k = 0; k < nf; ++k) {
      Af.col(k) = L.A.col(free[static_cast<std::size_t>(k)]);
      gf[k] = grad[free[static_cast<std::size_t>(k)]];
    }
    Eigen::MatrixXd M = -(Af.transpose() * d2.asDiagonal() * Af);
    const double mu = 1e-13 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    M.diagonal().array() += mu;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    Eigen::VectorXd sf = ldlt.solve(gf);
    if (ldlt.info() != Eigen::Success || !sf.allFinite() || gf.dot(sf) <= 0.0) sf = gf;
    Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = 0; k < nf; ++k) step[free[static_cast<std::size_t>(k)]] = sf[k];

    const double dec = gf.dot(sf);
    const double scale = std::max(1.0, std::abs(f));
    if (dec <= 1e-30 * scale) {
      sol.converged = true;
      break;
    }
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial;
    double ft = f;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      trial = project(theta + t * step);
      ft = value(trial);
      if (ft >= f + 1e-4 * grad.dot(trial - theta)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // At round-off level the Armijo test is noise; a tiny Newton step is safe.
      if (dec > 1e-14 * scale) break;
      trial = project(theta + step);
      ft = value(trial);
      if (!(ft >= f - 1e-15 * scale)) {
        sol.converged = true;
        break;
      }
    }
    const double moved = (trial - theta).cwiseAbs().maxCoeff();
    theta = trial;
    f = ft;
    if (moved <= 1e-15 * (1.0 + theta.cwiseAbs().maxCoeff())) {
      sol.converged = true;
      break;
    }
  }
  const Eigen::MatrixXd R = box_matrix(L);
  if (R.rows() > 0 && (R * theta).cwiseAbs().maxCoeff() > opt.phi_max) {
    // Unconstrained optimum leaves the box: log-barrier path back inside.
    const double phi = opt.phi_max;
    const bool cone = static_cast<bool>(opt.cone);
    Eigen::VectorXd th = theta;
    if (cone) th = th.cwiseMax(1e-6 * phi);
    const double fit = (R * th).cwiseAbs().maxCoeff();
    if (fit > 0.5 * phi) th *= 0.5 * phi / fit;
    auto inside = [&](const Eigen::VectorXd& x) {
      if ((R * x).cwiseAbs().maxCoeff() >= phi) return false;
      return !cone || x.minCoeff() > 0.0;
    };
    auto barrier = [&](const Eigen::VectorXd& x, double mu) {
      const Eigen::ArrayXd s = (R * x).array();
      double b = ((phi - s).log() + (phi + s).log()).sum();
      if (cone) b += x.array().log().sum();
      return value(x) + mu * b;
    };
    const double m = static_cast<double>(2 * R.rows() + (cone ? n : 0));
    const double scale = std::max(1.0, std::abs(value(th)));
    for (double mu = 1e-2 * scale / m; ; mu *= 0.1) {
      double fb = barrier(th, mu);
      for (int it = 0; it < opt.max_iterations; ++it) {
        ++sol.iterations;
        const Eigen::VectorXd w = shift + L.A * th;
        Eigen::VectorXd d1(nl), d2(nl);
        for (Eigen::Index l = 0; l < nl; ++l) {
          d1[l] = pi[l] * u.left_derivative(w[l]);
          d2[l] = pi[l] * u.second_derivative(w[l]);
        }
        const Eigen::ArrayXd s = (R * th).array();
        const Eigen::ArrayXd lo = phi + s, hi = phi - s;
        Eigen::VectorXd grad = L.A.transpose() * d1 + mu * (R.transpose() * (1.0 / lo - 1.0 / hi).matrix());
        const Eigen::VectorXd c = mu * (1.0 / lo.square() + 1.0 / hi.square()).matrix();
        Eigen::MatrixXd M = -(L.A.transpose() * d2.asDiagonal() * L.A) + R.transpose() * c.asDiagonal() * R;
        if (cone) {
          grad.array() += mu / th.array();
          M.diagonal().array() += mu / th.array().square();
        }
        M.diagonal().array() += 1e-14 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        Eigen::VectorXd step = ldlt.solve(grad);
        if (ldlt.info() != Eigen::Success || !step.allFinite() || grad.dot(step) <= 0.0) step = grad;
        const double dec = grad.dot(step);
        if (dec <= 1e-28 * scale) break;
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
          const Eigen::VectorXd trial = th + t * step;
          if (!inside(trial)) continue;
          const double ft = barrier(trial, mu);
          if (ft >= fb + 1e-4 * t * dec) {
            th = trial;
            fb = ft;
            accepted = true;
            break;
          }
        }
        if (!accepted || dec <= 1e-20 * scale) break;
      }
      if (mu * m <= 1e-13 * scale) break;
    }
    theta = th;
  }
  unpack(L, theta, tree, opt.phi_max, opt.one_step.boundary_rel, sol);
  sol.value = value(theta);
  return sol;
}

ExactSolution solve_pl(const ScenarioTree& tree, const Utility& u, const Layout& L, double wealth,
                       std::span<const double> claim, const ExactOptions& opt) {
  const auto base = u.exact_pl();
  if (!base) raise(ErrorCode::InvalidArgument, "piecewise-linear exact solve needs an exact representation");
  std::vector<PLConcave> fns;
  fns.reserve(L.leaves.size());
  for (NodeIndex leaf : L.leaves) fns.push_back(base->shifted(claim_at(claim, tree, leaf)));

  PLProgram p;
  p.nz = L.n;
  if (opt.cone) p.lower = Eigen::VectorXd::Zero(L.n);
  for (std::size_t l = 0; l < L.leaves.size(); ++l) {
    p.maps.push_back(L.A.row(static_cast<Eigen::Index>(l)).transpose());
    p.offsets.push_back(wealth);
    p.weights.push_back(L.weights[l]);
    p.fns.push_back(&fns[l]);
  }
  p.box_rows = box_matrix(L);
  p.phi = opt.phi_max;

  ExactSolution sol;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(L.n);
  if (L.n > 0) {
    const auto res = solve_pl_program(p, opt.one_step);
    theta = res.z;
    sol.iterations = res.lp_solves;
  }
  unpack(L, theta, tree, opt.phi_max, opt.one_step.boundary_rel, sol);
  double s = 0.0;
  for (std::size_t l = 0; l < L.leaves.size(); ++l)
    s += L.weights[l] * fns[l].eval(wealth + L.A.row(static_cast<Eigen::Index>(l)).dot(theta));
  sol.value = s;
  return sol;
}

}  // namespace

std::size_t exact_num_vars(const ScenarioTree& tree, NodeIndex root, const std::vector<Subspace>& D,
                           const std::optional<Cone>& cone) {
  std::size_t n = 0;
  for (NodeIndex v : subtree_interior(tree, root)) n += static_cast<std::size_t>(generator(cone, D[v]).cols());
  return n;
}

ExactSolution solve_exact(const ScenarioTree& tree, const Utility& u, NodeIndex root, double wealth,
                          std::span<const double> claim, const std::vector<Subspace>& D, const ExactOptions& opt,
                          const std::vector<Eigen::VectorXd>* start) {
  if (!claim.empty() && claim.size() != tree.leaves().size())
    raise(ErrorCode::InvalidArgument, "claim needs one payoff per leaf");
  const Layout L = make_layout(tree, root, D, opt.cone);
  ExactSolution sol;
  if (u.is_smooth()) {
    Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(L.n);
    if (start && !opt.cone) {
      for (NodeIndex v : L.nodes) {
        const auto& g = L.gen[v];
        if (g.cols() > 0 && v < start->size() && (*start)[v].size() == g.rows())
          theta0.segment(L.offset[v], g.cols()) = g.transpose() * (*start)[v];
      }
    }
    sol = solve_smooth(tree, u, L, wealth, claim, opt, theta0);
  } else {
    sol = solve_pl(tree, u, L, wealth, claim, opt);
  }
  sol.num_vars = static_cast<std::size_t>(L.n);
  return sol;
}

}  // namespace utilmax
