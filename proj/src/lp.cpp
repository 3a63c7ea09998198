#include "utilmax/lp.hpp"

#include "utilmax/errors.hpp"

#include <algorithm>
#include <cmath>

namespace utilmax::lp {

Problem::Problem(Eigen::Index n)
    : objective(Eigen::VectorXd::Zero(n)),
      lower(Eigen::VectorXd::Constant(n, -kInf)),
      upper(Eigen::VectorXd::Constant(n, kInf)) {}

void Problem::add_le(const Eigen::VectorXd& row, double rhs) {
  if (row.size() != num_vars()) raise(ErrorCode::InvalidArgument, "lp: row width mismatch");
  le_rows.push_back(row);
  le_rhs.push_back(rhs);
}

void Problem::add_eq(const Eigen::VectorXd& row, double rhs) {
  if (row.size() != num_vars()) raise(ErrorCode::InvalidArgument, "lp: row width mismatch");
  eq_rows.push_back(row);
  eq_rhs.push_back(rhs);
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

// x_j = offset + sign * z[plus] - z[minus]   (minus < 0 when absent)
struct VarMap {
  double offset = 0.0;
  Eigen::Index plus = -1;
  Eigen::Index minus = -1;
  double sign = 1.0;
};

struct Row {
  Eigen::VectorXd coef;
  double rhs = 0.0;
  bool equality = false;
};

class Tableau {
 public:
  Tableau(Eigen::MatrixXd a, Eigen::VectorXd b, std::vector<Eigen::Index> basis, const Options& opt)
      : a_(std::move(a)), b_(std::move(b)), basis_(std::move(basis)), opt_(opt) {}

  // Maximize cost^T z over the current feasible basis; columns with
  // allowed[j] == false never enter.
  Status optimize(const Eigen::VectorXd& cost, const std::vector<bool>& allowed, int& iterations) {
    const Eigen::Index n = a_.cols();
    int degenerate_run = 0;
    bool bland = false;
    while (true) {
      if (iterations >= opt_.max_iterations) return Status::IterationLimit;
      Eigen::VectorXd cb(static_cast<Eigen::Index>(basis_.size()));
      for (std::size_t i = 0; i < basis_.size(); ++i) cb[static_cast<Eigen::Index>(i)] = cost[basis_[i]];
      const Eigen::RowVectorXd reduced = cost.transpose() - cb.transpose() * a_;

      Eigen::Index enter = -1;
      double best = opt_.optimality_tol;
      for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index j = opt_.reverse_order ? n - 1 - k : k;
        if (!allowed[static_cast<std::size_t>(j)] || is_basic(j)) continue;
        if (reduced[j] > best) {
          enter = j;
          if (bland) break;
          best = reduced[j];
        }
      }
      if (enter < 0) return Status::Optimal;

      Eigen::Index leave = -1;
      double best_ratio = 0.0;
      for (Eigen::Index i = 0; i < a_.rows(); ++i) {
        const double piv = a_(i, enter);
        if (piv <= 1e-11) continue;
        const double ratio = std::max(0.0, b_[i]) / piv;
        if (leave < 0 || ratio < best_ratio - 1e-13 * std::max(1.0, best_ratio) ||
            (ratio <= best_ratio + 1e-13 * std::max(1.0, best_ratio) && basis_[static_cast<std::size_t>(i)] <
                                                                            basis_[static_cast<std::size_t>(leave)])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave < 0) return Status::Unbounded;

      if (best_ratio <= 1e-14) {
        if (++degenerate_run > opt_.degenerate_switch) bland = true;
      } else {
        degenerate_run = 0;
      }
      pivot(leave, enter);
      ++iterations;
    }
  }

  void pivot(Eigen::Index r, Eigen::Index e) {
    const double p = a_(r, e);
    a_.row(r) /= p;
    b_[r] /= p;
    a_(r, e) = 1.0;
    for (Eigen::Index i = 0; i < a_.rows(); ++i) {
      if (i == r) continue;
      const double f = a_(i, e);
      if (f == 0.0) continue;
      a_.row(i) -= f * a_.row(r);
      a_(i, e) = 0.0;
      b_[i] -= f * b_[r];
      if (b_[i] < 0.0 && b_[i] > -1e-13) b_[i] = 0.0;
    }
    basis_[static_cast<std::size_t>(r)] = e;
  }

  bool is_basic(Eigen::Index j) const { return std::find(basis_.begin(), basis_.end(), j) != basis_.end(); }

  void remove_row(Eigen::Index r) {
    const Eigen::Index m = a_.rows();
    if (r < m - 1) {
      a_.block(r, 0, m - 1 - r, a_.cols()) = a_.block(r + 1, 0, m - 1 - r, a_.cols()).eval();
      b_.segment(r, m - 1 - r) = b_.segment(r + 1, m - 1 - r).eval();
    }
    a_.conservativeResize(m - 1, Eigen::NoChange);
    b_.conservativeResize(m - 1);
    basis_.erase(basis_.begin() + r);
  }

  Eigen::MatrixXd& a() { return a_; }
  Eigen::VectorXd& b() { return b_; }
  std::vector<Eigen::Index>& basis() { return basis_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  std::vector<Eigen::Index> basis_;
  const Options& opt_;
};

}  // namespace

Solution solve(const Problem& p, const Options& opt) {
  const Eigen::Index n = p.num_vars();
  Solution sol;
  sol.x = Eigen::VectorXd::Zero(n);

  std::vector<VarMap> map(static_cast<std::size_t>(n));
  std::vector<Row> rows;
  Eigen::Index nz = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    auto& m = map[static_cast<std::size_t>(j)];
    const double lo = p.lower[j];
    const double hi = p.upper[j];
    if (lo > hi + opt.feasibility_tol) return sol;
    if (std::isfinite(lo)) {
      m.offset = lo;
      m.plus = nz++;
    } else if (std::isfinite(hi)) {
      m.offset = hi;
      m.sign = -1.0;
      m.plus = nz++;
    } else {
      m.plus = nz++;
      m.minus = nz++;
    }
  }
  auto transform = [&](const Eigen::VectorXd& a, double rhs, bool eq) {
    Row r;
    r.coef = Eigen::VectorXd::Zero(nz);
    r.rhs = rhs;
    r.equality = eq;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (a[j] == 0.0) continue;
      const auto& m = map[static_cast<std::size_t>(j)];
      r.coef[m.plus] += a[j] * m.sign;
      if (m.minus >= 0) r.coef[m.minus] -= a[j];
      r.rhs -= a[j] * m.offset;
    }
    return r;
  };
  for (std::size_t k = 0; k < p.le_rows.size(); ++k) rows.push_back(transform(p.le_rows[k], p.le_rhs[k], false));
  for (std::size_t k = 0; k < p.eq_rows.size(); ++k) rows.push_back(transform(p.eq_rows[k], p.eq_rhs[k], true));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isfinite(p.lower[j]) && std::isfinite(p.upper[j])) {
      Row r;
      r.coef = Eigen::VectorXd::Zero(nz);
      r.coef[map[static_cast<std::size_t>(j)].plus] = 1.0;
      r.rhs = p.upper[j] - p.lower[j];
      rows.push_back(std::move(r));
    }
  }

  // Row scaling; drop empty rows after checking them.
  std::vector<Row> kept;
  for (auto& r : rows) {
    const double s = r.coef.cwiseAbs().maxCoeff();
    if (!(s > 0.0)) {
      const bool ok = r.equality ? std::abs(r.rhs) <= opt.feasibility_tol : r.rhs >= -opt.feasibility_tol;
      if (!ok) return sol;
      continue;
    }
    r.coef /= s;
    r.rhs /= s;
    kept.push_back(std::move(r));
  }

  const auto m = static_cast<Eigen::Index>(kept.size());
  Eigen::Index n_slack = 0;
  for (const auto& r : kept) n_slack += r.equality ? 0 : 1;
  Eigen::Index n_art = 0;
  for (const auto& r : kept) n_art += (r.equality || r.rhs < 0.0) ? 1 : 0;
  const Eigen::Index cols = nz + n_slack + n_art;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, cols);
  Eigen::VectorXd b(m);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  std::vector<bool> is_art(static_cast<std::size_t>(cols), false);
  Eigen::Index slack = nz;
  Eigen::Index art = nz + n_slack;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& r = kept[static_cast<std::size_t>(i)];
    const double sgn = r.rhs < 0.0 ? -1.0 : 1.0;
    a.row(i).head(nz) = sgn * r.coef.transpose();
    b[i] = sgn * r.rhs;
    Eigen::Index basic = -1;
    if (!r.equality) {
      a(i, slack) = sgn;
      if (sgn > 0.0) basic = slack;
      ++slack;
    }
    if (basic < 0) {
      a(i, art) = 1.0;
      is_art[static_cast<std::size_t>(art)] = true;
      basic = art++;
    }
    basis[static_cast<std::size_t>(i)] = basic;
  }

  Tableau tab(std::move(a), std::move(b), std::move(basis), opt);
  int iterations = 0;
  std::vector<bool> allowed(static_cast<std::size_t>(cols), true);

  if (n_art > 0) {
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      if (is_art[static_cast<std::size_t>(j)]) c1[j] = -1.0;
    const Status s1 = tab.optimize(c1, allowed, iterations);
    if (s1 == Status::IterationLimit) {
      sol.status = s1;
      return sol;
    }
    double infeas = 0.0;
    for (std::size_t i = 0; i < tab.basis().size(); ++i)
      if (is_art[static_cast<std::size_t>(tab.basis()[i])]) infeas += std::max(0.0, tab.b()[static_cast<Eigen::Index>(i)]);
    if (infeas > opt.feasibility_tol) {
      sol.status = Status::Infeasible;
      sol.iterations = iterations;
      return sol;
    }
    // Drive zero-level artificials out of the basis; drop redundant rows.
    for (Eigen::Index i = static_cast<Eigen::Index>(tab.basis().size()); i-- > 0;) {
      if (!is_art[static_cast<std::size_t>(tab.basis()[static_cast<std::size_t>(i)])]) continue;
      Eigen::Index j_best = -1;
      double v_best = 1e-9;
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (is_art[static_cast<std::size_t>(j)] || tab.is_basic(j)) continue;
        if (std::abs(tab.a()(i, j)) > v_best) {
          v_best = std::abs(tab.a()(i, j));
          j_best = j;
        }
      }
      if (j_best >= 0) {
        tab.pivot(i, j_best);
      } else {
        tab.remove_row(i);
      }
    }
    for (Eigen::Index j = 0; j < cols; ++j)
      if (is_art[static_cast<std::size_t>(j)]) allowed[static_cast<std::size_t>(j)] = false;
  }

  Eigen::VectorXd c2 = Eigen::VectorXd::Zero(cols);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& mj = map[static_cast<std::size_t>(j)];
    c2[mj.plus] += p.objective[j] * mj.sign;
    if (mj.minus >= 0) c2[mj.minus] -= p.objective[j];
  }
  const double cscale = c2.size() > 0 ? c2.cwiseAbs().maxCoeff() : 0.0;
  if (cscale > 0.0) c2 /= cscale;
  const Status s2 = tab.optimize(c2, allowed, iterations);
  sol.iterations = iterations;
  sol.status = s2;
  if (s2 != Status::Optimal) return sol;

  Eigen::VectorXd z = Eigen::VectorXd::Zero(cols);
  for (std::size_t i = 0; i < tab.basis().size(); ++i) z[tab.basis()[i]] = std::max(0.0, tab.b()[static_cast<Eigen::Index>(i)]);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& mj = map[static_cast<std::size_t>(j)];
    double v = mj.offset + mj.sign * z[mj.plus];
    if (mj.minus >= 0) v -= z[mj.minus];
    sol.x[j] = v;
  }
  sol.value = p.objective.dot(sol.x);
  return sol;
}

}  // namespace utilmax::lp
