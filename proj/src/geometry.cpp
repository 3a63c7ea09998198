#include "utilmax/geometry.hpp"

#include "utilmax/errors.hpp"
#include "utilmax/lp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace utilmax {

Subspace row_span(const Eigen::MatrixXd& points, double rank_tol) {
  const auto d = points.cols();
  if (points.rows() == 0 || points.cwiseAbs().maxCoeff() == 0.0) return Subspace::zero(static_cast<int>(d));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(points, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = rank_tol * s[0];
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > cut) ++rank;
  Eigen::MatrixXd basis = svd.matrixV().leftCols(rank);
  // Fix signs so the basis is reproducible: largest entry of each column positive.
  for (Eigen::Index c = 0; c < rank; ++c) {
    Eigen::Index imax = 0;
    basis.col(c).cwiseAbs().maxCoeff(&imax);
    if (basis(imax, c) < 0.0) basis.col(c) *= -1.0;
  }
  return {basis};
}

AffineHull support_subspace(const ConditionalDist& dist, double rank_tol) {
  const Eigen::MatrixXd y = dist.matrix();
  const Eigen::RowVectorXd bary = y.colwise().mean();
  const Eigen::MatrixXd centered = y.rowwise() - bary;
  AffineHull hull;
  hull.direction = row_span(centered, rank_tol);
  const Eigen::VectorXd b = bary.transpose();
  hull.offset = b - hull.direction.project(b);
  if (hull.offset.norm() <= rank_tol * std::max(1.0, y.cwiseAbs().maxCoeff())) hull.offset.setZero();
  return hull;
}

Subspace linear_span(const ConditionalDist& dist, double rank_tol) { return row_span(dist.matrix(), rank_tol); }

NaVerdict check_na(const ConditionalDist& dist, const Subspace& span, const Cone* cone) {
  const int d = dist.dim();
  const Eigen::MatrixXd y = dist.matrix();
  // Columns of `gen` map LP variables to xi.
  const Eigen::MatrixXd gen = cone ? cone->rays : Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd g = y * gen;  // <xi, y_i> = g_i . vars
  lp::Problem prob(gen.cols());
  if (cone) prob.lower.setZero();
  for (Eigen::Index i = 0; i < g.rows(); ++i) prob.add_ge(g.row(i).transpose(), 0.0);
  prob.add_ge(g.colwise().sum().transpose(), 1.0);
  const auto sol = lp::solve(prob);
  NaVerdict v;
  if (sol.status != lp::Status::Optimal) {
    v.witness = Eigen::VectorXd::Zero(d);
    return v;
  }
  v.arbitrage = true;
  v.witness = gen * sol.x;
  if (!cone && span.dim() > 0) v.witness = span.project(v.witness);
  return v;
}

namespace {

double angular_distance(double a, double b) { return std::abs(std::remainder(a - b, 2.0 * std::numbers::pi)); }

double kappa_1d(const Eigen::MatrixXd& q, const std::vector<double>& probs, double delta, Eigen::VectorXd* argmin) {
  double down = 0.0;  // p = +1
  double up = 0.0;    // p = -1
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    if (q(i, 0) < -delta) down += probs[static_cast<std::size_t>(i)];
    if (q(i, 0) > delta) up += probs[static_cast<std::size_t>(i)];
  }
  if (argmin) *argmin = Eigen::VectorXd::Constant(1, down <= up ? 1.0 : -1.0);
  return std::min(down, up);
}

double kappa_2d(const Eigen::MatrixXd& q, const std::vector<double>& probs, double delta, Eigen::VectorXd* argmin) {
  struct Arc {
    double center;
    double half;
    double mass;
  };
  std::vector<Arc> arcs;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const double r = q.row(i).norm();
    if (r <= delta) continue;
    arcs.push_back({std::atan2(q(i, 1), q(i, 0)) + std::numbers::pi, std::acos(delta / r),
                    probs[static_cast<std::size_t>(i)]});
  }
  if (arcs.empty()) {
    if (argmin) *argmin = Eigen::Vector2d(1.0, 0.0);
    return 0.0;
  }
  std::vector<double> cand;
  for (const auto& a : arcs) {
    cand.push_back(std::remainder(a.center - a.half, 2.0 * std::numbers::pi));
    cand.push_back(std::remainder(a.center + a.half, 2.0 * std::numbers::pi));
  }
  std::sort(cand.begin(), cand.end());
  const std::size_t ne = cand.size();
  for (std::size_t k = 0; k < ne; ++k) {
    const double a = cand[k];
    const double b = k + 1 < ne ? cand[k + 1] : cand[0] + 2.0 * std::numbers::pi;
    cand.push_back(0.5 * (a + b));
  }
  double best = 2.0;
  double best_theta = 0.0;
  for (double th : cand) {
    double m = 0.0;
    for (const auto& a : arcs)
      if (angular_distance(th, a.center) < a.half - 1e-12) m += a.mass;
    if (m < best) {
      best = m;
      best_theta = th;
    }
  }
  if (argmin) *argmin = Eigen::Vector2d(std::cos(best_theta), std::sin(best_theta));
  return best;
}

double kappa_sampled(const Eigen::MatrixXd& q, const std::vector<double>& probs, double delta,
                     const CertificateOptions& opt, Eigen::VectorXd* argmin) {
  const Eigen::Index k = q.cols();
  Eigen::VectorXd radii = q.rowwise().norm();
  auto mass = [&](const Eigen::VectorXd& p) {
    const Eigen::VectorXd ip = q * p;
    double m = 0.0;
    for (Eigen::Index i = 0; i < q.rows(); ++i)
      if (ip[i] < -delta - radii[i] * opt.sphere_tol) m += probs[static_cast<std::size_t>(i)];
    return m;
  };
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  auto random_unit = [&]() {
    Eigen::VectorXd v(k);
    do {
      for (Eigen::Index j = 0; j < k; ++j) v[j] = normal(rng);
    } while (v.norm() < 1e-12);
    return Eigen::VectorXd(v.normalized());
  };
  struct Sample {
    double m;
    Eigen::VectorXd p;
  };
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(opt.sphere_samples));
  // Directions opposite to support points are natural minimizer candidates.
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    if (radii[i] > 0.0) {
      Eigen::VectorXd p = -q.row(i).transpose() / radii[i];
      samples.push_back({mass(p), p});
      samples.push_back({mass(-p), Eigen::VectorXd(-p)});
    }
  }
  for (int s = 0; s < opt.sphere_samples; ++s) {
    Eigen::VectorXd p = random_unit();
    samples.push_back({mass(p), std::move(p)});
  }
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.m < b.m; });
  Sample best = samples.front();
  const std::size_t n_refine = std::min<std::size_t>(20, samples.size());
  for (std::size_t s = 0; s < n_refine; ++s) {
    Sample cur = samples[s];
    for (double step = 0.1; step >= opt.sphere_tol; step *= 0.5) {
      for (int trial = 0; trial < 40; ++trial) {
        Eigen::VectorXd p = (cur.p + step * random_unit()).normalized();
        const double m = mass(p);
        if (m < cur.m) cur = {m, p};
      }
    }
    if (cur.m < best.m) best = cur;
  }
  if (argmin) *argmin = best.p;
  return best.m;
}

}  // namespace

double kappa_at(const ConditionalDist& dist, const Subspace& D, double delta, const CertificateOptions& opt,
                Eigen::VectorXd* argmin) {
  if (D.dim() == 0) {
    if (argmin) *argmin = Eigen::VectorXd::Zero(dist.dim());
    return 0.0;
  }
  const Eigen::MatrixXd q = dist.matrix() * D.basis;
  Eigen::VectorXd p;
  double k = 0.0;
  switch (D.dim()) {
    case 1: k = kappa_1d(q, dist.probs, delta, &p); break;
    case 2: k = kappa_2d(q, dist.probs, delta, &p); break;
    default: k = kappa_sampled(q, dist.probs, delta, opt, &p); break;
  }
  if (argmin) *argmin = D.basis * p;
  return k;
}

NaCertificate na_certificate(const ConditionalDist& dist, const Subspace& D, const CertificateOptions& opt) {
  if (D.dim() == 0) raise(ErrorCode::DegenerateSupport, "conditional support is {0}; certificate is vacuous");
  const Eigen::MatrixXd q = dist.matrix() * D.basis;
  std::vector<double> radii;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const double r = q.row(i).norm();
    if (r > 0.0) radii.push_back(r);
  }
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

  std::vector<double> deltas;
  for (double r : radii)
    for (double f : {0.99, 0.9, 0.75, 0.5, 0.25, 0.1}) deltas.push_back(f * r);
  if (!radii.empty())
    for (double f = 1e-2; f >= 1e-8; f *= 1e-2) deltas.push_back(f * radii.front());
  std::sort(deltas.begin(), deltas.end());

  NaCertificate cert;
  cert.node = dist.node;
  double best_score = 0.0;
  for (double delta : deltas) {
    Eigen::VectorXd p;
    const double k = kappa_at(dist, D, delta, opt, &p);
    if (k <= 0.0) continue;
    const double score = delta * k;
    if (score > best_score) {
      best_score = score;
      cert.beta = delta;
      cert.kappa = k;
      cert.witness_directions = {p};
    }
  }
  return cert;
}

TreeNaReport validate_tree(const ScenarioTree& tree, const Cone* cone, const CertificateOptions& opt,
                           double rank_tol) {
  TreeNaReport rep;
  for (NodeIndex n : tree.interior_nodes()) {
    const auto dist = conditional_dist(tree, n);
    const Subspace span = linear_span(dist, rank_tol);
    NodeNaReport nr;
    nr.node = n;
    nr.dim = span.dim();
    const auto verdict = check_na(dist, span, cone);
    if (verdict.arbitrage) {
      nr.arbitrage = true;
      nr.witness = verdict.witness;
      rep.arbitrage_free = false;
      if (!rep.first_arbitrage) rep.first_arbitrage = n;
    } else if (span.dim() > 0) {
      auto cert = na_certificate(dist, span, opt);
      if (cert.kappa > 0.0) nr.certificate = std::move(cert);
    }
    rep.nodes.push_back(std::move(nr));
  }
  return rep;
}

}  // namespace utilmax
