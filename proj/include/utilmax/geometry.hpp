#pragma once

// Conditional-support geometry and no-arbitrage certification at the nodes
// of a scenario tree.

#include "utilmax/scenario_tree.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace utilmax {

/// Linear subspace of R^d held as an orthonormal basis (columns).
struct Subspace {
  Eigen::MatrixXd basis;  // d x dim

  int dim() const { return static_cast<int>(basis.cols()); }
  int ambient() const { return static_cast<int>(basis.rows()); }
  Eigen::VectorXd coords(const Eigen::VectorXd& v) const { return basis.transpose() * v; }
  Eigen::VectorXd project(const Eigen::VectorXd& v) const { return basis * (basis.transpose() * v); }

  static Subspace zero(int d) { return {Eigen::MatrixXd(d, 0)}; }
  static Subspace full(int d) { return {Eigen::MatrixXd::Identity(d, d)}; }
};

/// Affine hull of the support: x0 + direction, with `offset` the component
/// of the hull orthogonal to `direction` (zero iff the hull is a linear
/// subspace).
struct AffineHull {
  Subspace direction;
  Eigen::VectorXd offset;

  bool contains_origin(double tol = 1e-9) const { return offset.norm() <= tol; }
};

/// Polyhedral cone {R lambda : lambda >= 0} given by its generating rays.
struct Cone {
  Eigen::MatrixXd rays;  // d x m

  static Cone nonnegative_orthant(int d) { return {Eigen::MatrixXd::Identity(d, d)}; }
};

/// Orthonormal basis of the span of the rows of `points`, rank decided by
/// singular values above rank_tol * sigma_max.
Subspace row_span(const Eigen::MatrixXd& points, double rank_tol = 1e-9);

AffineHull support_subspace(const ConditionalDist& dist, double rank_tol = 1e-9);

/// span{y_i}; coincides with the affine-hull direction under no-arbitrage.
Subspace linear_span(const ConditionalDist& dist, double rank_tol = 1e-9);

struct NaVerdict {
  bool arbitrage = false;
  /// On arbitrage: xi with <xi, y_i> >= 0 for all i, strictly for some.
  Eigen::VectorXd witness;
};

/// Exact one-step no-arbitrage test as LP feasibility: arbitrage iff some xi
/// (in the cone, if given) has <xi,y_i> >= 0 for all i and sum_i <xi,y_i> >= 1.
/// Without a cone the witness is projected onto `span`.
NaVerdict check_na(const ConditionalDist& dist, const Subspace& span, const Cone* cone = nullptr);

struct CertificateOptions {
  double sphere_tol = 1e-4;        // angular resolution for dim >= 3
  int sphere_samples = 20000;
  std::uint64_t seed = 42;
};

struct NaCertificate {
  NodeIndex node = 0;
  double beta = 0.0;
  double kappa = 0.0;
  std::vector<Eigen::VectorXd> witness_directions;  // unit vectors in R^d attaining kappa
};

/// min over unit p in D of P(<p, Y> < -delta). Exact for dim D <= 2.
double kappa_at(const ConditionalDist& dist, const Subspace& D, double delta, const CertificateOptions& opt = {},
                Eigen::VectorXd* argmin = nullptr);

/// (beta, kappa) with P(<p,Y> < -beta) >= kappa for all unit p in D; beta
/// maximizes delta * kappa(delta) over a finite candidate set.
NaCertificate na_certificate(const ConditionalDist& dist, const Subspace& D, const CertificateOptions& opt = {});

struct NodeNaReport {
  NodeIndex node = 0;
  int dim = 0;
  bool arbitrage = false;
  std::optional<NaCertificate> certificate;  // absent when dim = 0 or arbitrage
  Eigen::VectorXd witness;
};

struct TreeNaReport {
  bool arbitrage_free = true;
  std::vector<NodeNaReport> nodes;
  std::optional<NodeIndex> first_arbitrage;
};

TreeNaReport validate_tree(const ScenarioTree& tree, const Cone* cone = nullptr,
                           const CertificateOptions& opt = {}, double rank_tol = 1e-9);

}  // namespace utilmax
