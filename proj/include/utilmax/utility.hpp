#pragma once

// Concave nondecreasing utilities U: R -> R with U(0) = 0, and grid-based
// checks of the asymptotic-elasticity growth conditions at +inf and -inf.

#include "utilmax/concave_fn.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace utilmax {

/// Growth-condition parameters declared alongside a utility.
struct AeParams {
  std::optional<double> gamma;   // exponent of U(lx) <= l^gamma U(x), x >= xtilde
  std::optional<double> alpha;   // exponent of U(lx) <= l^(1+alpha) U(x), x <= xtilde
  std::optional<double> xtilde;
};

class Utility {
 public:
  enum class Kind {
    Exponential,                   // 1 - exp(-a x)
    PiecewiseLinear,               // breakpoints + slopes
    Example73,                     // slopes 1 + 1/n^2 above 0, 3 - 1/n^2 below, frozen beyond +-N
    LinearBelowPowerAbove,         // x for x <= 0, ((1+x)^g - 1)/g above
    LinearAboveExponentialBelow,   // x for x >= 0, 1 - exp(-x) below
  };

  static Utility exponential(double a);
  /// `slopes` has one more entry than `breakpoints`: slopes[0] applies left of
  /// the first breakpoint, slopes.back() right of the last.
  static Utility piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes);
  static Utility example73(int N);
  static Utility linear_below_power_above(double gamma);
  static Utility linear_above_exponential_below();

  Kind kind() const { return kind_; }
  std::string variant_name() const;

  double eval(double x) const { return raw(x + shift_) - level_; }
  double operator()(double x) const { return eval(x); }
  /// Left-hand derivative, the convention used for U' throughout.
  double left_derivative(double x) const { return raw_left(x + shift_); }
  double right_derivative(double x) const { return raw_right(x + shift_); }
  /// Second derivative for smooth variants; zero for piecewise-linear ones.
  double second_derivative(double x) const { return raw_second(x + shift_); }

  bool is_smooth() const;
  bool is_piecewise_linear() const { return !is_smooth(); }
  bool is_strictly_concave() const { return kind_ == Kind::Exponential; }
  bool is_strictly_increasing() const;

  /// Exact breakpoint representation for piecewise-linear variants.
  std::optional<PLConcave> exact_pl() const;

  const AeParams& ae() const { return ae_; }
  Utility with_ae(AeParams ae) const;

  /// x -> U(x + xt) - U(xt).
  Utility shift(double xt) const;
  double shift_offset() const { return shift_; }

  double param_a() const { return a_; }
  double param_gamma() const { return gamma_; }
  int param_n() const { return n_; }
  const std::vector<double>& pl_breakpoints() const { return pl_breaks_; }
  const std::vector<double>& pl_slopes() const { return pl_slopes_; }

 private:
  Utility() = default;

  double raw(double x) const;
  double raw_left(double x) const;
  double raw_right(double x) const;
  double raw_second(double x) const;
  double example73_at_int(long k) const;

  Kind kind_ = Kind::Exponential;
  double a_ = 1.0;
  double gamma_ = 0.5;
  int n_ = 0;
  std::shared_ptr<const std::vector<double>> partial_sums_;  // sum_{j<=k} 1/j^2
  std::vector<double> pl_breaks_;
  std::vector<double> pl_slopes_;
  std::shared_ptr<const PLConcave> pl_;
  double shift_ = 0.0;
  double level_ = 0.0;
  AeParams ae_;
};

/// Sampling plan for the growth-condition checks: x on a log-spaced grid
/// from the threshold out to threshold * x_span, lambda log-spaced in
/// [1, lambda_max].
struct AeGrid {
  int n_x = 60;
  double x_span = 1e3;
  int n_lambda = 40;
  double lambda_max = 1e3;
  double tol = 1e-12;
};

struct AeCheckReport {
  bool pass = true;
  double max_violation = 0.0;     // max of (lhs - rhs) / max(1, |rhs|)
  double worst_x = 0.0;
  double worst_lambda = 1.0;
  double elasticity = 0.0;        // U'(x) x / U(x) at the outermost finite sample
  double C = 0.0;                 // U(xtilde), constant of the derived scaling bounds
  std::size_t samples = 0;
  std::size_t skipped = 0;        // samples with non-finite values
};

/// U(l x) <= l^gamma U(x) for x >= xtilde, l >= 1.
AeCheckReport check_ae_plus(const Utility& u, double gamma, double xtilde, const AeGrid& grid = {});
/// U(l x) <= l^(1+alpha) U(x) for x <= xtilde, l >= 1.
AeCheckReport check_ae_minus(const Utility& u, double alpha, double xtilde, const AeGrid& grid = {});

}  // namespace utilmax
