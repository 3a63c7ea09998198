#include "utilmax/utility.hpp"

#include "utilmax/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace utilmax {

Utility Utility::exponential(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) raise(ErrorCode::InvalidArgument, "exponential utility needs a > 0");
  Utility u;
  u.kind_ = Kind::Exponential;
  u.a_ = a;
  return u;
}

Utility Utility::piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes) {
  if (slopes.size() != breakpoints.size() + 1) {
    raise(ErrorCode::InvalidArgument, "piecewise-linear utility needs one more slope than breakpoints");
  }
  Utility u;
  u.kind_ = Kind::PiecewiseLinear;
  u.pl_breaks_ = breakpoints;
  u.pl_slopes_ = slopes;
  if (breakpoints.empty()) {
    u.pl_ = std::make_shared<const PLConcave>(PLConcave::linear(slopes.front()));
    return u;
  }
  std::vector<double> ys(breakpoints.size(), 0.0);
  for (std::size_t k = 1; k < breakpoints.size(); ++k) {
    ys[k] = ys[k - 1] + slopes[k] * (breakpoints[k] - breakpoints[k - 1]);
  }
  PLConcave raw(breakpoints, ys, slopes.front(), slopes.back());
  const double at_zero = raw.eval(0.0);
  for (double& y : ys) y -= at_zero;
  u.pl_ = std::make_shared<const PLConcave>(PLConcave(std::move(breakpoints), std::move(ys), slopes.front(),
                                                      slopes.back()));
  return u;
}

Utility Utility::example73(int N) {
  if (N < 1) raise(ErrorCode::InvalidArgument, "example73 utility needs N >= 1");
  Utility u;
  u.kind_ = Kind::Example73;
  u.n_ = N;
  auto sums = std::make_shared<std::vector<double>>(static_cast<std::size_t>(N) + 1, 0.0);
  for (int j = 1; j <= N; ++j) {
    const double jj = static_cast<double>(j);
    (*sums)[static_cast<std::size_t>(j)] = (*sums)[static_cast<std::size_t>(j) - 1] + 1.0 / (jj * jj);
  }
  u.partial_sums_ = std::move(sums);
  return u;
}

Utility Utility::linear_below_power_above(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) raise(ErrorCode::InvalidArgument, "power exponent must lie in (0,1)");
  Utility u;
  u.kind_ = Kind::LinearBelowPowerAbove;
  u.gamma_ = gamma;
  return u;
}

Utility Utility::linear_above_exponential_below() {
  Utility u;
  u.kind_ = Kind::LinearAboveExponentialBelow;
  return u;
}

std::string Utility::variant_name() const {
  switch (kind_) {
    case Kind::Exponential: return "exponential";
    case Kind::PiecewiseLinear: return "piecewise_linear";
    case Kind::Example73: return "example73";
    case Kind::LinearBelowPowerAbove: return "linear_below_power_above";
    case Kind::LinearAboveExponentialBelow: return "linear_above_exponential_below";
  }
  return "unknown";
}

bool Utility::is_smooth() const {
  return kind_ == Kind::Exponential || kind_ == Kind::LinearBelowPowerAbove ||
         kind_ == Kind::LinearAboveExponentialBelow;
}

bool Utility::is_strictly_increasing() const {
  if (kind_ != Kind::PiecewiseLinear) return true;
  return pl_->right_slope() > 0.0;
}

Utility Utility::with_ae(AeParams ae) const {
  Utility u = *this;
  u.ae_ = ae;
  return u;
}

Utility Utility::shift(double xt) const {
  Utility u = *this;
  u.shift_ = shift_ + xt;
  u.level_ = raw(u.shift_);
  return u;
}

std::optional<PLConcave> Utility::exact_pl() const {
  if (kind_ == Kind::PiecewiseLinear) {
    if (shift_ == 0.0) return *pl_;
    std::vector<double> ys(pl_->values());
    for (double& y : ys) y -= level_;
    PLConcave f(pl_->breakpoints(), std::move(ys), pl_->left_slope(), pl_->right_slope());
    return f.shifted(-shift_);
  }
  if (kind_ == Kind::Example73) {
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(2 * static_cast<std::size_t>(n_) + 1);
    ys.reserve(xs.capacity());
    for (long k = -n_; k <= n_; ++k) {
      xs.push_back(static_cast<double>(k) - shift_);
      ys.push_back(example73_at_int(k) - level_);
    }
    return PLConcave(std::move(xs), std::move(ys), 3.0, 1.0);
  }
  return std::nullopt;
}

double Utility::example73_at_int(long k) const {
  const auto& P = *partial_sums_;
  if (k >= 0) {
    if (k <= n_) return static_cast<double>(k) + P[static_cast<std::size_t>(k)];
    return static_cast<double>(n_) + P.back() + static_cast<double>(k - n_);
  }
  const long m = -k;
  if (m <= n_) return -3.0 * static_cast<double>(m) + P[static_cast<std::size_t>(m)];
  return -3.0 * static_cast<double>(n_) + P.back() - 3.0 * static_cast<double>(m - n_);
}

double Utility::raw(double x) const {
  switch (kind_) {
    case Kind::Exponential:
      return 1.0 - std::exp(-a_ * x);
    case Kind::PiecewiseLinear:
      return pl_->eval(x);
    case Kind::LinearBelowPowerAbove:
      return x <= 0.0 ? x : (std::pow(1.0 + x, gamma_) - 1.0) / gamma_;
    case Kind::LinearAboveExponentialBelow:
      return x >= 0.0 ? x : -std::expm1(-x);
    case Kind::Example73: {
      if (!std::isfinite(x)) return x;
      const double fl = std::floor(x);
      if (fl == x && std::abs(x) < 1e15) return example73_at_int(static_cast<long>(fl));
      if (x > 0.0) {
        const double n = std::ceil(x);
        if (n > n_) return example73_at_int(n_) + (x - n_);
        return example73_at_int(static_cast<long>(n) - 1) + (x - (n - 1.0)) * (1.0 + 1.0 / (n * n));
      }
      const double m = std::ceil(-x);
      if (m > n_) return example73_at_int(-n_) + 3.0 * (x + n_);
      return example73_at_int(1 - static_cast<long>(m)) - ((1.0 - m) - x) * (3.0 - 1.0 / (m * m));
    }
  }
  return 0.0;
}

double Utility::raw_left(double x) const {
  switch (kind_) {
    case Kind::Exponential:
      return a_ * std::exp(-a_ * x);
    case Kind::PiecewiseLinear:
      return pl_->left_derivative(x);
    case Kind::LinearBelowPowerAbove:
      return x <= 0.0 ? 1.0 : std::pow(1.0 + x, gamma_ - 1.0);
    case Kind::LinearAboveExponentialBelow:
      return x > 0.0 ? 1.0 : std::exp(-x);
    case Kind::Example73: {
      // U' on (n-1, n] is 1 + 1/n^2 (n >= 1) and on (-m, -m+1] is 3 - 1/m^2.
      if (x > 0.0) {
        const double n = std::ceil(x);
        return n > n_ ? 1.0 : 1.0 + 1.0 / (n * n);
      }
      const double m = std::floor(-x) + 1.0;
      return m > n_ ? 3.0 : 3.0 - 1.0 / (m * m);
    }
  }
  return 0.0;
}

double Utility::raw_right(double x) const {
  switch (kind_) {
    case Kind::PiecewiseLinear:
      return pl_->right_derivative(x);
    case Kind::Example73: {
      if (x >= 0.0) {
        const double n = std::floor(x) + 1.0;
        return n > n_ ? 1.0 : 1.0 + 1.0 / (n * n);
      }
      const double m = std::ceil(-x);
      return m > n_ ? 3.0 : 3.0 - 1.0 / (m * m);
    }
    default:
      return raw_left(x);
  }
}

double Utility::raw_second(double x) const {
  switch (kind_) {
    case Kind::Exponential:
      return -a_ * a_ * std::exp(-a_ * x);
    case Kind::LinearBelowPowerAbove:
      return x <= 0.0 ? 0.0 : (gamma_ - 1.0) * std::pow(1.0 + x, gamma_ - 2.0);
    case Kind::LinearAboveExponentialBelow:
      return x >= 0.0 ? 0.0 : -std::exp(-x);
    default:
      return 0.0;
  }
}

namespace {

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> out;
  if (n <= 1 || hi <= lo) return {lo};
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) out.push_back(std::exp(a + (b - a) * i / (n - 1)));
  out.front() = lo;
  out.back() = hi;
  return out;
}

template <class Rhs>
void scan(const Utility& u, const std::vector<double>& xs, const std::vector<double>& lambdas, double tol,
          Rhs rhs_of, AeCheckReport& rep) {
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (double x : xs) {
    const double ux = u.eval(x);
    for (double l : lambdas) {
      const double lhs = u.eval(l * x);
      const double rhs = rhs_of(l, ux);
      ++rep.samples;
      if (!std::isfinite(lhs) || !std::isfinite(rhs)) {
        ++rep.skipped;
        continue;
      }
      const double v = (lhs - rhs) / std::max(1.0, std::abs(rhs));
      if (v > rep.max_violation) {
        rep.max_violation = v;
        rep.worst_x = x;
        rep.worst_lambda = l;
      }
    }
  }
  rep.pass = rep.max_violation <= tol;
}

}  // namespace

AeCheckReport check_ae_plus(const Utility& u, double gamma, double xtilde, const AeGrid& grid) {
  if (!(gamma > 0.0 && gamma < 1.0)) raise(ErrorCode::InvalidArgument, "check_ae_plus needs gamma in (0,1)");
  if (!(xtilde > 0.0)) raise(ErrorCode::InvalidArgument, "check_ae_plus needs xtilde > 0");
  AeCheckReport rep;
  const auto xs = log_spaced(xtilde, xtilde * grid.x_span, grid.n_x);
  const auto ls = log_spaced(1.0, grid.lambda_max, grid.n_lambda);
  scan(u, xs, ls, grid.tol, [gamma](double l, double ux) { return std::pow(l, gamma) * ux; }, rep);
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) {
    const double ux = u.eval(*it);
    if (std::isfinite(ux) && ux != 0.0) {
      rep.elasticity = u.left_derivative(*it) * *it / ux;
      break;
    }
  }
  rep.C = u.eval(xtilde);
  return rep;
}

AeCheckReport check_ae_minus(const Utility& u, double alpha, double xtilde, const AeGrid& grid) {
  if (!(alpha > 0.0)) raise(ErrorCode::InvalidArgument, "check_ae_minus needs alpha > 0");
  if (xtilde > 0.0) raise(ErrorCode::InvalidArgument, "check_ae_minus needs xtilde <= 0");
  AeCheckReport rep;
  const double base = xtilde < 0.0 ? -xtilde : 1e-3;
  auto mags = log_spaced(base, base * grid.x_span, grid.n_x);
  std::vector<double> xs;
  for (double m : mags) xs.push_back(-m);
  const auto ls = log_spaced(1.0, grid.lambda_max, grid.n_lambda);
  scan(u, xs, ls, grid.tol, [alpha](double l, double ux) { return std::pow(l, 1.0 + alpha) * ux; }, rep);
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) {
    const double ux = u.eval(*it);
    if (std::isfinite(ux) && ux != 0.0 && std::isfinite(u.left_derivative(*it))) {
      rep.elasticity = u.left_derivative(*it) * *it / ux;
      break;
    }
  }
  rep.C = u.eval(xtilde);
  return rep;
}

}  // namespace utilmax
