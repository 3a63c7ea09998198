#include "utilmax/concave_fn.hpp"

#include "utilmax/errors.hpp"
#include "utilmax/utility.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace utilmax {

namespace {

double slope_scale(const std::vector<double>& slopes) {
  double s = 1.0;
  for (double v : slopes) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace

PLConcave::PLConcave(std::vector<double> xs, std::vector<double> ys, double left_slope, double right_slope,
                     double tol)
    : xs_(std::move(xs)), ys_(std::move(ys)), left_slope_(left_slope), right_slope_(right_slope) {
  if (xs_.empty() || xs_.size() != ys_.size()) {
    raise(ErrorCode::InvalidArgument, "PLConcave needs matching, non-empty breakpoints and values");
  }
  for (std::size_t k = 0; k < xs_.size(); ++k) {
    if (!std::isfinite(xs_[k]) || !std::isfinite(ys_[k])) raise(ErrorCode::InvalidArgument, "PLConcave: non-finite data");
    if (k > 0 && !(xs_[k] > xs_[k - 1])) raise(ErrorCode::InvalidArgument, "PLConcave: breakpoints not increasing");
  }
  if (!std::isfinite(left_slope_) || !std::isfinite(right_slope_)) {
    raise(ErrorCode::InvalidArgument, "PLConcave: non-finite extrapolation slope");
  }

  std::vector<double> slopes;
  slopes.reserve(xs_.size() + 1);
  slopes.push_back(left_slope_);
  for (std::size_t k = 0; k + 1 < xs_.size(); ++k) slopes.push_back((ys_[k + 1] - ys_[k]) / (xs_[k + 1] - xs_[k]));
  slopes.push_back(right_slope_);
  const double scale = slope_scale(slopes) * tol;
  for (std::size_t k = 0; k < slopes.size(); ++k) {
    if (slopes[k] < -scale) {
      std::ostringstream os;
      os << "PLConcave: decreasing segment (slope " << slopes[k] << ")";
      raise(ErrorCode::InvalidArgument, os.str());
    }
    if (k > 0 && slopes[k] > slopes[k - 1] + scale) {
      std::ostringstream os;
      os << "PLConcave: slopes increase from " << slopes[k - 1] << " to " << slopes[k];
      raise(ErrorCode::InvalidArgument, os.str());
    }
  }
  right_slope_ = std::max(right_slope_, 0.0);
}

PLConcave PLConcave::linear(double slope, double intercept) {
  return PLConcave({0.0}, {intercept}, slope, slope);
}

long PLConcave::segment(double x) const {
  auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  return static_cast<long>(it - xs_.begin()) - 1;
}

double PLConcave::slope(long k) const {
  if (k < 0) return left_slope_;
  if (k >= static_cast<long>(xs_.size()) - 1) return right_slope_;
  const auto i = static_cast<std::size_t>(k);
  return (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);
}

Line PLConcave::segment_line(long k) const {
  const std::size_t anchor = k < 0 ? 0 : static_cast<std::size_t>(k);
  const double s = slope(k);
  return {s, ys_[anchor] - s * xs_[anchor]};
}

double PLConcave::eval(double x) const {
  const long k = segment(x);
  if (k < 0) return ys_.front() + left_slope_ * (x - xs_.front());
  const auto i = static_cast<std::size_t>(k);
  if (i + 1 >= xs_.size()) return ys_.back() + right_slope_ * (x - xs_.back());
  if (x == xs_[i]) return ys_[i];
  const double t = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
  return ys_[i] + t * (ys_[i + 1] - ys_[i]);
}

double PLConcave::left_derivative(double x) const {
  long k = segment(x);
  if (k >= 0 && x == xs_[static_cast<std::size_t>(k)]) --k;
  return slope(k);
}

double PLConcave::right_derivative(double x) const { return slope(segment(x)); }

std::vector<Line> PLConcave::active_lines(double x, double rel_tol) const {
  const long k = segment(x);
  std::vector<Line> out{segment_line(k)};
  const double tol = rel_tol * std::max(1.0, std::abs(x));
  auto near = [&](long j) {
    return j >= 0 && j < static_cast<long>(xs_.size()) && std::abs(x - xs_[static_cast<std::size_t>(j)]) <= tol;
  };
  if (near(k)) out.push_back(segment_line(k - 1));
  if (near(k + 1)) out.push_back(segment_line(k + 1));
  return out;
}

PLConcave PLConcave::shifted(double shift) const {
  std::vector<double> xs(xs_);
  for (double& x : xs) x += shift;
  return PLConcave(std::move(xs), ys_, left_slope_, right_slope_, 1.0);
}

PLConcave from_utility(const Utility& u, std::span<const double> grid) {
  if (grid.size() < 2) raise(ErrorCode::InvalidArgument, "from_utility needs at least two grid points");
  std::vector<double> xs(grid.begin(), grid.end());
  std::vector<double> ys(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (k > 0 && !(xs[k] > xs[k - 1])) raise(ErrorCode::InvalidArgument, "from_utility: grid not increasing");
    ys[k] = u.eval(xs[k]);
    if (!std::isfinite(ys[k])) raise(ErrorCode::NotConcaveOnGrid, "utility not finite on grid");
  }
  std::vector<double> slopes(xs.size() - 1);
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) slopes[k] = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
  const double tol = 1e-9 * slope_scale(slopes);
  for (std::size_t k = 0; k < slopes.size(); ++k) {
    if (slopes[k] < -tol || (k > 0 && slopes[k] > slopes[k - 1] + tol)) {
      std::ostringstream os;
      os << "utility is not concave nondecreasing near x=" << xs[k];
      raise(ErrorCode::NotConcaveOnGrid, os.str());
    }
  }
  const double left = slopes.front();
  const double right = std::max(0.0, slopes.back());
  return PLConcave(std::move(xs), std::move(ys), left, right);
}

double interpolation_error_bound(const Utility& u, std::span<const double> grid) {
  double bound = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double a = grid[k];
    const double b = grid[k + 1];
    bound = std::max(bound, (b - a) * (u.right_derivative(a) - u.left_derivative(b)) / 4.0);
  }
  return bound;
}

std::vector<Line> sup_lines(const PLConcave& f) {
  std::vector<Line> lines;
  const long last = static_cast<long>(f.size()) - 1;
  for (long k = -1; k <= last; ++k) {
    Line l = f.segment_line(k);
    if (!lines.empty() && std::abs(lines.back().slope - l.slope) <= 1e-12 * std::max(1.0, std::abs(l.slope))) continue;
    lines.push_back(l);
  }
  return lines;
}

bool is_concave_nondecreasing(const PLConcave& f, double tol) {
  const long last = static_cast<long>(f.size()) - 1;
  double prev = f.slope(-1);
  double scale = std::max(1.0, std::abs(prev));
  for (long k = 0; k <= last; ++k) scale = std::max(scale, std::abs(f.slope(k)));
  if (prev < -tol * scale) return false;
  for (long k = 0; k <= last; ++k) {
    const double s = f.slope(k);
    if (s < -tol * scale || s > prev + tol * scale) return false;
    prev = s;
  }
  return true;
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
  if (n < 2 || !(hi > lo)) raise(ErrorCode::InvalidArgument, "uniform_grid needs n >= 2 and hi > lo");
  std::vector<double> g(n);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + h * static_cast<double>(i);
  g.back() = hi;
  return g;
}

void write_csv(std::ostream& out, const PLConcave& f) {
  const auto old = out.precision(17);
  out << "x,f\n";
  for (std::size_t k = 0; k < f.size(); ++k) out << f.breakpoints()[k] << ',' << f.values()[k] << '\n';
  out.precision(old);
}

}  // namespace utilmax
