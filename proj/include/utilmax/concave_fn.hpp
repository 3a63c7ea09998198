#pragma once

// Finite piecewise-linear concave nondecreasing functions on the real line.
// This is the computational form of the value functions U_t.

#include <iosfwd>
#include <span>
#include <vector>

namespace utilmax {

class Utility;

/// Affine function x -> slope * x + intercept.
struct Line {
  double slope = 0.0;
  double intercept = 0.0;

  double operator()(double x) const { return slope * x + intercept; }
};

class PLConcave {
 public:
  /// `xs` strictly increasing, `ys` the values at `xs`; the function is
  /// extended linearly with `left_slope` on (-inf, xs.front()] and
  /// `right_slope` on [xs.back(), inf). Concavity and monotonicity are
  /// checked with relative tolerance `tol`.
  PLConcave(std::vector<double> xs, std::vector<double> ys, double left_slope, double right_slope,
            double tol = 1e-9);

  static PLConcave linear(double slope, double intercept = 0.0);

  double operator()(double x) const { return eval(x); }
  double eval(double x) const;
  double left_derivative(double x) const;
  double right_derivative(double x) const;

  /// Index k of the segment [x_k, x_{k+1}] containing x, where segment -1 is
  /// the left extrapolation and size()-1 the right one. Points exactly on a
  /// breakpoint belong to the segment to their right.
  long segment(double x) const;
  Line segment_line(long k) const;
  /// Supporting lines active at x: one inside a segment, two on a breakpoint.
  std::vector<Line> active_lines(double x, double rel_tol = 1e-12) const;

  std::size_t size() const { return xs_.size(); }
  const std::vector<double>& breakpoints() const { return xs_; }
  const std::vector<double>& values() const { return ys_; }
  double left_slope() const { return left_slope_; }
  double right_slope() const { return right_slope_; }
  /// Slope of segment k (k = -1 and k = size()-1 are the extrapolations).
  double slope(long k) const;

  /// x -> f(x - shift).
  PLConcave shifted(double shift) const;

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
  double left_slope_;
  double right_slope_;
};

/// PL interpolant of u on a sorted grid (>= 2 points). End slopes are the
/// one-sided difference quotients of the first and last cells.
PLConcave from_utility(const Utility& u, std::span<const double> grid);

/// Largest gap between u and its grid interpolant, bounded per cell by
/// h * (u'(a+) - u'(b-)) / 4.
double interpolation_error_bound(const Utility& u, std::span<const double> grid);

/// Minimal list of lines with f(x) = min_k lines[k](x). Slopes are
/// strictly decreasing; collinear neighbouring segments are merged.
std::vector<Line> sup_lines(const PLConcave& f);

bool is_concave_nondecreasing(const PLConcave& f, double tol = 1e-9);

std::vector<double> uniform_grid(double lo, double hi, std::size_t n);

void write_csv(std::ostream& out, const PLConcave& f);

}  // namespace utilmax
