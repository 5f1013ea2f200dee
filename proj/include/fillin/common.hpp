#pragma once

// Shared numeric utilities and the error taxonomy used across the library.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fillin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A scalar field sampled on the grid of the metric that owns it. Round
// metrics carry a single value; axisymmetric metrics one value per x-node.
using ScalarField = Eigen::VectorXd;

/// A violated precondition, domain restriction, or degenerate input.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Grid or dimension mismatch between values that must share a discretization.
class AlignmentError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// An iterative scheme failed to converge or a solution degenerated.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Geometry constants

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
  return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// Area of the unit sphere S^m in R^{m+1}.
inline double unit_sphere_area(int m) {
  return (m + 1) * unit_ball_volume(m + 1);
}

// ---------------------------------------------------------------------------
// Small numerics

/// Quintic smoothstep: 0 for x<=0, 1 for x>=1, C^2 ramp in between.
inline double smoothstep5(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

inline double sqr(double x) { return x * x; }

/// First derivative at the middle node of a 3-point stencil with spacings
/// hm = x0-xm, hp = xp-x0 (second order).
inline double d1_center(double fm, double f0, double fp, double hm, double hp) {
  return (-hp / (hm * (hm + hp))) * fm + ((hp - hm) / (hm * hp)) * f0 +
         (hm / (hp * (hm + hp))) * fp;
}

/// Second derivative at the middle node of a nonuniform 3-point stencil.
inline double d2_center(double fm, double f0, double fp, double hm, double hp) {
  return 2.0 * (fm / (hm * (hm + hp)) - f0 / (hm * hp) + fp / (hp * (hm + hp)));
}

/// One-sided first derivative at the left node of (x0,x1,x2), spacings
/// h1 = x1-x0, h2 = x2-x1 (second order).
inline double d1_left(double f0, double f1, double f2, double h1, double h2) {
  return -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f0 +
         (h1 + h2) / (h1 * h2) * f1 - h1 / (h2 * (h1 + h2)) * f2;
}

/// One-sided first derivative at the right node of (x0,x1,x2).
inline double d1_right(double f0, double f1, double f2, double h1, double h2) {
  return -d1_left(f2, f1, f0, h2, h1);
}

/// Fourth-order one-sided first derivative on a uniform 5-point stencil.
inline double d1_left4(double f0, double f1, double f2, double f3, double f4,
                       double h) {
  return (-25.0 * f0 + 48.0 * f1 - 36.0 * f2 + 16.0 * f3 - 3.0 * f4) /
         (12.0 * h);
}

/// Composite Simpson on a uniform grid (trapezoid on the last cell when the
/// interval count is odd).
double integrate_uniform(const Vector& f, double h);

/// Solves a tridiagonal system in O(N). `lower` has size N-1 (row i couples
/// to i-1), `upper` size N-1 (row i couples to i+1).
Vector tridiag_solve(const Vector& lower, const Vector& diag,
                     const Vector& upper, const Vector& rhs);

/// Natural cubic spline through (x_i, y_i); optional clamped end slopes.
/// Evaluation outside the node range extends the end cubics.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, Vector y,
              std::optional<double> slope_lo = std::nullopt,
              std::optional<double> slope_hi = std::nullopt);

  double value(double t) const;
  double deriv(double t) const;
  double deriv2(double t) const;
  bool empty() const { return x_.empty(); }

 private:
  int locate(double t) const;
  std::vector<double> x_;
  Vector y_;
  Vector m_;  // second derivatives at the nodes
};

/// %.17g rendering used by every report writer, so that reruns are
/// byte-identical.
std::string format_g17(double v);

}  // namespace fillin
