#include "fillin/common.hpp"

#include <algorithm>
#include <cstdio>

namespace fillin {

double integrate_uniform(const Vector& f, double h) {
  const Eigen::Index n = f.size();
  if (n == 0) return 0.0;
  if (n == 1) return 0.0;
  if (n == 2) return 0.5 * h * (f[0] + f[1]);
  const Eigen::Index intervals = n - 1;
  const Eigen::Index simpson_end = (intervals % 2 == 0) ? n - 1 : n - 2;
  double acc = 0.0;
  for (Eigen::Index i = 0; i + 2 <= simpson_end; i += 2) {
    acc += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  }
  if (simpson_end != n - 1) acc += 0.5 * h * (f[n - 2] + f[n - 1]);
  return acc;
}

Vector tridiag_solve(const Vector& lower, const Vector& diag,
                     const Vector& upper, const Vector& rhs) {
  const Eigen::Index n = diag.size();
  Vector c(n), d(n);
  double beta = diag[0];
  if (beta == 0.0) throw NumericalError("tridiagonal solve: zero pivot");
  c[0] = (n > 1) ? upper[0] / beta : 0.0;
  d[0] = rhs[0] / beta;
  for (Eigen::Index i = 1; i < n; ++i) {
    beta = diag[i] - lower[i - 1] * c[i - 1];
    if (beta == 0.0) throw NumericalError("tridiagonal solve: zero pivot");
    c[i] = (i + 1 < n) ? upper[i] / beta : 0.0;
    d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / beta;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) d[i] -= c[i] * d[i + 1];
  return d;
}

CubicSpline::CubicSpline(std::vector<double> x, Vector y,
                         std::optional<double> slope_lo,
                         std::optional<double> slope_hi)
    : x_(std::move(x)), y_(std::move(y)) {
  const Eigen::Index n = y_.size();
  if (static_cast<Eigen::Index>(x_.size()) != n || n < 2)
    throw AlignmentError("cubic spline: need >= 2 matching nodes");
  for (size_t i = 1; i < x_.size(); ++i)
    if (!(x_[i] > x_[i - 1]))
      throw PreconditionError("cubic spline: nodes must be increasing");
  if (n == 2) {
    m_ = Vector::Zero(2);
    return;
  }
  Vector lower(n - 1), diag(n), upper(n - 1), rhs(n);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double hm = x_[i] - x_[i - 1];
    const double hp = x_[i + 1] - x_[i];
    lower[i - 1] = hm / 6.0;
    diag[i] = (hm + hp) / 3.0;
    upper[i] = hp / 6.0;
    rhs[i] = (y_[i + 1] - y_[i]) / hp - (y_[i] - y_[i - 1]) / hm;
  }
  const double h0 = x_[1] - x_[0];
  const double hn = x_[n - 1] - x_[n - 2];
  if (slope_lo) {
    diag[0] = h0 / 3.0;
    upper[0] = h0 / 6.0;
    rhs[0] = (y_[1] - y_[0]) / h0 - *slope_lo;
  } else {
    diag[0] = 1.0;
    upper[0] = 0.0;
    rhs[0] = 0.0;
  }
  if (slope_hi) {
    diag[n - 1] = hn / 3.0;
    lower[n - 2] = hn / 6.0;
    rhs[n - 1] = *slope_hi - (y_[n - 1] - y_[n - 2]) / hn;
  } else {
    diag[n - 1] = 1.0;
    lower[n - 2] = 0.0;
    rhs[n - 1] = 0.0;
  }
  m_ = tridiag_solve(lower, diag, upper, rhs);
}

int CubicSpline::locate(double t) const {
  const int n = static_cast<int>(x_.size());
  if (t <= x_[1]) return 0;
  if (t >= x_[n - 2]) return n - 2;
  const int i = static_cast<int>(std::upper_bound(x_.begin(), x_.end(), t) -
                                 x_.begin()) -
                1;
  return std::clamp(i, 0, n - 2);
}

double CubicSpline::value(double t) const {
  const int i = locate(t);
  const double h = x_[i + 1] - x_[i];
  const double A = (x_[i + 1] - t) / h;
  const double B = 1.0 - A;
  return A * y_[i] + B * y_[i + 1] +
         ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::deriv(double t) const {
  const int i = locate(t);
  const double h = x_[i + 1] - x_[i];
  const double A = (x_[i + 1] - t) / h;
  const double B = 1.0 - A;
  return (y_[i + 1] - y_[i]) / h +
         ((3.0 * B * B - 1.0) * m_[i + 1] - (3.0 * A * A - 1.0) * m_[i]) * h /
             6.0;
}

double CubicSpline::deriv2(double t) const {
  const int i = locate(t);
  const double h = x_[i + 1] - x_[i];
  const double A = (x_[i + 1] - t) / h;
  return A * m_[i] + (1.0 - A) * m_[i + 1];
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace fillin
