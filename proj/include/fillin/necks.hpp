#pragma once

// Explicit neck metrics and their verifiers: the Schwarzschild band in
// isotropic-style coordinates (with its rescaled form), the spherical-cap
// neck, the isotopy neck, collar bending, the cylinder transition function,
// and the gluing-hypotheses checker live here.

#include "fillin/paths.hpp"

namespace fillin {

// ---------------------------------------------------------------------------
// Schwarzschild neck

/// Band psi(r)^2 (dr^2 + r^2 gamma) on Sigma x [r1, r2] with
/// psi = (1 + m/(2 r^{n-2}))^{2/(n-2)}, plus the tau^2-scaled variant used to
/// realize data with arbitrary curvature scale. Mean curvatures are with
/// respect to the +dr direction; the inner boundary of the band has
/// H_g = -H_r(r1).
struct SchwarzschildNeck {
  int n = 3;
  double m = 0.0;
  double r1 = 0.0, r2 = 0.0;
  double H_outer = 0.0;  // physical outer mean-curvature datum
  double h_inner = 0.0;
  double tau2 = 1.0;     // 1 for the unscaled form
  double mu = 0.0;       // inner boundary metric factor (r1 psi(r1))^2
  bool r_psi_monotone = true;  // r psi(r) increasing on [r1, r2] (1e3 grid)

  struct Residuals {
    double mass_formula = 0.0;       // m - (1/2 - Hs^2/(2(n-1)^2))
    double outer_normalization = 0.0;  // r2 psi(r2) - 1
    double outer_mean_curvature = 0.0;
    double inner_mean_curvature = 0.0;
  } residuals;

  double psi(double r) const;
  /// Mean curvature of Sigma x {r} wrt +dr in the unscaled band metric.
  double H_r(double r) const;
  /// Physical mean curvature in the scaled band (H_r / tau).
  double mean_curvature(double r) const;
  /// Scalar curvature of the scaled band given the slice value of R_gamma:
  /// r^{-2} psi^{-2} (R_gamma - (n-1)(n-2)/tau^2).
  double scalar_curvature(double r, double R_gamma) const;
  /// Coefficient r^{-2} psi^{-2} of the curvature functional.
  double curvature_coefficient(double r) const;

  /// Discretized scaled band over `gamma` for FD verification/export;
  /// includes one extra grid cell of extension at each end.
  WarpedBand band(const SphereMetric& gamma, int slices = 401) const;
};

/// Closed-form lemma band for constant data H in (0, n-1), h in [0, H).
SchwarzschildNeck build_schwarzschild_neck(int n, double H, double h);

/// Scaled neck realizing (gamma, H) and (mu gamma, h) with pointwise
/// R >= min R_gamma - (n-2)/(n-1) H^2 - eps; the scale is
/// tau^2 = (n-1)(n-2) / ((n-2) H^2/(n-1) + eps). The bound and mu < 1 are
/// verified on the discretized band.
SchwarzschildNeck rescale_neck(int n, const SphereMetric& gamma, double H,
                               double h, double eps);

// ---------------------------------------------------------------------------
// Spherical-cap neck

/// Unique root c_mu in (0,1) of x^{1-2/n} = mu (1 - x), by bisection on the
/// strictly increasing x -> x^{1-2/n}/(1-x). Residual < 1e-13.
double solve_c_mu(int n, double mu);

/// Band dt^2 + c^2 sigma^{-2} sin^{4/n}((n sigma/2) t) gamma between the
/// slice of mean curvature lambda - eps (where the profile factor is 1) and
/// the slice of normalized mean curvature 1.
struct CapNeck {
  int n = 3;
  double lambda = 0.0, theta = 0.0, eps = 0.0;
  double sigma = 0.0, c = 0.0;
  double t1 = 0.0, t2 = 0.0;
  double alpha_eps = 0.0;
  double mu_eps = 0.0, c_mu = 0.0;

  struct Residuals {
    double eq1 = 0.0;  // n(n-1) sigma^2 - theta
    double eq2 = 0.0;  // H_{t1} - (lambda - eps)
    double eq3 = 0.0;  // alpha(t1) - 1
    double eq4 = 0.0;  // normalized H_{t2} - 1
    double eq5 = 0.0;  // alpha(t2) - alpha_eps
    double closed_form = 0.0;  // alpha_eps - closed-form value
    double eq7 = 0.0;  // sin^2((n sigma/2) t1) - consistency identity
  } residuals;

  double profile(double t) const;  // alpha(t) = c sigma^{-1} sin^{2/n}(...)
  double H_t(double t) const;
  double normalized_H(double t) const;
};

CapNeck build_cap_neck(int n, double lambda, double theta, double eps);

// ---------------------------------------------------------------------------
// Isotopy neck

/// g = A(t)^2 dt^2 + e^{2B(t)} gamma(t), A = e^{Lambda t}, over a PSC path
/// that is constant near both ends. B is chosen so the gbar mean curvature
/// equals eps0 at both ends and stays >= eps0 pointwise; Lambda is the
/// smallest power of two making the discretized scalar curvature positive.
struct IsotopyNeck {
  MetricPath path;
  double eps0 = 0.0;
  double c0 = 0.0;
  Vector B;        // per t-node
  Vector B_prime;
  double Lambda = 1.0;
  double mu = 1.0;    // e^{2 B(1)}
  double eps1 = 0.0;  // e^{-Lambda} eps0
  Matrix Hbar;        // t-nodes x grid
  Matrix R_formula;   // scalar curvature from the closed expression
  double min_R = 0.0;

  WarpedBand band() const;
};

IsotopyNeck build_isotopy_neck(const MetricPath& path, double eps0, double c0);

// ---------------------------------------------------------------------------
// Collar bend

/// Deformation g4 = dt^2 + (1 + omega(y) kappa(t))^2 ghat3 of a unit-lapse
/// collar band, adjusting the boundary mean curvature by (n-1) omega at
/// t = 0 while keeping the induced boundary metric.
struct CollarBend {
  WarpedBand base;       // unit-lapse band on [-t0, 0], boundary at t = 0
  Vector omega;          // positive field on the slice grid
  Vector kappa;          // per t-node, kappa(0) = 0
  Vector kappa_prime;    // kappa'(0) = -1
  Vector kappa_second;
  double t1 = 0.0;       // bending-interval width; kappa'' <= max < 0 there

  static CollarBend quadratic(WarpedBand base, Vector omega, double K,
                              double t1);
};

struct CollarBendResult {
  WarpedBand band;   // the bent band g4
  Matrix R;          // curvature from the six-term expansion
  Matrix H;          // slice mean curvature of g4 (+t direction)
  Vector H_boundary; // H4 at t = 0, equals H3 - (n-1) omega
};

CollarBendResult collar_bend(const CollarBend& bend, int n);

// ---------------------------------------------------------------------------
// Cylinder transition function

/// u(s) = alpha + (1 - alpha) phi(s/r) with the quintic-smoothstep ramp phi
/// (phi = 0 on [0,1], 1 on [2,inf), |phi'| + |phi''| <= 10).
Vector transition_function(double r, double alpha, const Vector& s_grid);
double transition_ramp(double x);

// ---------------------------------------------------------------------------
// Bending profile

/// w(d) = (1 - beta d)^{1/4} - 1 with beta = 2 C1, on a distance grid with
/// beta * d_max < 1/2. The certificate carries dw/dnu at d = 0 (= beta/4)
/// and the negative upper bound for the Laplacian comparison.
struct BendingProfile {
  double C1 = 0.0, alpha = 0.25, beta = 0.0;
  Vector d, w;
  Vector laplacian_bound;  // 2 a C1^2 (1-beta d)^{a-2} (2a - 1 - beta d)
  double normal_derivative_at_0 = 0.0;
  double margin = 0.0;  // -max(laplacian_bound) > 0
};

BendingProfile bending_profile(const Vector& d_grid, double C1);

}  // namespace fillin
