#include "fillin/necks.hpp"

#include <algorithm>
#include <cmath>

namespace fillin {

// ---------------------------------------------------------------------------
// Schwarzschild neck

double SchwarzschildNeck::psi(double r) const {
  return std::pow(1.0 + m / (2.0 * std::pow(r, n - 2)), 2.0 / (n - 2));
}

double SchwarzschildNeck::H_r(double r) const {
  const double x = m / (2.0 * std::pow(r, n - 2));
  return (n - 1) / r * std::pow(psi(r), -0.5 * n) * (1.0 - x);
}

double SchwarzschildNeck::mean_curvature(double r) const {
  return H_r(r) / std::sqrt(tau2);
}

double SchwarzschildNeck::curvature_coefficient(double r) const {
  return 1.0 / (r * r * sqr(psi(r)));
}

double SchwarzschildNeck::scalar_curvature(double r, double R_gamma) const {
  return curvature_coefficient(r) * (R_gamma - (n - 1) * (n - 2) / tau2);
}

namespace {

// H_r as a function of x = m/(2 r^{n-2}); decreasing from 0 on [1, x*] with
// x* = (n-1) + sqrt(n(n-2)) the interior minimizer.
double H_of_x(int n, double m, double x) {
  const double r = std::pow(m / (2.0 * x), 1.0 / (n - 2));
  const double psi = std::pow(1.0 + x, 2.0 / (n - 2));
  return (n - 1) / r * std::pow(psi, -0.5 * n) * (1.0 - x);
}

void check_r_psi_monotone(SchwarzschildNeck& neck) {
  const int pts = 1000;
  double prev = neck.r1 * neck.psi(neck.r1);
  neck.r_psi_monotone = true;
  for (int i = 1; i < pts; ++i) {
    const double r = neck.r1 + (neck.r2 - neck.r1) * i / (pts - 1.0);
    const double cur = r * neck.psi(r);
    if (cur <= prev) {
      neck.r_psi_monotone = false;
      return;
    }
    prev = cur;
  }
}

}  // namespace

SchwarzschildNeck build_schwarzschild_neck(int n, double H, double h) {
  if (n < 3) throw PreconditionError("schwarzschild neck: n >= 3 required");
  if (!(H > 0.0 && H < n - 1))
    throw PreconditionError("schwarzschild neck: H must lie in (0, n-1)");
  if (!(h >= 0.0 && h < H))
    throw PreconditionError("schwarzschild neck: h must lie in [0, H)");

  SchwarzschildNeck neck;
  neck.n = n;
  neck.H_outer = H;
  neck.h_inner = h;
  neck.m = 0.5 - H * H / (2.0 * sqr(static_cast<double>(n - 1)));
  neck.r2 = std::pow((n - 1 + H) / (2.0 * (n - 1)), 2.0 / (n - 2));

  const double r_horizon = std::pow(0.5 * neck.m, 1.0 / (n - 2));
  if (h == 0.0) {
    neck.r1 = r_horizon;
  } else {
    // Bisection in x = m / (2 r^{n-2}) on [1, x*], where H_r is monotone.
    const double x_star = (n - 1) + std::sqrt(static_cast<double>(n * (n - 2)));
    double lo = 1.0, hi = x_star;
    if (H_of_x(n, neck.m, hi) + h >= 0.0)
      throw NumericalError("schwarzschild neck: no inner root for h");
    for (int it = 0; it < 120 && (hi - lo) > 1e-16 * x_star; ++it) {
      const double mid = 0.5 * (lo + hi);
      (H_of_x(n, neck.m, mid) + h >= 0.0 ? lo : hi) = mid;
    }
    const double x1 = 0.5 * (lo + hi);
    neck.r1 = std::pow(neck.m / (2.0 * x1), 1.0 / (n - 2));
  }

  neck.mu = sqr(neck.r1 * neck.psi(neck.r1));
  neck.residuals.mass_formula =
      neck.m - (0.5 - H * H / (2.0 * sqr(static_cast<double>(n - 1))));
  neck.residuals.outer_normalization = neck.r2 * neck.psi(neck.r2) - 1.0;
  neck.residuals.outer_mean_curvature = neck.H_r(neck.r2) - H;
  neck.residuals.inner_mean_curvature = neck.H_r(neck.r1) + h;
  check_r_psi_monotone(neck);

  if (std::abs(neck.residuals.outer_normalization) > 1e-12 ||
      std::abs(neck.residuals.outer_mean_curvature) > 1e-10 ||
      std::abs(neck.residuals.inner_mean_curvature) > 1e-10)
    throw NumericalError("schwarzschild neck: residuals exceed tolerance");
  return neck;
}

WarpedBand SchwarzschildNeck::band(const SphereMetric& gamma,
                                   int slices) const {
  if (slices < 8) throw PreconditionError("neck band: need >= 8 slices");
  const double tau = std::sqrt(tau2);
  // Log-spaced slices resolve the power-law coefficients near r1 uniformly;
  // one extra grid cell of extension at each end.
  const double step = std::log(r2 / r1) / (slices - 1);
  std::vector<double> r;
  r.reserve(slices + 2);
  r.push_back(r1 * std::exp(-step));
  for (int i = 0; i < slices; ++i) r.push_back(r1 * std::exp(step * i));
  r.push_back(r2 * std::exp(step));
  const int M = static_cast<int>(r.size());

  Matrix lapse;
  if (gamma.round_like()) {
    lapse.resize(M, 1);
    Vector scale(M);
    const double k = sqr(gamma.round_radius());
    for (int i = 0; i < M; ++i) {
      const double ps = psi(r[i]);
      lapse(i, 0) = tau * ps;
      scale[i] = sqr(ps * r[i]) * k;
    }
    return WarpedBand::round_band(gamma.dim(), std::move(r), std::move(scale),
                                  std::move(lapse));
  }
  const int N = gamma.grid_size();
  const double ka = gamma.component_a();
  const Vector cc = gamma.component_c();
  Matrix a(M, N), c(M, N);
  lapse.resize(M, N);
  for (int i = 0; i < M; ++i) {
    const double ps = psi(r[i]);
    const double w = sqr(ps * r[i]);
    a.row(i).setConstant(w * ka);
    c.row(i) = w * cc.transpose();
    lapse.row(i).setConstant(tau * ps);
  }
  return WarpedBand::axisym_band(std::move(r), std::move(a), std::move(c),
                                 std::move(lapse));
}

SchwarzschildNeck rescale_neck(int n, const SphereMetric& gamma, double H,
                               double h, double eps) {
  if (!(H > 0.0)) throw PreconditionError("rescale neck: H must be positive");
  if (!(h >= 0.0 && h < H))
    throw PreconditionError("rescale neck: h must lie in [0, H)");
  const double minR = min_scalar_curvature(gamma);
  const double curv_gap = minR - (n - 2) * H * H / (n - 1.0);
  if (!(curv_gap > 0.0))
    throw PreconditionError(
        "rescale neck: hypothesis min R_gamma > (n-2)/(n-1) H^2 violated "
        "(min R = " +
        format_g17(minR) + ", (n-2)/(n-1) H^2 = " +
        format_g17((n - 2) * H * H / (n - 1.0)) + ")");
  if (!(eps > 0.0 && eps < curv_gap))
    throw PreconditionError(
        "rescale neck: hypothesis 0 < eps < min R_gamma - (n-2)/(n-1) H^2 "
        "violated (gap = " +
        format_g17(curv_gap) + ")");

  const double tau2 = (n - 1) * (n - 2) / ((n - 2) * H * H / (n - 1.0) + eps);
  const double tau = std::sqrt(tau2);
  SchwarzschildNeck neck = build_schwarzschild_neck(n, tau * H, tau * h);
  neck.tau2 = tau2;
  neck.H_outer = H;
  neck.h_inner = h;
  neck.residuals.outer_mean_curvature = neck.mean_curvature(neck.r2) - H;
  neck.residuals.inner_mean_curvature = neck.mean_curvature(neck.r1) + h;

  if (!(neck.mu < 1.0))
    throw NumericalError("rescale neck: inner metric factor mu >= 1");

  // Pointwise verification on the discretized band. The bound is tight at
  // r = r2 (r psi(r2) = 1 exactly), so the pointwise check runs on the neck
  // slices strictly below r2; the outer pad extends past the neck, where only
  // agreement with the closed form is asserted.
  const WarpedBand bd = neck.band(gamma);
  const BandCurvature bc = fd_band_curvature(bd);
  const Vector Rgamma = scalar_curvature(gamma);
  const double bound = minR - (n - 2) * H * H / (n - 1.0) - eps;
  const auto& r = bd.s_grid();
  const double dr = r[r.size() - 2] - r[r.size() - 3];
  double worst = std::numeric_limits<double>::infinity();
  double agreement = 0.0;
  for (int i = 1; i + 1 < bd.slices(); ++i) {
    for (int j = 0; j < bd.grid_size(); ++j) {
      const double Rg = Rgamma[std::min<Eigen::Index>(j, Rgamma.size() - 1)];
      const double closed = neck.scalar_curvature(r[i], Rg);
      agreement = std::max(agreement, std::abs(bc.R(i, j) - closed) /
                                          std::max(1.0, std::abs(closed)));
    }
    if (r[i] < neck.r2 - 0.5 * dr) worst = std::min(worst, bc.R.row(i).minCoeff());
  }
  if (worst < bound)
    throw NumericalError(
        "rescale neck: discretized curvature bound violated (min R = " +
        format_g17(worst) + " < " + format_g17(bound) + ")");
  if (agreement > 1e-3)
    throw NumericalError(
        "rescale neck: FD curvature disagrees with the closed form by " +
        format_g17(agreement));
  return neck;
}

// ---------------------------------------------------------------------------
// c_mu and the cap neck

double solve_c_mu(int n, double mu) {
  if (n < 3) throw PreconditionError("c_mu: n >= 3 required");
  if (!(mu > 0.0)) throw PreconditionError("c_mu: mu must be positive");
  const double p = 1.0 - 2.0 / n;
  auto f = [&](double x) { return std::pow(x, p) - mu * (1.0 - x); };
  double lo = 0.0, hi = 1.0;
  // Roots near 0 have a steep residual (f' ~ x^{-2/n}), so run the bisection
  // to the ulp stall rather than to a fixed interval width.
  for (int it = 0; it < 1100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  const double c = f(lo) == 0.0 ? lo : hi;
  const double residual = std::abs(std::pow(c, p) - mu * (1.0 - c));
  if (residual >= 1e-13 * std::max(1.0, mu))
    throw NumericalError("c_mu: residual " + format_g17(residual));
  return c;
}

double CapNeck::profile(double t) const {
  return c / sigma * std::pow(std::sin(0.5 * n * sigma * t), 2.0 / n);
}

double CapNeck::H_t(double t) const {
  return (n - 1) * sigma / std::tan(0.5 * n * sigma * t);
}

double CapNeck::normalized_H(double t) const { return profile(t) * H_t(t); }

CapNeck build_cap_neck(int n, double lambda, double theta, double eps) {
  if (n < 3) throw PreconditionError("cap neck: n >= 3 required");
  if (!(lambda > 1.0)) throw PreconditionError("cap neck: lambda > 1 required");
  if (!(theta > 0.0))
    throw PreconditionError(
        "cap neck: theta must be positive (theta <= 0 is the trivial "
        "amplification branch)");
  if (!(eps >= 0.0 && eps < lambda - 1.0))
    throw PreconditionError("cap neck: eps must lie in [0, lambda - 1)");

  CapNeck neck;
  neck.n = n;
  neck.lambda = lambda;
  neck.theta = theta;
  neck.eps = eps;
  const double lam = lambda - eps;
  neck.sigma = std::sqrt(theta / (n * (n - 1.0)));

  const double u1 = std::atan((n - 1) * neck.sigma / lam);  // (n sigma/2) t1
  neck.t1 = 2.0 * u1 / (n * neck.sigma);
  neck.c = neck.sigma / std::pow(std::sin(u1), 2.0 / n);

  neck.mu_eps = (n - 1.0) / n *
                std::pow(theta + n * lam * lam / (n - 1.0), 2.0 / n) *
                std::pow(theta, 1.0 - 2.0 / n);
  neck.c_mu = solve_c_mu(n, neck.mu_eps);
  const double u2 = std::asin(std::sqrt(neck.c_mu));
  neck.t2 = 2.0 * u2 / (n * neck.sigma);
  neck.alpha_eps = neck.c / neck.sigma * std::pow(std::sin(u2), 2.0 / n);

  const double closed =
      std::pow(1.0 - neck.c_mu, 1.0 / (n - 2)) *
      std::pow(lam * lam + (n - 1.0) / n * theta, 1.0 / (n - 2));

  neck.residuals.eq1 = n * (n - 1.0) * sqr(neck.sigma) - theta;
  neck.residuals.eq2 = neck.H_t(neck.t1) - lam;
  neck.residuals.eq3 = neck.profile(neck.t1) - 1.0;
  neck.residuals.eq4 = neck.normalized_H(neck.t2) - 1.0;
  neck.residuals.eq5 = neck.profile(neck.t2) - neck.alpha_eps;
  neck.residuals.closed_form = neck.alpha_eps - closed;
  neck.residuals.eq7 =
      sqr(std::sin(u1)) -
      (n - 1.0) * theta / (n * lam * lam + (n - 1.0) * theta);

  if (std::abs(neck.residuals.eq1) > 1e-12 * std::max(1.0, theta) ||
      std::abs(neck.residuals.eq2) > 1e-10 ||
      std::abs(neck.residuals.eq3) > 1e-10 ||
      std::abs(neck.residuals.eq4) > 1e-10 ||
      std::abs(neck.residuals.eq5) > 1e-10 ||
      std::abs(neck.residuals.closed_form) > 1e-10)
    throw NumericalError("cap neck: defining-equation residuals exceed tolerance");
  return neck;
}

// ---------------------------------------------------------------------------
// Isotopy neck

IsotopyNeck build_isotopy_neck(const MetricPath& path, double eps0, double c0) {
  if (!(eps0 > 0.0))
    throw PreconditionError("isotopy neck: eps0 must be positive");
  if (!(c0 > 0.0 && c0 < eps0))
    throw PreconditionError("isotopy neck: require 0 < c0 < eps0");
  if (!path.psc())
    throw PreconditionError("isotopy neck: path leaves PSC (min slice R = " +
                            format_g17(path.min_scalar()) + ")");
  if (!path.constant_near_0() || !path.constant_near_1())
    throw PreconditionError(
        "isotopy neck: path must be constant near t = 0 and t = 1");

  const int M = path.t_nodes();
  const int N = path.grid_size();
  const int n = path.dim();
  const double ht = path.t(1) - path.t(0);

  IsotopyNeck neck;
  neck.path = path;
  neck.eps0 = eps0;
  neck.c0 = c0;
  neck.B.resize(M);
  neck.B_prime.resize(M);
  neck.Hbar.resize(M, N);

  // tr_gamma gamma' per node; poles carry the a-component rate.
  Matrix trace(M, N);
  for (int i = 0; i < M; ++i) {
    const auto ev = path.eval(path.t(i));
    const double ra = ev.a_t / ev.a;
    if (N == 1) {
      trace(i, 0) = (n - 1) * ra;
    } else {
      for (int j = 0; j < N; ++j) {
        trace(i, j) = (j == 0 || j == N - 1) ? 2.0 * ra
                                             : ra + ev.c_t[j] / ev.c[j];
      }
    }
  }
  for (int i = 0; i < M; ++i)
    neck.B_prime[i] = (eps0 - 0.5 * trace.row(i).minCoeff()) / (n - 1.0);
  neck.B[0] = 0.0;
  for (int i = 1; i < M; ++i)
    neck.B[i] = neck.B[i - 1] + 0.5 * ht * (neck.B_prime[i - 1] + neck.B_prime[i]);
  for (int i = 0; i < M; ++i)
    neck.Hbar.row(i) =
        ((n - 1.0) * neck.B_prime[i] + 0.5 * trace.row(i).array()).matrix();

  if (std::abs(neck.Hbar(0, 0) - eps0) > 1e-8 ||
      std::abs(neck.Hbar(M - 1, 0) - eps0) > 1e-8)
    throw NumericalError("isotopy neck: endpoint mean curvature misses eps0");
  if (neck.Hbar.minCoeff() < c0)
    throw NumericalError("isotopy neck: mean-curvature floor violated");

  // Unit-lapse comparison band gbar = dt^2 + e^{2B} gamma(t).
  std::vector<double> t(M);
  for (int i = 0; i < M; ++i) t[i] = path.t(i);
  WarpedBand gbar = [&] {
    if (N == 1) {
      Vector scale(M);
      for (int i = 0; i < M; ++i)
        scale[i] = std::exp(2.0 * neck.B[i]) * path.eval(t[i]).a;
      return WarpedBand::round_band(n, t, std::move(scale), Matrix::Ones(M, 1));
    }
    Matrix a(M, N), c(M, N);
    for (int i = 0; i < M; ++i) {
      const auto ev = path.eval(t[i]);
      const double e2b = std::exp(2.0 * neck.B[i]);
      a.row(i).setConstant(e2b * ev.a);
      c.row(i) = e2b * ev.c.transpose();
    }
    return WarpedBand::axisym_band(t, std::move(a), std::move(c),
                                   Matrix::Ones(M, N));
  }();
  const BandCurvature bc = fd_band_curvature(gbar);

  // Smallest power of two making the discretized scalar curvature positive:
  // R_g = e^{-2 Lambda t} (2 Lambda Hbar + (e^{2 Lambda t} - 1) R_t + R_gbar).
  bool found = false;
  for (int j = 0; j <= 40 && !found; ++j) {
    const double Lambda = std::pow(2.0, j);
    Matrix R(M, N);
    for (int i = 0; i < M; ++i) {
      const double e2 = std::exp(2.0 * Lambda * t[i]);
      R.row(i) = ((2.0 * Lambda * neck.Hbar.row(i).array() +
                   (e2 - 1.0) * bc.Rhat.row(i).array() + bc.R.row(i).array()) /
                  e2)
                     .matrix();
    }
    if (R.minCoeff() > 0.0) {
      neck.Lambda = Lambda;
      neck.R_formula = std::move(R);
      neck.min_R = neck.R_formula.minCoeff();
      found = true;
    }
  }
  if (!found) {
    Eigen::Index imin = 0, jmin = 0;
    Matrix last(M, N);
    const double Lambda = std::pow(2.0, 40);
    for (int i = 0; i < M; ++i) {
      const double e2 = std::exp(2.0 * Lambda * t[i]);
      last.row(i) = ((2.0 * Lambda * neck.Hbar.row(i).array() +
                      (e2 - 1.0) * bc.Rhat.row(i).array() + bc.R.row(i).array()) /
                     e2)
                        .matrix();
    }
    last.minCoeff(&imin, &jmin);
    throw NumericalError(
        "isotopy neck: no Lambda <= 2^40 achieves positivity; limiting slice "
        "t = " +
        format_g17(t[imin]));
  }
  neck.mu = std::exp(2.0 * neck.B[M - 1]);
  neck.eps1 = std::exp(-neck.Lambda) * eps0;
  return neck;
}

WarpedBand IsotopyNeck::band() const {
  const int M = path.t_nodes();
  const int N = path.grid_size();
  std::vector<double> t(M);
  for (int i = 0; i < M; ++i) t[i] = path.t(i);
  if (N == 1) {
    Vector scale(M);
    Matrix lapse(M, 1);
    for (int i = 0; i < M; ++i) {
      scale[i] = std::exp(2.0 * B[i]) * path.eval(t[i]).a;
      lapse(i, 0) = std::exp(Lambda * t[i]);
    }
    return WarpedBand::round_band(path.dim(), t, std::move(scale),
                                  std::move(lapse));
  }
  Matrix a(M, N), c(M, N), lapse(M, N);
  for (int i = 0; i < M; ++i) {
    const auto ev = path.eval(t[i]);
    const double e2b = std::exp(2.0 * B[i]);
    a.row(i).setConstant(e2b * ev.a);
    c.row(i) = e2b * ev.c.transpose();
    lapse.row(i).setConstant(std::exp(Lambda * t[i]));
  }
  return WarpedBand::axisym_band(t, std::move(a), std::move(c),
                                 std::move(lapse));
}

// ---------------------------------------------------------------------------
// Collar bend

CollarBend CollarBend::quadratic(WarpedBand base, Vector omega, double K,
                                 double t1) {
  CollarBend bend;
  const auto& t = base.s_grid();
  const int M = static_cast<int>(t.size());
  bend.kappa.resize(M);
  bend.kappa_prime.resize(M);
  bend.kappa_second.resize(M);
  for (int i = 0; i < M; ++i) {
    bend.kappa[i] = -t[i] - 0.5 * K * t[i] * t[i];
    bend.kappa_prime[i] = -1.0 - K * t[i];
    bend.kappa_second[i] = -K;
  }
  bend.base = std::move(base);
  bend.omega = std::move(omega);
  bend.t1 = t1;
  return bend;
}

CollarBendResult collar_bend(const CollarBend& bend, int n) {
  const WarpedBand& g3 = bend.base;
  const int M = g3.slices();
  const int N = g3.grid_size();
  const auto& t = g3.s_grid();
  if (std::abs(t.back()) > 1e-12)
    throw PreconditionError("collar bend: boundary slice must sit at t = 0");
  if ((g3.lapse().array() - 1.0).abs().maxCoeff() > 1e-12)
    throw PreconditionError("collar bend: base band must have unit lapse");
  if (bend.omega.size() != N)
    throw AlignmentError("collar bend: omega grid mismatch");
  if (bend.omega.minCoeff() <= 0.0)
    throw PreconditionError("collar bend: omega must be positive");
  if (bend.kappa.size() != M || bend.kappa_prime.size() != M ||
      bend.kappa_second.size() != M)
    throw AlignmentError("collar bend: kappa sampling mismatch");
  if (std::abs(bend.kappa[M - 1]) > 1e-12 ||
      std::abs(bend.kappa_prime[M - 1] + 1.0) > 1e-12)
    throw PreconditionError(
        "collar bend: kappa(0) = 0 and kappa'(0) = -1 required");
  double kpp_max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < M; ++i)
    if (t[i] >= -bend.t1 - 1e-12)
      kpp_max = std::max(kpp_max, bend.kappa_second[i]);
  if (!(kpp_max < 0.0))
    throw PreconditionError(
        "collar bend: kappa'' must be negative on the bending interval");
  const bool round_fam = g3.family() == WarpedBand::Family::Round;
  const bool omega_const =
      (bend.omega.array() - bend.omega[0]).abs().maxCoeff() == 0.0;
  if (n != 3 && !(round_fam && omega_const))
    throw PreconditionError(
        "collar bend: n != 3 supported only for round slices with constant omega");

  const BandCurvature bc3 = fd_band_curvature(g3);
  const double hx = round_fam ? 0.0 : g3.x_step();

  Matrix rho(M, N);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < N; ++j)
      rho(i, j) = 1.0 + bend.omega[j] * bend.kappa[i];
  if (rho.minCoeff() <= 0.0)
    throw PreconditionError("collar bend: degenerate bend, 1 + omega kappa <= 0");

  CollarBendResult out;
  out.R.resize(M, N);
  out.H.resize(M, N);
  for (int i = 0; i < M; ++i) {
    Vector lap3 = Vector::Zero(N);
    Vector grad3 = Vector::Zero(N);
    if (!round_fam && !omega_const) {
      const Vector a3 = g3.a().row(i).transpose();
      const Vector c3 = g3.c().row(i).transpose();
      lap3 = axisym_slice_laplacian(a3, c3, bend.omega, hx);
      for (int j = 1; j + 1 < N; ++j) {
        const double wp = (bend.omega[j + 1] - bend.omega[j - 1]) / (2.0 * hx);
        grad3[j] = wp * wp / a3[j];
      }
    }
    const double k = bend.kappa[i];
    const double kp = bend.kappa_prime[i];
    const double kpp = bend.kappa_second[i];
    for (int j = 0; j < N; ++j) {
      const double w = bend.omega[j];
      const double p = rho(i, j);
      // Conformal surface rule (n = 3): Lap_{g4} = p^{-2} Lap_{g3}.
      const double lap4 = lap3[j] / (p * p);
      const double grad4 = grad3[j] / (p * p);
      out.R(i, j) = bc3.R(i, j) - 2.0 * (n - 1) * w * kpp / p -
                    (n - 1.0) * (n - 2.0) * w * w * kp * kp / (p * p) -
                    w * k * (2.0 + w * k) / (p * p) * bc3.Rhat(i, j) -
                    2.0 * (n - 1) * k / (p * p * p) * lap4 -
                    (n - 1.0) * (n - 4.0) * k * k / (p * p * p * p) * grad4 -
                    2.0 * n * w * kp / p * bc3.H(i, j);
      out.H(i, j) = bc3.H(i, j) + (n - 1) * w * kp / p;
    }
  }
  out.H_boundary = out.H.row(M - 1).transpose();

  if (round_fam) {
    Vector scale(M);
    for (int i = 0; i < M; ++i)
      scale[i] = sqr(rho(i, 0)) * g3.metric_scale()[i];
    out.band = WarpedBand::round_band(g3.dim(), t, std::move(scale),
                                      Matrix::Ones(M, 1));
  } else {
    Matrix a(M, N), c(M, N);
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < N; ++j) {
        const double w2 = sqr(rho(i, j));
        a(i, j) = w2 * g3.a()(i, j);
        c(i, j) = w2 * g3.c()(i, j);
      }
    out.band = WarpedBand::axisym_band(t, std::move(a), std::move(c),
                                       Matrix::Ones(M, N));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transition function and bending profile

double transition_ramp(double x) {
  if (x <= 1.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return smoothstep5(x - 1.0);
}

Vector transition_function(double r, double alpha, const Vector& s_grid) {
  if (!(r > 0.0)) throw PreconditionError("transition: r must be positive");
  if (!(alpha > 0.0))
    throw PreconditionError("transition: alpha must be positive");
  Vector u(s_grid.size());
  for (Eigen::Index i = 0; i < s_grid.size(); ++i)
    u[i] = alpha + (1.0 - alpha) * transition_ramp(s_grid[i] / r);
  return u;
}

BendingProfile bending_profile(const Vector& d_grid, double C1) {
  if (!(C1 > 0.0)) throw PreconditionError("bending profile: C1 > 0 required");
  if (d_grid.size() == 0 || d_grid.minCoeff() < 0.0)
    throw PreconditionError("bending profile: d >= 0 required");
  BendingProfile out;
  out.C1 = C1;
  out.beta = 2.0 * C1;
  const double a = out.alpha;
  if (out.beta * d_grid.maxCoeff() >= 0.5)
    throw PreconditionError(
        "bending profile: beta * d must stay below 1/2 (validity window)");
  out.d = d_grid;
  out.w = (1.0 - out.beta * d_grid.array()).pow(a) - 1.0;
  out.laplacian_bound =
      2.0 * a * C1 * C1 *
      (1.0 - out.beta * d_grid.array()).pow(a - 2.0) *
      (2.0 * a - 1.0 - out.beta * d_grid.array());
  out.normal_derivative_at_0 = a * out.beta;
  out.margin = -out.laplacian_bound.maxCoeff();
  return out;
}

}  // namespace fillin
