#pragma once

// Asymptotically flat base metrics built from metric paths, the
// quasi-spherical lapse flow that makes u^2 ds^2 + s^2 gamma_s scalar-flat,
// total-mean-curvature monitoring, ADM mass evaluation, and the mass-bound /
// threshold calculus.

#include "fillin/paths.hpp"

#include <memory>

namespace fillin {

/// Bartnik data: a sphere metric together with a prescribed mean-curvature
/// field for a prospective boundary.
struct BartnikData {
  int n = 3;
  SphereMetric metric = SphereMetric::round(3, 1.0);
  ScalarField H;  // aligned with the metric grid

  static BartnikData make(int n, SphereMetric metric, ScalarField H);
  bool constant_H() const;
};

struct BaseOptions {
  std::optional<double> s_max;  // default: max(10 s0, 20)
  double delta_init = 1.0;
  int max_halvings = 60;
  int measure_nodes = 1501;  // log-spaced deviation measurement grid
};

/// The base metric gbar = ds^2 + s^2 gamma_{t(s)} on S^{n-1} x [1, s_max],
/// with t(s) = (2/pi) arctan(delta ln s). delta is chosen by halving until
/// the measured deviation s * ||Abar_s - gbar_s / s|| stays below the target.
/// Slices with s >= s0 = exp(tan(5 pi/12)/delta) are exactly round of radius
/// s. All slice data is evaluated through the C2 path interpolant, so the
/// stored coefficients carry no s-differencing error.
class BaseAF {
 public:
  struct SliceCoeffs {
    double s = 0.0;
    Vector a;            // slice gamma_xx (size 1 for round families)
    Vector c;            // slice gamma_phiphi (empty for round families)
    Vector Hbar;         // mean curvature of the slice in gbar (+s normal)
    Vector Rhat;         // intrinsic slice scalar curvature
    Vector Rbar;         // ambient scalar curvature of gbar on the slice
    double deviation = 0.0;  // s * ||Abar - gbar/s||, sup over the slice
  };

  static BaseAF build(const MetricPath& path, double eps_target,
                      const BaseOptions& opt = {});

  int dim() const;
  bool round_family() const;
  int grid_size() const;
  double delta() const;
  double s0() const;
  double eps_target() const;
  double eps_achieved() const;
  double alpha() const;  // (n-2)(1-eps_achieved)/2
  bool euclidean() const;
  bool truncated() const;
  double s_max() const;
  const std::vector<double>& s_grid() const;
  const SliceCoeffs& slice(int i) const;
  int slice_count() const;
  std::optional<int> corner_slice() const;
  const MetricPath& path() const;

  void eval(double s, SliceCoeffs& out) const;
  double measure_peak_deviation() const;

  /// Quadrature of a field against the slice area measure.
  double slice_integral(int i, const Vector& f) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

struct FlowOptions {
  double stop_s = std::numeric_limits<double>::infinity();
  double weighted_tol = 1e-11;  // local step error x max(1, s^{n-2})
  double newton_tol = 0.0;      // 0: rounding-limited Newton residuals
  int max_newton = 40;
  std::uint64_t seed = 0;
};

/// Solution of  Hbar_s du/ds = u^2 Lap_{gbar_s} u + (u - u^3) Rhat/2 - Rbar u/2
/// advanced by adaptive implicit (Crank-Nicolson) steps, each solved by a
/// damped Newton iteration with positivity enforced by step halving.
class FlowSolution {
 public:
  const BaseAF& base() const;
  int solved_slices() const;
  double s_at(int i) const;
  Vector u_at(int i) const;
  const Vector& u1() const;
  double alpha() const;

  /// Total mean curvature I(s) = int Hbar_s u^{-1} dmu at the nearest solved
  /// slice.
  double total_mean_curvature(double s) const;
  const std::vector<double>& mean_curvature_series() const;

  /// I(s_i) >= s_i^alpha I(1) (1 - 1e-6) on every solved slice.
  bool monotonicity_certified() const;
  double monotonicity_margin() const;

  /// The solved band g = u^2 ds^2 + s^2 gamma_s for curvature verification.
  WarpedBand band() const;

  double min_u() const;

 private:
  friend FlowSolution run_flow(const BaseAF&, const Vector&,
                               const FlowOptions&);
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

FlowSolution run_flow(const BaseAF& base, const Vector& u1,
                      const FlowOptions& opt = {});

double total_mean_curvature(const FlowSolution& flow, double s);

/// ADM mass of the solved flow: coordinate-sphere flux at the three report
/// spheres {s_max, s_max/2, s_max/4} Richardson-extrapolated in 1/s.
/// Requires the exact Euclidean region (flow solved to s_max >= 10 s0).
double adm_mass(const FlowSolution& flow);

/// Flux-integral mass evaluated at a single solved slice.
double flux_mass_at(const FlowSolution& flow, int slice);

/// Radial mass aspect (1/2) s^{n-2} (1 - u^{-2}) at a solved slice (round
/// slice families).
double radial_mass_at(const FlowSolution& flow, int slice);

enum class FillinVerdict { NoNNSCFillIn, Inconclusive };

struct MassReport {
  double s0 = 1.0;
  double epsilon_achieved = 0.0;
  double alpha = 0.0;
  double h0 = 0.0;
  double bracket = 0.0;        // n(n-1) w_n s0^{n-2} - s0^alpha int Hbar_1 u1^{-1}
  double eq_mass_bound = 0.0;  // C(n) * bracket
  double brown_york_bound = 0.0;
  std::optional<double> adm_estimate;
  std::optional<double> H0_constant;  // smallest constant H with bracket < 0
  FillinVerdict verdict = FillinVerdict::Inconclusive;
};

/// Mass normalization constant 1 / (2 (n-1) area(S^{n-1})).
double mass_constant(int n);

/// h0 = n (n-1) w_n s0^{n - alpha(n,eps) - 2}, w_n the unit-ball volume.
double h0_threshold(int n, double eps, double s0);

/// The mass upper-bound bracket for initial lapse u1 (Brown-York slice bound
/// computed by flowing to s0). Verdict NoNNSCFillIn iff the bracket is
/// negative.
MassReport mass_upper_bound(const BaseAF& base, const Vector& u1);

/// Builds the base for `path`, sets u1 = Hbar_1 / H, and evaluates the mass
/// upper bound. For constant H the smallest constant H0 with a negative
/// bracket is reported as well.
MassReport nnsc_fillin_test(const BartnikData& data, const MetricPath& path,
                            double eps_target, const BaseOptions& opt = {});

}  // namespace fillin
