#pragma once

// Discretized sphere geometry: metric representations on S^{n-1}, the
// Laplace-Beltrami operator, scalar and mean curvature, quadrature, and a
// finite-difference curvature evaluator for warped bands over Sigma x I.

#include "fillin/common.hpp"

#include <memory>

namespace fillin {

inline constexpr int kDefaultProfileNodes = 401;
inline constexpr double kPoleRegularityTol = 1e-6;

/// A metric on S^{n-1}. Three representations are admitted:
///   Round    -- rho^2 * gamma_std, any n >= 2;
///   AxisymS2 -- n = 3, arc-length form dx^2 + b(x)^2 dphi^2 with b sampled
///               on a uniform grid over [0, pi];
///   Scaled   -- k * gamma_base with a non-Scaled base.
/// Values are immutable after construction and cheap to copy.
class SphereMetric {
 public:
  enum class Kind { Round, AxisymS2, Scaled };

  static SphereMetric round(int n, double radius);
  static SphereMetric axisym(Vector profile);
  static SphereMetric scaled(const SphereMetric& base, double factor);

  Kind kind() const { return kind_; }
  int dim() const { return n_; }

  /// Round radius of the underlying Round metric (Round or Scaled-of-Round).
  double radius() const;
  /// Profile samples of the underlying axisymmetric metric.
  const Vector& profile() const;
  /// Scale factor (1 unless Scaled).
  double factor() const { return factor_; }
  /// The metric with any Scaled wrapper removed.
  SphereMetric base() const;

  bool round_like() const;
  bool axisym_like() const;
  /// Effective radius sqrt(k)*rho of a round-like metric.
  double round_radius() const;

  /// Number of sample nodes a ScalarField on this metric must carry.
  int grid_size() const;
  double grid_step() const;
  Vector grid() const;

  /// Metric components a dx^2 + c(x) dphi^2 for axisym-like metrics
  /// (a is x-independent for every admitted representation).
  double component_a() const;
  Vector component_c() const;

 private:
  SphereMetric() = default;
  Kind kind_ = Kind::Round;
  int n_ = 3;
  double radius_ = 1.0;
  double factor_ = 1.0;
  std::shared_ptr<const Vector> profile_;
};

void require_aligned(const SphereMetric& metric, const ScalarField& field,
                     const char* op);
ScalarField constant_field(const SphereMetric& metric, double value);

/// Scalar curvature R_gamma sampled on the metric grid.
ScalarField scalar_curvature(const SphereMetric& metric);
double min_scalar_curvature(const SphereMetric& metric);

/// Laplace-Beltrami of `field`. Round metrics admit constant fields only.
ScalarField laplace_beltrami(const SphereMetric& metric,
                             const ScalarField& field);

/// Integral of `field` against the metric area measure.
double integrate(const SphereMetric& metric, const ScalarField& field);
double area(const SphereMetric& metric);

struct Lambda1Result {
  double lambda = 0.0;
  ScalarField eigenfunction;  // positive, normalized to max = 1
  double residual = 0.0;
  int iterations = 0;
};

/// First eigenpair of -Laplacian + R/2 on the metric, by shifted inverse
/// power iteration on the discretized operator.
Lambda1Result lambda1(const SphereMetric& metric);

/// Scalar curvature after the conformal change g2 = u^{4/(n-2)} g1:
/// u^{-(n+2)/(n-2)} (R u - c_n Lap u), with c_n = 4(n-1)/(n-2).
ScalarField conformal_scalar(const ScalarField& R, const ScalarField& u,
                             const ScalarField& lap_u, int n);

/// Boundary mean curvature after the same change with u = 1 on the boundary:
/// H + (c_n/2) du/dnu.
ScalarField conformal_mean(const ScalarField& H,
                           const ScalarField& normal_derivative, int n);

inline double conformal_constant(int n) {
  if (n < 3) throw PreconditionError("conformal constant requires n >= 3");
  return 4.0 * (n - 1) / static_cast<double>(n - 2);
}

// ---------------------------------------------------------------------------
// Warped bands over Sigma x I

/// Discretized band g = u(s,.)^2 ds^2 + h_s on Sigma^{n-1} x [s_lo, s_hi],
/// sampled on a strictly increasing s-grid with identical slice grids. Two
/// slice families:
///   Round  -- h_s = K(s) * gamma_std (any n);
///   Axisym -- h_s = a(s,x) dx^2 + c(s,x) dphi^2 (n = 3).
class WarpedBand {
 public:
  enum class Family { Round, Axisym };

  static WarpedBand round_band(int n, std::vector<double> s,
                               Vector metric_scale, Matrix lapse);
  static WarpedBand axisym_band(std::vector<double> s, Matrix a, Matrix c,
                                Matrix lapse);

  Family family() const { return family_; }
  int dim() const { return n_; }
  int slices() const { return static_cast<int>(s_.size()); }
  int grid_size() const { return static_cast<int>(lapse_.cols()); }
  const std::vector<double>& s_grid() const { return s_; }
  double x_step() const;

  const Matrix& a() const { return a_; }
  const Matrix& c() const { return c_; }
  const Matrix& lapse() const { return lapse_; }
  const Vector& metric_scale() const { return scale_; }

 private:
  Family family_ = Family::Round;
  int n_ = 3;
  std::vector<double> s_;
  Vector scale_;      // Round family
  Matrix a_, c_;      // Axisym family, slices x grid
  Matrix lapse_;      // slices x grid (grid = 1 for Round)
};

struct BandCurvature {
  Matrix R;     // scalar curvature of the band, slices x grid
  Matrix H;     // slice mean curvature wrt the unit +s normal
  Matrix Rhat;  // intrinsic slice scalar curvature
  std::vector<uint8_t> extrapolated;  // endpoint rows of R are copies
};

/// Scalar curvature of the band from centered differences in s, the slice
/// curvature, and the radial curvature identity
///   R = Rhat - H^2 - |A|^2 - 2 u^{-1} dH/ds - 2 u^{-1} Lap_h u,
/// with A = (1/2u) d(h_s)/ds and H = tr_h A. The lapse-Laplacian term
/// vanishes for slice-constant lapses.
BandCurvature fd_band_curvature(const WarpedBand& band);

/// Mean curvature of the first/last slice wrt the +s unit normal, one-sided.
Vector boundary_mean_curvature(const WarpedBand& band, bool outer);

struct BmnReport {
  double max_metric_discrepancy = 0.0;
  double min_mean_curvature_gap = 0.0;
  double curvature_floor = 0.0;
  bool boundary_match = false;
  bool mean_curvature_dominates = false;
  bool pass = false;
};

/// Checks the gluing hypotheses for a pair of bands sharing the outer
/// boundary slice: boundary metrics agree (< 1e-10) and H_g - H_gtilde > 0
/// pointwise. Also reports min(R_g, R_gtilde) over the overlap.
BmnReport check_bmn_hypotheses(const WarpedBand& g, const WarpedBand& g_tilde);

// ---------------------------------------------------------------------------
// Axisym slice helpers shared by the band machinery (uniform x on [0, pi]).

/// Scalar curvature of a slice a(x) dx^2 + c(x) dphi^2; poles by one-sided
/// limits (quadratic extrapolation from the first interior nodes).
Vector axisym_slice_curvature(const Vector& a, const Vector& c, double h);

/// Conservative-form Laplacian of u on the slice; ghost-node pole rows.
Vector axisym_slice_laplacian(const Vector& a, const Vector& c,
                              const Vector& u, double h);

/// Tridiagonal rows of the slice Laplacian (lower/diag/upper, sizes N-1/N/N-1).
void axisym_slice_laplacian_operator(const Vector& a, const Vector& c,
                                     double h, Vector& lower, Vector& diag,
                                     Vector& upper);

/// Area integral of f against the slice measure sqrt(a c) dx dphi.
double axisym_slice_integral(const Vector& a, const Vector& c, const Vector& f,
                             double h);

}  // namespace fillin
