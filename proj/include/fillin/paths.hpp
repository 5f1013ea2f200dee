#pragma once

// One-parameter families of sphere metrics on [0,1]: convex-combination
// paths, mollification, flattening reparametrizations, and derivative norm
// reports. Paths are immutable values with shared internal storage.

#include "fillin/manifold.hpp"

#include <memory>

namespace fillin {

inline constexpr int kDefaultPathNodes = 101;

struct PathNorms {
  double sup_d1 = 0.0;  // sup_t ||gamma'_t||_{gamma_t}
  double sup_d2 = 0.0;  // sup_t ||gamma''_t||_{gamma_t}
  double sup_R = 0.0;   // sup_t max_x |R_{gamma_t}|
};

class MetricPath {
 public:
  enum class Family { Round, Axisym };

  /// Components of a slice and its first two t-derivatives. The slice metric
  /// is a dx^2 + c(x) dphi^2 for the axisym family and a * gamma_std for the
  /// round family (c empty).
  struct SliceEval {
    double a = 0.0, a_t = 0.0, a_tt = 0.0;
    Vector c, c_t, c_tt;
  };

  static MetricPath from_samples(const std::vector<SphereMetric>& samples,
                                 std::optional<int> corner_index = std::nullopt);
  static MetricPath constant(const SphereMetric& metric,
                             int t_nodes = kDefaultPathNodes);

  Family family() const;
  int dim() const;
  int t_nodes() const;
  int grid_size() const;  // x-nodes of axisym slices, 1 for round
  double t(int i) const;
  SphereMetric sample(int i) const;
  SliceEval eval(double t) const;

  bool constant_near_0() const;  // verified on [0, 1/20] within 1e-12
  bool constant_near_1() const;  // verified on [5/6, 1] within 1e-12
  bool psc() const;              // min slice scalar curvature > 0
  double min_scalar() const;
  std::optional<int> corner_index() const;
  /// Largest one-sided t-derivative mismatch at the mollification junctions
  /// (0 for paths that were never mollified).
  double junction_c1_defect() const;

  PathNorms norms() const;

 private:
  friend MetricPath mollify(const MetricPath&, double);
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// gamma_t = (1 - 3t/2) a + (3t/2) b for t <= 2/3, constant b afterwards.
/// The combination acts on metric tensors (profiles enter squared).
MetricPath convex_path(const SphereMetric& a, const SphereMetric& b,
                       int t_nodes = kDefaultPathNodes);

/// Convolution with an even unit-mass bump kernel of width sigma on the
/// window [1/2, 5/6]; the path is unchanged elsewhere. 0 < sigma <= 1/6.
MetricPath mollify(const MetricPath& path, double sigma);

/// Reparametrizes a path given on [0,T] (stored normalized) by
/// c(t) = (cbrt(6T)/2) t^2 - t^3/3, so the right-endpoint derivative
/// vanishes. The result is returned normalized on [0,1].
MetricPath flatten_reparametrize(const MetricPath& path, double T);

PathNorms path_norms(const MetricPath& path);

// Named generators ----------------------------------------------------------

/// Axisymmetric profile sin(x) (1 + (e-1) sin^2 x); e = 1 is the round sphere.
Vector eccentric_profile(double e, int nodes = kDefaultProfileNodes);

/// Profile sin(x) (1 - beta sin^2 x); moderate beta gives a sign-changing
/// scalar curvature (negative near the equator).
Vector dumbbell_profile(double beta, int nodes = kDefaultProfileNodes);

/// Round path rho(t), reaching rho1 at t = 2/3 and constant afterwards.
MetricPath round_radius_path(int n, double rho0, double rho1,
                             int t_nodes = kDefaultPathNodes);

/// Round -> eccentric -> round, constant near both ends; ends at gamma_std.
MetricPath eccentric_bump_path(double e_max, int t_nodes = kDefaultPathNodes,
                               int profile_nodes = kDefaultProfileNodes);

/// Round -> eccentric, constant near both ends.
MetricPath to_eccentric_path(double e_max, int t_nodes = kDefaultPathNodes,
                             int profile_nodes = kDefaultProfileNodes);

}  // namespace fillin
