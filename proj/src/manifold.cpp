#include "fillin/manifold.hpp"

#include <algorithm>
#include <cmath>

namespace fillin {

namespace {

void check_profile(const Vector& b) {
  const int n = static_cast<int>(b.size());
  if (n < 9) throw PreconditionError("axisym profile: need >= 9 nodes");
  const double h = M_PI / (n - 1);
  const double scale = b.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw PreconditionError("degenerate metric: b == 0");
  if (std::abs(b[0]) > 1e-9 * scale || std::abs(b[n - 1]) > 1e-9 * scale)
    throw PreconditionError("degenerate metric: b must vanish at the poles");
  for (int i = 1; i + 1 < n; ++i)
    if (!(b[i] > 0.0))
      throw PreconditionError("degenerate metric: b must be positive on (0, pi)");
  const double bp0 = d1_left4(b[0], b[1], b[2], b[3], b[4], h);
  const double bp1 =
      -d1_left4(b[n - 1], b[n - 2], b[n - 3], b[n - 4], b[n - 5], h);
  if (std::abs(bp0 - 1.0) > kPoleRegularityTol ||
      std::abs(bp1 + 1.0) > kPoleRegularityTol)
    throw PreconditionError(
        "degenerate metric: pole regularity |b'(0)-1|, |b'(pi)+1| exceeds 1e-6");
}

/// Quadratic extrapolation to a pole from the three nearest interior values.
double pole_extrapolate(double f1, double f2, double f3) {
  return 3.0 * f1 - 3.0 * f2 + f3;
}

}  // namespace

// ---------------------------------------------------------------------------
// SphereMetric

SphereMetric SphereMetric::round(int n, double radius) {
  if (n < 2) throw PreconditionError("round metric: n >= 2 required");
  if (!(radius > 0.0)) throw PreconditionError("round metric: radius > 0 required");
  SphereMetric m;
  m.kind_ = Kind::Round;
  m.n_ = n;
  m.radius_ = radius;
  return m;
}

SphereMetric SphereMetric::axisym(Vector profile) {
  check_profile(profile);
  SphereMetric m;
  m.kind_ = Kind::AxisymS2;
  m.n_ = 3;
  m.profile_ = std::make_shared<const Vector>(std::move(profile));
  return m;
}

SphereMetric SphereMetric::scaled(const SphereMetric& base, double factor) {
  if (base.kind_ == Kind::Scaled)
    throw PreconditionError("Scaled metric: base must not itself be Scaled");
  if (!(factor > 0.0)) throw PreconditionError("Scaled metric: factor > 0 required");
  SphereMetric m = base;
  m.kind_ = Kind::Scaled;
  m.factor_ = factor;
  return m;
}

double SphereMetric::radius() const {
  if (!round_like()) throw PreconditionError("radius(): not a round-like metric");
  return radius_;
}

const Vector& SphereMetric::profile() const {
  if (!axisym_like())
    throw PreconditionError("profile(): not an axisymmetric metric");
  return *profile_;
}

SphereMetric SphereMetric::base() const {
  SphereMetric m = *this;
  if (kind_ == Kind::Scaled) {
    m.kind_ = profile_ ? Kind::AxisymS2 : Kind::Round;
    m.factor_ = 1.0;
  }
  return m;
}

bool SphereMetric::round_like() const { return profile_ == nullptr; }
bool SphereMetric::axisym_like() const { return profile_ != nullptr; }

double SphereMetric::round_radius() const {
  return std::sqrt(factor_) * radius();
}

int SphereMetric::grid_size() const {
  return axisym_like() ? static_cast<int>(profile_->size()) : 1;
}

double SphereMetric::grid_step() const {
  if (!axisym_like()) throw PreconditionError("grid_step(): round metric has no grid");
  return M_PI / (grid_size() - 1);
}

Vector SphereMetric::grid() const {
  return Vector::LinSpaced(grid_size(), 0.0, M_PI);
}

double SphereMetric::component_a() const {
  if (axisym_like()) return factor_;
  if (n_ != 3)
    throw PreconditionError("component_a(): round components only exposed for n = 3");
  return factor_ * radius_ * radius_;
}

Vector SphereMetric::component_c() const {
  if (axisym_like()) return factor_ * profile_->array().square();
  if (n_ != 3)
    throw PreconditionError("component_c(): round components only exposed for n = 3");
  const Vector x = Vector::LinSpaced(kDefaultProfileNodes, 0.0, M_PI);
  return component_a() * x.array().sin().square();
}

void require_aligned(const SphereMetric& metric, const ScalarField& field,
                     const char* op) {
  if (field.size() != metric.grid_size())
    throw AlignmentError(std::string(op) + ": field grid does not match metric grid");
}

ScalarField constant_field(const SphereMetric& metric, double value) {
  return Vector::Constant(metric.grid_size(), value);
}

// ---------------------------------------------------------------------------
// Curvature, Laplacian, quadrature

ScalarField scalar_curvature(const SphereMetric& metric) {
  if (metric.round_like()) {
    const int n = metric.dim();
    const double rho = metric.round_radius();
    return Vector::Constant(1, (n - 1) * (n - 2) / (rho * rho));
  }
  const Vector& b = metric.profile();
  const int N = static_cast<int>(b.size());
  const double h = M_PI / (N - 1);
  // Fourth-order stencils keep the discretized-vs-closed-form error at the
  // default resolution below the 1e-6 target.
  auto bpp_at = [&](int i) {
    if (i >= 2 && i + 2 < N)
      return (-b[i - 2] + 16.0 * b[i - 1] - 30.0 * b[i] + 16.0 * b[i + 1] -
              b[i + 2]) /
             (12.0 * h * h);
    if (i == 1)
      return (10.0 * b[0] - 15.0 * b[1] - 4.0 * b[2] + 14.0 * b[3] -
              6.0 * b[4] + b[5]) /
             (12.0 * h * h);
    // i == N - 2, mirrored stencil
    return (10.0 * b[N - 1] - 15.0 * b[N - 2] - 4.0 * b[N - 3] +
            14.0 * b[N - 4] - 6.0 * b[N - 5] + b[N - 6]) /
           (12.0 * h * h);
  };
  Vector R(N);
  for (int i = 1; i + 1 < N; ++i) R[i] = -2.0 * bpp_at(i) / b[i];
  R[0] = pole_extrapolate(R[1], R[2], R[3]);
  R[N - 1] = pole_extrapolate(R[N - 2], R[N - 3], R[N - 4]);
  return R / metric.factor();
}

double min_scalar_curvature(const SphereMetric& metric) {
  return scalar_curvature(metric).minCoeff();
}

ScalarField laplace_beltrami(const SphereMetric& metric,
                             const ScalarField& field) {
  require_aligned(metric, field, "laplace_beltrami");
  if (metric.round_like()) return Vector::Zero(1);
  const Vector a = Vector::Constant(field.size(), metric.component_a());
  const Vector c = metric.component_c();
  return axisym_slice_laplacian(a, c, field, metric.grid_step());
}

double integrate(const SphereMetric& metric, const ScalarField& field) {
  require_aligned(metric, field, "integrate");
  if (metric.round_like()) {
    const double rho = metric.round_radius();
    return field[0] * unit_sphere_area(metric.dim() - 1) *
           std::pow(rho, metric.dim() - 1);
  }
  const Vector a = Vector::Constant(field.size(), metric.component_a());
  return axisym_slice_integral(a, metric.component_c(), field,
                               metric.grid_step());
}

double area(const SphereMetric& metric) {
  return integrate(metric, constant_field(metric, 1.0));
}

Lambda1Result lambda1(const SphereMetric& metric) {
  Lambda1Result out;
  if (metric.round_like()) {
    const int n = metric.dim();
    const double rho = metric.round_radius();
    out.lambda = (n - 1) * (n - 2) / (2.0 * rho * rho);
    out.eigenfunction = Vector::Constant(1, 1.0);
    return out;
  }
  const int N = metric.grid_size();
  const double h = metric.grid_step();
  const Vector a = Vector::Constant(N, metric.component_a());
  const Vector c = metric.component_c();
  const Vector R = scalar_curvature(metric);

  // L = -Lap + R/2 as tridiagonal rows.
  Vector lo, di, up;
  axisym_slice_laplacian_operator(a, c, h, lo, di, up);
  lo = -lo;
  up = -up;
  di = -di + 0.5 * R;

  auto apply = [&](const Vector& v) {
    Vector w(N);
    w[0] = di[0] * v[0] + up[0] * v[1];
    for (int i = 1; i + 1 < N; ++i)
      w[i] = lo[i - 1] * v[i - 1] + di[i] * v[i] + up[i] * v[i + 1];
    w[N - 1] = lo[N - 2] * v[N - 2] + di[N - 1] * v[N - 1];
    return w;
  };

  // The quadratic form gives lambda1 >= min R/2, so this shift is safe.
  const double sigma = 0.5 * R.minCoeff() - 1.0;
  const Vector shifted_diag = di.array() - sigma;

  Vector v = Vector::Ones(N);
  double lambda = 0.0;
  const int max_iter = 500;
  for (int it = 1; it <= max_iter; ++it) {
    Vector w = tridiag_solve(lo, shifted_diag, up, v);
    lambda = sigma + v.dot(v) / v.dot(w);
    v = w / w.cwiseAbs().maxCoeff();
    const double residual = (apply(v) - lambda * v).cwiseAbs().maxCoeff() /
                            v.cwiseAbs().maxCoeff();
    if (residual <= 1e-10 || (it > 8 && residual <= 1e-9)) {
      out.iterations = it;
      break;
    }
    if (it == max_iter)
      throw NumericalError(
          "lambda1: inverse iteration did not converge, residual = " +
          format_g17(residual));
  }
  if (v[N / 2] < 0.0) v = -v;
  v /= v.maxCoeff();
  out.lambda = lambda;
  out.eigenfunction = v;
  out.residual = (apply(v) - lambda * v).cwiseAbs().maxCoeff();
  if (out.residual > 1e-8)
    throw NumericalError("lambda1: residual " + format_g17(out.residual) +
                         " exceeds 1e-8");
  return out;
}

ScalarField conformal_scalar(const ScalarField& R, const ScalarField& u,
                             const ScalarField& lap_u, int n) {
  if (R.size() != u.size() || lap_u.size() != u.size())
    throw AlignmentError("conformal_scalar: mismatched field grids");
  if (u.minCoeff() <= 0.0)
    throw PreconditionError("conformal_scalar: u must be positive");
  const double cn = conformal_constant(n);
  const double p = -(n + 2.0) / (n - 2.0);
  return u.array().pow(p) * (R.array() * u.array() - cn * lap_u.array());
}

ScalarField conformal_mean(const ScalarField& H,
                           const ScalarField& normal_derivative, int n) {
  if (H.size() != normal_derivative.size())
    throw AlignmentError("conformal_mean: mismatched field grids");
  return H + 0.5 * conformal_constant(n) * normal_derivative;
}

// ---------------------------------------------------------------------------
// Axisym slice helpers

Vector axisym_slice_curvature(const Vector& a, const Vector& c, double h) {
  const int N = static_cast<int>(a.size());
  Vector w(N);
  for (int i = 1; i + 1 < N; ++i) {
    const double cp = (c[i + 1] - c[i - 1]) / (2.0 * h);
    w[i] = cp / std::sqrt(a[i] * c[i]);
  }
  // Nodes adjacent to a pole would mix the exact limit of w with the h^2
  // bias of its discrete neighbors, which the 1/sqrt(c) factor amplifies to
  // O(1); evaluate K only where the stencil is uniformly biased and fill the
  // pole-side values by quadratic extrapolation.
  Vector K(N);
  for (int i = 2; i + 2 < N; ++i) {
    const double wp = (w[i + 1] - w[i - 1]) / (2.0 * h);
    K[i] = -wp / (2.0 * std::sqrt(a[i] * c[i]));
  }
  K[1] = pole_extrapolate(K[2], K[3], K[4]);
  K[0] = 6.0 * K[2] - 8.0 * K[3] + 3.0 * K[4];
  K[N - 2] = pole_extrapolate(K[N - 3], K[N - 4], K[N - 5]);
  K[N - 1] = 6.0 * K[N - 3] - 8.0 * K[N - 4] + 3.0 * K[N - 5];
  return 2.0 * K;
}

void axisym_slice_laplacian_operator(const Vector& a, const Vector& c,
                                     double h, Vector& lower, Vector& diag,
                                     Vector& upper) {
  const int N = static_cast<int>(a.size());
  lower = Vector::Zero(N - 1);
  diag = Vector::Zero(N);
  upper = Vector::Zero(N - 1);
  auto flux_coeff = [&](int i) {  // sqrt(c/a) averaged at the midpoint i+1/2
    return 0.5 * (std::sqrt(c[i] / a[i]) + std::sqrt(c[i + 1] / a[i + 1]));
  };
  for (int i = 1; i + 1 < N; ++i) {
    const double wm = flux_coeff(i - 1);
    const double wp = flux_coeff(i);
    const double inv = 1.0 / (h * h * std::sqrt(a[i] * c[i]));
    lower[i - 1] = wm * inv;
    upper[i] = wp * inv;
    diag[i] = -(wm + wp) * inv;
  }
  // Ghost-node pole rows from u'(pole) = 0: Lap u -> 4 (u1 - u0) / (h^2 a).
  const double p0 = 4.0 / (h * h * a[0]);
  diag[0] = -p0;
  upper[0] = p0;
  const double pN = 4.0 / (h * h * a[N - 1]);
  diag[N - 1] = -pN;
  lower[N - 2] = pN;
}

Vector axisym_slice_laplacian(const Vector& a, const Vector& c,
                              const Vector& u, double h) {
  const int N = static_cast<int>(a.size());
  Vector lo, di, up;
  axisym_slice_laplacian_operator(a, c, h, lo, di, up);
  Vector w(N);
  w[0] = di[0] * u[0] + up[0] * u[1];
  for (int i = 1; i + 1 < N; ++i)
    w[i] = lo[i - 1] * u[i - 1] + di[i] * u[i] + up[i] * u[i + 1];
  w[N - 1] = lo[N - 2] * u[N - 2] + di[N - 1] * u[N - 1];
  return w;
}

double axisym_slice_integral(const Vector& a, const Vector& c, const Vector& f,
                             double h) {
  const Vector integrand =
      2.0 * M_PI * (a.array() * c.array()).sqrt() * f.array();
  return integrate_uniform(integrand, h);
}

// ---------------------------------------------------------------------------
// WarpedBand

namespace {

void check_band_common(const std::vector<double>& s, const Matrix& lapse) {
  if (s.size() < 4) throw PreconditionError("warped band: need >= 4 slices");
  if (static_cast<size_t>(lapse.rows()) != s.size())
    throw AlignmentError("warped band: lapse rows must match slice count");
  for (size_t i = 1; i < s.size(); ++i)
    if (!(s[i] > s[i - 1]))
      throw PreconditionError("warped band: s-grid must be strictly increasing");
  if (lapse.minCoeff() <= 0.0)
    throw PreconditionError("warped band: lapse must be positive");
}

}  // namespace

WarpedBand WarpedBand::round_band(int n, std::vector<double> s,
                                  Vector metric_scale, Matrix lapse) {
  check_band_common(s, lapse);
  if (n < 2) throw PreconditionError("warped band: n >= 2 required");
  if (metric_scale.size() != static_cast<Eigen::Index>(s.size()))
    throw AlignmentError("warped band: metric_scale size mismatch");
  if (lapse.cols() != 1)
    throw AlignmentError("warped band: round slices carry one lapse value");
  if (metric_scale.minCoeff() <= 0.0)
    throw PreconditionError("warped band: slice metric must be positive");
  WarpedBand b;
  b.family_ = Family::Round;
  b.n_ = n;
  b.s_ = std::move(s);
  b.scale_ = std::move(metric_scale);
  b.lapse_ = std::move(lapse);
  return b;
}

WarpedBand WarpedBand::axisym_band(std::vector<double> s, Matrix a, Matrix c,
                                   Matrix lapse) {
  check_band_common(s, lapse);
  const auto rows = static_cast<Eigen::Index>(s.size());
  if (a.rows() != rows || c.rows() != rows || a.cols() != c.cols() ||
      lapse.cols() != a.cols())
    throw AlignmentError("warped band: component shapes must agree");
  if (a.cols() < 9) throw PreconditionError("warped band: need >= 9 x-nodes");
  if (a.minCoeff() <= 0.0)
    throw PreconditionError("warped band: gamma_xx must be positive");
  WarpedBand b;
  b.family_ = Family::Axisym;
  b.n_ = 3;
  b.s_ = std::move(s);
  b.a_ = std::move(a);
  b.c_ = std::move(c);
  b.lapse_ = std::move(lapse);
  return b;
}

double WarpedBand::x_step() const {
  if (family_ != Family::Axisym)
    throw PreconditionError("x_step(): round band has no x-grid");
  return M_PI / (grid_size() - 1);
}

namespace {

// Mean curvature H = tr_h A / u at every slice; one-sided at the ends.
Matrix band_mean_curvature_all(const WarpedBand& band) {
  const int M = band.slices();
  const auto& s = band.s_grid();
  auto ds = [&](int i, auto&& f) {  // derivative of a per-slice quantity
    if (i == 0)
      return d1_left(f(0), f(1), f(2), s[1] - s[0], s[2] - s[1]);
    if (i == M - 1)
      return d1_right(f(M - 3), f(M - 2), f(M - 1), s[M - 2] - s[M - 3],
                      s[M - 1] - s[M - 2]);
    return d1_center(f(i - 1), f(i), f(i + 1), s[i] - s[i - 1],
                     s[i + 1] - s[i]);
  };
  if (band.family() == WarpedBand::Family::Round) {
    Matrix H(M, 1);
    for (int i = 0; i < M; ++i) {
      const double Kp = ds(i, [&](int j) { return band.metric_scale()[j]; });
      H(i, 0) = (band.dim() - 1) * Kp /
                (2.0 * band.lapse()(i, 0) * band.metric_scale()[i]);
    }
    return H;
  }
  const int N = band.grid_size();
  Matrix H(M, N);
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      const double ap = ds(i, [&](int k) { return band.a()(k, j); });
      const double Axx = ap / (2.0 * band.lapse()(i, j) * band.a()(i, j));
      double Aff;
      if (j == 0 || j == N - 1) {
        Aff = Axx;  // pole limit: c ~ a x^2
      } else {
        const double cp = ds(i, [&](int k) { return band.c()(k, j); });
        Aff = cp / (2.0 * band.lapse()(i, j) * band.c()(i, j));
      }
      H(i, j) = Axx + Aff;
    }
  }
  return H;
}

}  // namespace

BandCurvature fd_band_curvature(const WarpedBand& band) {
  const int M = band.slices();
  const auto& s = band.s_grid();
  BandCurvature out;
  out.H = band_mean_curvature_all(band);
  out.extrapolated.assign(M, 0);
  out.extrapolated.front() = 1;
  out.extrapolated.back() = 1;

  // dH/ds at interior slices; next to the band edges the stencil avoids the
  // one-sided boundary H values (their truncation pattern differs from the
  // centered one and would pollute the derivative).
  auto dH_ds = [&](const Matrix& H, int i, int j) {
    if (i == 1 && M >= 5)
      return d1_left(H(1, j), H(2, j), H(3, j), s[2] - s[1], s[3] - s[2]);
    if (i == M - 2 && M >= 5)
      return d1_right(H(M - 4, j), H(M - 3, j), H(M - 2, j),
                      s[M - 3] - s[M - 4], s[M - 2] - s[M - 3]);
    return d1_center(H(i - 1, j), H(i, j), H(i + 1, j), s[i] - s[i - 1],
                     s[i + 1] - s[i]);
  };

  if (band.family() == WarpedBand::Family::Round) {
    const int n = band.dim();
    out.R = Matrix::Zero(M, 1);
    out.Rhat = Matrix::Zero(M, 1);
    for (int i = 0; i < M; ++i)
      out.Rhat(i, 0) = (n - 1) * (n - 2) / band.metric_scale()[i];
    for (int i = 1; i + 1 < M; ++i) {
      const double u = band.lapse()(i, 0);
      const double Hp = dH_ds(out.H, i, 0);
      const double Hi = out.H(i, 0);
      const double A2 = Hi * Hi / (n - 1.0);
      out.R(i, 0) = out.Rhat(i, 0) - Hi * Hi - A2 - 2.0 / u * Hp;
    }
    out.R.row(0) = out.R.row(1);
    out.R.row(M - 1) = out.R.row(M - 2);
    return out;
  }

  const int N = band.grid_size();
  const double hx = band.x_step();
  out.R = Matrix::Zero(M, N);
  out.Rhat = Matrix::Zero(M, N);
  for (int i = 0; i < M; ++i)
    out.Rhat.row(i) = axisym_slice_curvature(band.a().row(i).transpose(),
                                             band.c().row(i).transpose(), hx)
                          .transpose();
  for (int i = 1; i + 1 < M; ++i) {
    const double hm = s[i] - s[i - 1];
    const double hp = s[i + 1] - s[i];
    const Vector a = band.a().row(i).transpose();
    const Vector c = band.c().row(i).transpose();
    const Vector u = band.lapse().row(i).transpose();
    const Vector lap_u = axisym_slice_laplacian(a, c, u, hx);
    for (int j = 0; j < N; ++j) {
      const double uij = u[j];
      const double ap = d1_center(band.a()(i - 1, j), band.a()(i, j),
                                  band.a()(i + 1, j), hm, hp);
      const double Axx = ap / (2.0 * uij * a[j]);
      double Aff;
      if (j == 0 || j == N - 1) {
        Aff = Axx;
      } else {
        const double cp = d1_center(band.c()(i - 1, j), band.c()(i, j),
                                    band.c()(i + 1, j), hm, hp);
        Aff = cp / (2.0 * uij * c[j]);
      }
      const double Hij = out.H(i, j);
      const double A2 = Axx * Axx + Aff * Aff;
      const double Hp = dH_ds(out.H, i, j);
      out.R(i, j) = out.Rhat(i, j) - Hij * Hij - A2 - 2.0 / uij * Hp -
                    2.0 / uij * lap_u[j];
    }
  }
  out.R.row(0) = out.R.row(1);
  out.R.row(M - 1) = out.R.row(M - 2);
  return out;
}

Vector boundary_mean_curvature(const WarpedBand& band, bool outer) {
  const Matrix H = band_mean_curvature_all(band);
  const int row = outer ? band.slices() - 1 : 0;
  return H.row(row).transpose();
}

BmnReport check_bmn_hypotheses(const WarpedBand& g, const WarpedBand& gt) {
  if (g.family() != gt.family() || g.dim() != gt.dim() ||
      g.slices() != gt.slices() || g.grid_size() != gt.grid_size())
    throw AlignmentError("check_bmn_hypotheses: bands must share shape");
  for (int i = 0; i < g.slices(); ++i)
    if (std::abs(g.s_grid()[i] - gt.s_grid()[i]) > 1e-12)
      throw AlignmentError("check_bmn_hypotheses: bands must share the s-grid");

  BmnReport rep;
  const int last = g.slices() - 1;
  double disc = 0.0;
  if (g.family() == WarpedBand::Family::Round) {
    disc = std::abs(g.metric_scale()[last] - gt.metric_scale()[last]);
  } else {
    disc = std::max((g.a().row(last) - gt.a().row(last)).cwiseAbs().maxCoeff(),
                    (g.c().row(last) - gt.c().row(last)).cwiseAbs().maxCoeff());
  }
  disc = std::max(
      disc, (g.lapse().row(last) - gt.lapse().row(last)).cwiseAbs().maxCoeff());
  rep.max_metric_discrepancy = disc;

  const Vector Hg = boundary_mean_curvature(g, true);
  const Vector Ht = boundary_mean_curvature(gt, true);
  rep.min_mean_curvature_gap = (Hg - Ht).minCoeff();

  const BandCurvature cg = fd_band_curvature(g);
  const BandCurvature ct = fd_band_curvature(gt);
  rep.curvature_floor = std::min(cg.R.minCoeff(), ct.R.minCoeff());

  rep.boundary_match = rep.max_metric_discrepancy < 1e-10;
  rep.mean_curvature_dominates = rep.min_mean_curvature_gap > 0.0;
  rep.pass = rep.boundary_match && rep.mean_curvature_dominates;
  return rep;
}

}  // namespace fillin
