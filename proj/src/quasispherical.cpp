#include "fillin/quasispherical.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fillin {

namespace {
constexpr double kMonotonicityTol = 1e-6;
}

// ---------------------------------------------------------------------------
// BartnikData

BartnikData BartnikData::make(int n, SphereMetric metric, ScalarField H) {
  if (n != metric.dim())
    throw AlignmentError("Bartnik data: n must match the metric dimension");
  require_aligned(metric, H, "Bartnik data");
  BartnikData d;
  d.n = n;
  d.metric = std::move(metric);
  d.H = std::move(H);
  return d;
}

bool BartnikData::constant_H() const {
  return (H.array() - H[0]).abs().maxCoeff() == 0.0;
}

// ---------------------------------------------------------------------------
// BaseAF

struct BaseAF::Impl {
  MetricPath path = MetricPath::constant(SphereMetric::round(3, 1.0));
  int n = 3;
  bool round_fam = true;
  bool euclid = false;
  double delta = 0.0;
  double s0 = 1.0;
  double eps_target = 0.0;
  double eps_achieved = 0.0;
  double s_max = 1.0;
  bool truncated = false;
  std::vector<double> s;
  std::vector<SliceCoeffs> stored;
  std::optional<int> corner;
  double peak_dev = 0.0;

  int grid() const { return round_fam ? 1 : path.grid_size(); }

  void eval_with(double dlt, double s_val, SliceCoeffs& out) const {
    const double L = std::log(s_val);
    const double y2 = 1.0 + dlt * dlt * L * L;
    const double t = (2.0 / M_PI) * std::atan(dlt * L);
    const double tp = (2.0 * dlt / M_PI) / (s_val * y2);
    const double tpp = -(2.0 * dlt / M_PI) / (s_val * s_val * y2) *
                       (1.0 + 2.0 * dlt * dlt * L / y2);
    const auto pe = path.eval(t);

    const double at = pe.a_t * tp;
    const double att = pe.a_tt * tp * tp + pe.a_t * tpp;
    const double p = s_val * s_val * pe.a;
    const double pp = 2.0 * s_val * pe.a + s_val * s_val * at;
    const double ppp = 2.0 * pe.a + 4.0 * s_val * at + s_val * s_val * att;

    out.s = s_val;
    const double Axx = pp / (2.0 * p);
    const double dAxx = ppp / (2.0 * p) - Axx * pp / p;

    if (round_fam) {
      out.a = Vector::Constant(1, p);
      out.c.resize(0);
      out.Hbar = Vector::Constant(1, (n - 1) * Axx);
      out.Rhat = Vector::Constant(1, (n - 1) * (n - 2) / p);
      const double A2 = (n - 1) * Axx * Axx;
      out.Rbar = Vector::Constant(
          1, out.Rhat[0] - 2.0 * (n - 1) * dAxx - sqr(out.Hbar[0]) - A2);
      out.deviation =
          s_val * std::sqrt(static_cast<double>(n - 1)) * std::abs(Axx - 1.0 / s_val);
      return;
    }

    const int N = grid();
    const double h = M_PI / (N - 1);
    out.a = Vector::Constant(N, p);
    out.c = s_val * s_val * pe.c;
    Vector q_t = 2.0 * s_val * pe.c + s_val * s_val * pe.c_t * tp;
    Vector q_tt = 2.0 * pe.c + 4.0 * s_val * pe.c_t * tp +
                  s_val * s_val * (pe.c_tt * tp * tp + pe.c_t * tpp);
    out.Hbar.resize(N);
    out.Rbar.resize(N);
    out.Rhat = axisym_slice_curvature(out.a, out.c, h);
    double worst = 0.0;
    for (int j = 0; j < N; ++j) {
      double Aff, dAff;
      if (j == 0 || j == N - 1) {
        Aff = Axx;
        dAff = dAxx;
      } else {
        Aff = q_t[j] / (2.0 * out.c[j]);
        dAff = q_tt[j] / (2.0 * out.c[j]) - Aff * q_t[j] / out.c[j];
      }
      out.Hbar[j] = Axx + Aff;
      const double A2 = Axx * Axx + Aff * Aff;
      out.Rbar[j] =
          out.Rhat[j] - 2.0 * (dAxx + dAff) - sqr(out.Hbar[j]) - A2;
      worst = std::max(worst, std::hypot(Axx - 1.0 / s_val, Aff - 1.0 / s_val));
    }
    out.deviation = s_val * worst;
  }

  double sup_deviation(double dlt, double s_hi, int nodes) const {
    SliceCoeffs tmp;
    double sup = 0.0;
    const double Lhi = std::log(std::max(s_hi, 1.0 + 1e-9));
    for (int i = 0; i < nodes; ++i) {
      const double s_val = std::exp(Lhi * i / (nodes - 1.0));
      eval_with(dlt, s_val, tmp);
      sup = std::max(sup, tmp.deviation);
    }
    return sup;
  }
};

BaseAF BaseAF::build(const MetricPath& path, double eps_target,
                     const BaseOptions& opt) {
  if (!path.psc())
    throw PreconditionError("base: path must consist of PSC slices");
  if (!(eps_target > 0.0) || eps_target >= 1.0)
    throw PreconditionError("base: eps_target must lie in (0, 1)");
  if (!path.constant_near_1())
    throw PreconditionError("base: path must be constant on [5/6, 1]");

  auto impl = std::make_shared<Impl>();
  impl->path = path;
  impl->n = path.dim();
  impl->round_fam = path.family() == MetricPath::Family::Round;
  impl->eps_target = eps_target;

  // Endpoint must be the standard round metric.
  {
    const auto end = path.eval(1.0);
    bool std_end = std::abs(end.a - 1.0) <= 1e-9;
    if (!impl->round_fam && std_end) {
      const Vector x = Vector::LinSpaced(path.grid_size(), 0.0, M_PI);
      const Vector c_std = x.array().sin().square();
      std_end = (end.c - c_std).cwiseAbs().maxCoeff() <= 1e-9;
    }
    if (!std_end)
      throw PreconditionError("base: path must end at the standard round metric");
  }

  const PathNorms norms = path_norms(path);
  impl->euclid = norms.sup_d1 <= 1e-14;

  if (impl->euclid) {
    impl->delta = 0.0;
    impl->s0 = 1.0;
    impl->eps_achieved = 0.0;
  } else {
    double dlt = opt.delta_init;
    int halvings = 0;
    for (;;) {
      const double arg = std::tan(5.0 * M_PI / 12.0) / dlt;
      if (arg > 650.0)
        throw NumericalError("base: delta underflow before reaching eps_target");
      const double s0 = std::exp(arg);
      const double dev = impl->sup_deviation(dlt, s0, opt.measure_nodes);
      if (dev <= eps_target) {
        impl->delta = dlt;
        impl->s0 = s0;
        impl->eps_achieved = dev;
        break;
      }
      if (++halvings > opt.max_halvings)
        throw NumericalError("base: halving cap reached without meeting eps_target");
      dlt *= 0.5;
    }
  }

  impl->s_max = opt.s_max ? *opt.s_max : std::max(10.0 * impl->s0, 20.0);
  if (!(impl->s_max > 1.0))
    throw PreconditionError("base: s_max must exceed 1");
  impl->truncated = impl->s_max < impl->s0;

  // Stored grid: spacing grows like s/200 far out, refined near s = 1 with a
  // gradual ramp (abrupt spacing jumps degrade the centered s-stencils).
  std::vector<double> grid;
  double s = 1.0;
  grid.push_back(s);
  while (s < impl->s_max) {
    const double ds =
        std::clamp((s - 1.0) / 150.0, 0.00075, std::max(0.01, s / 200.0));
    s = std::min(s + ds, impl->s_max);
    grid.push_back(s);
  }
  auto snap_to = [&](double target) -> std::optional<int> {
    if (target <= grid.front() || target >= grid.back()) return std::nullopt;
    auto it = std::lower_bound(grid.begin(), grid.end(), target);
    const int i = static_cast<int>(it - grid.begin());
    const int j = (std::abs(grid[i] - target) < std::abs(grid[i - 1] - target))
                      ? i
                      : i - 1;
    grid[j] = target;
    return j;
  };
  if (!impl->euclid && impl->s0 < impl->s_max) snap_to(impl->s0);
  if (path.corner_index()) {
    const double t_c = path.t(*path.corner_index());
    if (impl->delta > 0.0) {
      const double s_c = std::exp(std::tan(0.5 * M_PI * t_c) / impl->delta);
      impl->corner = snap_to(s_c);
    }
  }

  impl->s = grid;
  impl->stored.resize(grid.size());
  double peak = 0.0;
  for (size_t i = 0; i < grid.size(); ++i) {
    impl->eval_with(impl->delta, grid[i], impl->stored[i]);
    peak = std::max(peak, impl->stored[i].deviation);
    if (impl->stored[i].Rhat.minCoeff() <= 0.0)
      throw PreconditionError("base: slice scalar curvature must stay positive");
  }
  impl->peak_dev = peak;
  if (impl->euclid) {
    impl->eps_achieved = 0.0;  // Abar = gbar/s exactly on a cone
  } else {
    impl->eps_achieved = std::max(impl->eps_achieved, peak);
  }
  if (!impl->euclid && impl->eps_achieved > eps_target * (1.0 + 1e-9))
    throw NumericalError("base: measured deviation exceeds the target");

  BaseAF b;
  b.impl_ = std::move(impl);
  return b;
}

int BaseAF::dim() const { return impl_->n; }
bool BaseAF::round_family() const { return impl_->round_fam; }
int BaseAF::grid_size() const { return impl_->grid(); }
double BaseAF::delta() const { return impl_->delta; }
double BaseAF::s0() const { return impl_->s0; }
double BaseAF::eps_target() const { return impl_->eps_target; }
double BaseAF::eps_achieved() const { return impl_->eps_achieved; }
double BaseAF::alpha() const {
  return 0.5 * (impl_->n - 2) * (1.0 - impl_->eps_achieved);
}
bool BaseAF::euclidean() const { return impl_->euclid; }
bool BaseAF::truncated() const { return impl_->truncated; }
double BaseAF::s_max() const { return impl_->s_max; }
const std::vector<double>& BaseAF::s_grid() const { return impl_->s; }
const BaseAF::SliceCoeffs& BaseAF::slice(int i) const {
  return impl_->stored.at(i);
}
int BaseAF::slice_count() const { return static_cast<int>(impl_->stored.size()); }
std::optional<int> BaseAF::corner_slice() const { return impl_->corner; }
const MetricPath& BaseAF::path() const { return impl_->path; }

void BaseAF::eval(double s, SliceCoeffs& out) const {
  impl_->eval_with(impl_->delta, s, out);
}

double BaseAF::measure_peak_deviation() const { return impl_->peak_dev; }

double BaseAF::slice_integral(int i, const Vector& f) const {
  const SliceCoeffs& sc = impl_->stored.at(i);
  if (impl_->round_fam) {
    return f[0] * unit_sphere_area(impl_->n - 1) *
           std::pow(sc.a[0], 0.5 * (impl_->n - 1));
  }
  const double h = M_PI / (impl_->grid() - 1);
  return axisym_slice_integral(sc.a, sc.c, f, h);
}

// ---------------------------------------------------------------------------
// Flow solver

struct FlowSolution::Impl {
  explicit Impl(BaseAF b) : base(std::move(b)) {}
  BaseAF base;
  int n = 3;
  Matrix u;
  int solved = 0;
  std::vector<double> I;
  Vector u1;
  double alpha = 0.5;
  bool mono_ok = true;
  double mono_margin = 0.0;
  double min_u = 1.0;
};

namespace {

struct FlowStepper {
  const BaseAF& base;
  const FlowOptions& opt;
  int N;
  double hx;
  std::mt19937_64 rng;
  BaseAF::SliceCoeffs cf_from, cf_to, cf_mid;

  FlowStepper(const BaseAF& b, const FlowOptions& o)
      : base(b), opt(o), N(b.grid_size()),
        hx(N > 1 ? M_PI / (N - 1) : 1.0), rng(o.seed) {}

  Vector rhs(const BaseAF::SliceCoeffs& cf, const Vector& u) const {
    Vector lap;
    if (N == 1) {
      lap = Vector::Zero(1);
    } else {
      lap = axisym_slice_laplacian(cf.a, cf.c, u, hx);
    }
    return ((u.array().square() * lap.array()) +
            0.5 * (u.array() - u.array().cube()) * cf.Rhat.array() -
            0.5 * cf.Rbar.array() * u.array()) /
           cf.Hbar.array();
  }

  // One implicit trapezoidal step; empty on Newton failure.
  std::optional<Vector> step(const BaseAF::SliceCoeffs& cf0,
                             const BaseAF::SliceCoeffs& cf1, const Vector& u0,
                             double ds, double gtol) {
    const Vector f0 = rhs(cf0, u0);
    Vector v = u0 + ds * f0;  // explicit predictor
    if (v.minCoeff() <= 0.0) v = u0;

    Vector lap_lo, lap_di, lap_up;
    if (N > 1)
      axisym_slice_laplacian_operator(cf1.a, cf1.c, hx, lap_lo, lap_di, lap_up);
    Vector g = v - u0 - 0.5 * ds * (f0 + rhs(cf1, v));
    double gn = g.cwiseAbs().maxCoeff();
    const double stall_floor = 1024.0 * std::numeric_limits<double>::epsilon() *
                               std::max(1.0, u0.cwiseAbs().maxCoeff());
    double prev_gn = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.max_newton; ++it) {
      if (gn <= gtol) return v;
      // A rounding-limited residual cannot contract further; accept it.
      if (gn <= stall_floor && gn > 0.5 * prev_gn) return v;
      prev_gn = gn;
      Vector lap_v = N > 1 ? axisym_slice_laplacian(cf1.a, cf1.c, v, hx)
                           : Vector::Zero(1);
      Vector di(N);
      Vector lo = Vector::Zero(std::max(N - 1, 1));
      Vector up = Vector::Zero(std::max(N - 1, 1));
      for (int j = 0; j < N; ++j) {
        double d = 2.0 * v[j] * lap_v[j] +
                   0.5 * (1.0 - 3.0 * v[j] * v[j]) * cf1.Rhat[j] -
                   0.5 * cf1.Rbar[j];
        if (N > 1) d += v[j] * v[j] * lap_di[j];
        di[j] = 1.0 - 0.5 * ds * d / cf1.Hbar[j];
      }
      if (N > 1) {
        for (int j = 0; j + 1 < N; ++j) {
          lo[j] = -0.5 * ds * v[j + 1] * v[j + 1] * lap_lo[j] / cf1.Hbar[j + 1];
          up[j] = -0.5 * ds * v[j] * v[j] * lap_up[j] / cf1.Hbar[j];
        }
      }
      Vector delta;
      try {
        delta = (N > 1) ? tridiag_solve(lo, di, up, -g)
                        : Vector::Constant(1, -g[0] / di[0]);
      } catch (const NumericalError&) {
        // Seeded perturbation fallback for a singular Jacobian.
        std::normal_distribution<double> noise(0.0, 1e-12);
        for (int j = 0; j < N; ++j) v[j] += noise(rng);
        g = v - u0 - 0.5 * ds * (f0 + rhs(cf1, v));
        gn = g.cwiseAbs().maxCoeff();
        continue;
      }
      double lambda = 1.0;
      bool moved = false;
      for (int half = 0; half < 24; ++half) {
        Vector vt = v + lambda * delta;
        if (vt.minCoeff() > 0.0) {
          Vector gt = vt - u0 - 0.5 * ds * (f0 + rhs(cf1, vt));
          const double gtn = gt.cwiseAbs().maxCoeff();
          if (gtn < gn || gtn <= gtol) {
            v = vt;
            g = gt;
            gn = gtn;
            moved = true;
            break;
          }
        }
        lambda *= 0.5;
      }
      if (!moved) return std::nullopt;
    }
    return gn <= gtol ? std::optional<Vector>(v) : std::nullopt;
  }

  // Advances from (s, u) to s_target with adaptive error control. The local
  // error, weighted by max(1, s^{n-2}) so that the mass aspect stays clean,
  // is kept under opt.weighted_tol per step.
  Vector advance(double s, double s_target, Vector u, double& ds_try) {
    const int n = base.dim();
    while (s < s_target - 1e-13) {
      double ds = std::min(ds_try, s_target - s);
      for (;;) {
        if (ds < 1e-12 * std::max(1.0, s))
          throw NumericalError(
              "flow: step-size underflow at s = " + format_g17(s) +
              ", min u = " + format_g17(u.minCoeff()));
        const double scale = std::max(1.0, u.cwiseAbs().maxCoeff());
        const double wt = std::max(1.0, std::pow(s, n - 2));
        // Below the rounding floor the error estimator reads noise only.
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() * scale;
        const double tol = std::max(opt.weighted_tol / wt, noise);
        const double gtol =
            std::max({opt.newton_tol * scale, 0.02 * tol,
                      8.0 * std::numeric_limits<double>::epsilon() * scale});
        base.eval(s, cf_from);
        base.eval(s + ds, cf_to);
        base.eval(s + 0.5 * ds, cf_mid);
        auto full = step(cf_from, cf_to, u, ds, gtol);
        if (!full) {
          ds *= 0.5;
          continue;
        }
        auto half1 = step(cf_from, cf_mid, u, 0.5 * ds, gtol);
        if (!half1) {
          ds *= 0.5;
          continue;
        }
        auto half2 = step(cf_mid, cf_to, *half1, 0.5 * ds, gtol);
        if (!half2) {
          ds *= 0.5;
          continue;
        }
        const double est = (*half2 - *full).cwiseAbs().maxCoeff() / 3.0;
        if (est <= tol) {
          Vector accepted = *half2 + (*half2 - *full) / 3.0;
          if (accepted.minCoeff() <= 0.0) accepted = *half2;
          u = std::move(accepted);
          s += ds;
          const double grow =
              0.9 * std::cbrt(tol / std::max(est, 1e-3 * tol));
          ds_try = ds * std::clamp(grow, 0.25, 4.0);
          break;
        }
        ds *= 0.5;
        ds_try = ds;
      }
      if (u.minCoeff() < 1e-8)
        throw NumericalError(
            "flow: lapse degenerated toward zero at s = " + format_g17(s) +
            " (possible blow-up of the comparison ODE)");
    }
    return u;
  }
};

}  // namespace

FlowSolution run_flow(const BaseAF& base, const Vector& u1,
                      const FlowOptions& opt) {
  const int N = base.grid_size();
  if (u1.size() != N)
    throw AlignmentError("flow: u1 must be aligned with the slice grid");
  if (u1.minCoeff() <= 0.0)
    throw PreconditionError("flow: u1 must be positive");
  for (int i = 0; i < base.slice_count(); ++i)
    if (base.slice(i).Hbar.minCoeff() <= 0.0)
      throw PreconditionError(
          "flow: mean-convex foliation required (Hbar_s > 0 on every slice)");

  auto impl = std::make_shared<FlowSolution::Impl>(base);
  impl->n = base.dim();
  impl->u1 = u1;
  impl->alpha = base.alpha();

  const auto& s = base.s_grid();
  int kstop = 0;
  while (kstop + 1 < static_cast<int>(s.size()) &&
         s[kstop + 1] <= opt.stop_s * (1.0 + 1e-12))
    ++kstop;

  impl->u.resize(kstop + 1, N);
  impl->I.resize(kstop + 1);
  impl->u.row(0) = u1.transpose();

  FlowStepper stepper(base, opt);
  Vector u = u1;
  double ds_try = 1e-3;
  double min_u = u.minCoeff();
  for (int k = 1; k <= kstop; ++k) {
    u = stepper.advance(s[k - 1], s[k], std::move(u), ds_try);
    impl->u.row(k) = u.transpose();
    min_u = std::min(min_u, u.minCoeff());
  }
  impl->solved = kstop + 1;
  impl->min_u = min_u;

  for (int k = 0; k <= kstop; ++k) {
    const auto& sc = base.slice(k);
    const Vector f =
        sc.Hbar.array() / impl->u.row(k).transpose().array();
    impl->I[k] = base.slice_integral(k, f);
  }
  double margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kstop; ++k) {
    const double floor_k =
        std::pow(s[k], impl->alpha) * impl->I[0] * (1.0 - kMonotonicityTol);
    margin = std::min(margin, impl->I[k] - floor_k);
  }
  impl->mono_margin = margin;
  impl->mono_ok = margin >= 0.0;

  FlowSolution out;
  out.impl_ = std::move(impl);
  return out;
}

const BaseAF& FlowSolution::base() const { return impl_->base; }
int FlowSolution::solved_slices() const { return impl_->solved; }
double FlowSolution::s_at(int i) const { return impl_->base.s_grid().at(i); }
const Vector& FlowSolution::u1() const { return impl_->u1; }
double FlowSolution::alpha() const { return impl_->alpha; }
const std::vector<double>& FlowSolution::mean_curvature_series() const {
  return impl_->I;
}
bool FlowSolution::monotonicity_certified() const { return impl_->mono_ok; }
double FlowSolution::monotonicity_margin() const { return impl_->mono_margin; }
double FlowSolution::min_u() const { return impl_->min_u; }

Vector FlowSolution::u_at(int i) const {
  if (i < 0 || i >= impl_->solved)
    throw PreconditionError("flow: slice index outside the solved range");
  return impl_->u.row(i).transpose();
}

double FlowSolution::total_mean_curvature(double s) const {
  const auto& grid = impl_->base.s_grid();
  const double s_hi = grid[impl_->solved - 1];
  if (s < grid[0] - 1e-9 || s > s_hi * (1.0 + 1e-9))
    throw PreconditionError("total_mean_curvature: s outside the solved range");
  const auto it = std::lower_bound(grid.begin(), grid.begin() + impl_->solved, s);
  int i = static_cast<int>(it - grid.begin());
  if (i > 0 && (i == impl_->solved || grid[i] - s > s - grid[i - 1])) --i;
  return impl_->I[i];
}

double total_mean_curvature(const FlowSolution& flow, double s) {
  return flow.total_mean_curvature(s);
}

WarpedBand FlowSolution::band() const {
  const auto& b = impl_->base;
  const int K = impl_->solved;
  std::vector<double> s(b.s_grid().begin(), b.s_grid().begin() + K);
  if (b.round_family()) {
    Vector scale(K);
    for (int i = 0; i < K; ++i) scale[i] = b.slice(i).a[0];
    return WarpedBand::round_band(b.dim(), std::move(s), std::move(scale),
                                  impl_->u.topRows(K));
  }
  const int N = b.grid_size();
  Matrix a(K, N), c(K, N);
  for (int i = 0; i < K; ++i) {
    a.row(i) = b.slice(i).a.transpose();
    c.row(i) = b.slice(i).c.transpose();
  }
  return WarpedBand::axisym_band(std::move(s), std::move(a), std::move(c),
                                 impl_->u.topRows(K));
}

// ---------------------------------------------------------------------------
// Mass

double mass_constant(int n) {
  return 1.0 / (2.0 * (n - 1) * unit_sphere_area(n - 1));
}

double h0_threshold(int n, double eps, double s0) {
  if (n < 3) throw PreconditionError("h0: n >= 3 required");
  if (!(eps >= 0.0 && eps < 1.0)) throw PreconditionError("h0: eps in [0,1) required");
  if (!(s0 >= 1.0)) throw PreconditionError("h0: s0 >= 1 required");
  const double alpha = 0.5 * (n - 2) * (1.0 - eps);
  return n * (n - 1) * unit_ball_volume(n) * std::pow(s0, n - alpha - 2.0);
}

double flux_mass_at(const FlowSolution& flow, int slice) {
  const BaseAF& b = flow.base();
  const double s = flow.s_at(slice);
  if (!b.euclidean() && s < b.s0() * (1.0 - 1e-12))
    throw PreconditionError("flux mass: slice below the Euclidean region");
  const Vector& u = flow.u_at(slice);
  const Vector w = u.array().square() - 1.0;
  const double avg = b.slice_integral(slice, w) /
                     b.slice_integral(slice, Vector::Ones(w.size()));
  return 0.5 * std::pow(s, b.dim() - 2) * avg;
}

double radial_mass_at(const FlowSolution& flow, int slice) {
  const BaseAF& b = flow.base();
  if (b.grid_size() != 1)
    throw PreconditionError("radial mass: round slice families only");
  const double s = flow.s_at(slice);
  const double u = flow.u_at(slice)[0];
  return 0.5 * std::pow(s, b.dim() - 2) * (1.0 - 1.0 / (u * u));
}

double adm_mass(const FlowSolution& flow) {
  const BaseAF& b = flow.base();
  if (b.truncated())
    throw PreconditionError("adm_mass: Euclidean region truncated; refused");
  const int K = flow.solved_slices();
  const double S = flow.s_at(K - 1);
  if (S < 10.0 * b.s0() * (1.0 - 1e-12))
    throw PreconditionError("adm_mass: flow must be solved to s_max >= 10 s0");

  const auto& grid = b.s_grid();
  auto nearest = [&](double target) {
    const auto it = std::lower_bound(grid.begin(), grid.begin() + K, target);
    int i = static_cast<int>(it - grid.begin());
    if (i == K) i = K - 1;
    if (i > 0 && grid[i] - target > target - grid[i - 1]) --i;
    return i;
  };
  const int idx[3] = {K - 1, nearest(S / 2.0), nearest(S / 4.0)};
  double xi[3], m[3];
  for (int j = 0; j < 3; ++j) {
    xi[j] = 1.0 / grid[idx[j]];
    m[j] = flux_mass_at(flow, idx[j]);
  }
  double out = 0.0;  // Lagrange extrapolation to xi = 0
  for (int j = 0; j < 3; ++j) {
    double w = 1.0;
    for (int k = 0; k < 3; ++k)
      if (k != j) w *= (0.0 - xi[k]) / (xi[j] - xi[k]);
    out += w * m[j];
  }
  return out;
}

MassReport mass_upper_bound(const BaseAF& base, const Vector& u1) {
  if (base.truncated())
    throw PreconditionError(
        "mass bound: Euclidean region truncated (s_max < s0); refused");
  if (u1.size() != base.grid_size())
    throw AlignmentError("mass bound: u1 grid mismatch");
  if (u1.minCoeff() <= 0.0)
    throw PreconditionError("mass bound: u1 must be positive");

  const int n = base.dim();
  MassReport rep;
  rep.s0 = base.s0();
  rep.epsilon_achieved = base.eps_achieved();
  rep.alpha = base.alpha();
  rep.h0 = h0_threshold(n, base.eps_achieved(), base.s0());

  const Vector Hbar1 = base.slice(0).Hbar;
  const Vector integrand = Hbar1.array() / u1.array();
  const double I1 = base.slice_integral(0, integrand);
  const double K = n * (n - 1) * unit_ball_volume(n) * std::pow(base.s0(), n - 2);
  rep.bracket = K - std::pow(base.s0(), rep.alpha) * I1;
  rep.eq_mass_bound = mass_constant(n) * rep.bracket;
  rep.verdict = rep.bracket < 0.0 ? FillinVerdict::NoNNSCFillIn
                                  : FillinVerdict::Inconclusive;

  // Brown-York-type slice bound at s0.
  if (base.s0() <= 1.0 + 1e-12) {
    const Vector by = Hbar1.array() * (1.0 - 1.0 / u1.array());
    rep.brown_york_bound = mass_constant(n) * base.slice_integral(0, by);
  } else {
    FlowOptions fopt;
    fopt.stop_s = base.s0();
    fopt.weighted_tol = 1e-9;
    const FlowSolution flow = run_flow(base, u1, fopt);
    const int k = flow.solved_slices() - 1;
    const auto& sc = base.slice(k);
    const Vector by =
        sc.Hbar.array() * (1.0 - 1.0 / flow.u_at(k).array());
    rep.brown_york_bound = mass_constant(n) * base.slice_integral(k, by);
  }
  return rep;
}

MassReport nnsc_fillin_test(const BartnikData& data, const MetricPath& path,
                            double eps_target, const BaseOptions& opt) {
  if (data.H.minCoeff() <= 0.0)
    throw PreconditionError("nnsc test: H must be positive");
  if (data.n != path.dim())
    throw AlignmentError("nnsc test: path dimension mismatch");

  // The path must start at the data's metric.
  {
    const auto start = path.eval(0.0);
    const double a0 = data.metric.axisym_like() || data.metric.dim() == 3
                          ? data.metric.component_a()
                          : sqr(data.metric.round_radius());
    if (std::abs(start.a - a0) > 1e-9 * std::max(1.0, std::abs(a0)))
      throw PreconditionError("nnsc test: path must start at the data metric");
    if (path.family() == MetricPath::Family::Axisym) {
      Vector c0;
      if (data.metric.axisym_like()) {
        if (data.metric.grid_size() != path.grid_size())
          throw AlignmentError("nnsc test: metric grid mismatch with path");
        c0 = data.metric.component_c();
      } else {
        const Vector x = Vector::LinSpaced(path.grid_size(), 0.0, M_PI);
        c0 = a0 * x.array().sin().square();
      }
      if ((start.c - c0).cwiseAbs().maxCoeff() > 1e-9)
        throw PreconditionError("nnsc test: path must start at the data metric");
    }
  }

  const BaseAF base = BaseAF::build(path, eps_target, opt);
  const Vector Hbar1 = base.slice(0).Hbar;
  Vector H = data.H;
  if (H.size() == 1 && base.grid_size() > 1)
    H = Vector::Constant(base.grid_size(), H[0]);
  if (H.size() != Hbar1.size())
    throw AlignmentError("nnsc test: H grid mismatch");
  const Vector u1 = Hbar1.array() / H.array();

  MassReport rep = mass_upper_bound(base, u1);

  if (data.constant_H()) {
    // bracket(H) = K - s0^alpha * H * area; strictly decreasing in H.
    const double area = base.slice_integral(0, Vector::Ones(base.grid_size()));
    const double K =
        base.dim() * (base.dim() - 1) * unit_ball_volume(base.dim()) *
        std::pow(base.s0(), base.dim() - 2);
    const double coef = std::pow(base.s0(), rep.alpha) * area;
    auto bracket_of = [&](double Hc) { return K - coef * Hc; };
    double lo = 1e-12, hi = 1.0;
    while (bracket_of(hi) > 0.0 && hi < 1e12) hi *= 2.0;
    if (bracket_of(hi) <= 0.0) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bracket_of(mid) > 0.0 ? lo : hi) = mid;
        if (hi - lo <= 1e-9 * std::max(1.0, hi)) break;
      }
      rep.H0_constant = 0.5 * (lo + hi);
    }
  }
  return rep;
}

}  // namespace fillin
