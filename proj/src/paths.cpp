#include "fillin/paths.hpp"

#include <algorithm>
#include <cmath>

namespace fillin {

namespace {

constexpr double kConstancyTol = 1e-12;

// 6-point Gauss-Legendre on [-1, 1].
constexpr double kGaussX[6] = {-0.9324695142031521, -0.6612093864662645,
                               -0.2386191860831969, 0.2386191860831969,
                               0.6612093864662645,  0.9324695142031521};
constexpr double kGaussW[6] = {0.1713244923791704, 0.3607615730481386,
                               0.4679139345726910, 0.4679139345726910,
                               0.3607615730481386, 0.1713244923791704};

struct Components {
  double a;
  Vector c;  // empty for the round family
};

Components metric_components(const SphereMetric& m, int grid) {
  Components out;
  if (m.axisym_like()) {
    if (m.grid_size() != grid)
      throw AlignmentError("metric path: slices must share the x-grid");
    out.a = m.component_a();
    out.c = m.component_c();
  } else {
    const double k = sqr(m.round_radius());
    out.a = k;
    if (grid > 1) {
      if (m.dim() != 3)
        throw AlignmentError("metric path: cannot mix round n != 3 with axisym");
      const Vector x = Vector::LinSpaced(grid, 0.0, M_PI);
      out.c = k * x.array().sin().square();
    }
  }
  return out;
}

}  // namespace

struct MetricPath::Impl {
  Family family = Family::Round;
  int n = 3;
  std::vector<double> t;
  Vector a;  // gamma_xx scale per t-node (= full round scale for Round)
  Matrix c;  // t-nodes x x-nodes, axisym only
  bool const0 = false, const1 = false;
  double min_R = 0.0;
  double junction_defect = 0.0;
  std::optional<int> corner;

  // C2 interpolation; split at the corner node when present.
  CubicSpline a_lo, a_hi;
  std::vector<CubicSpline> c_lo, c_hi;
  double corner_t = 2.0;

  void build_splines() {
    const int M = static_cast<int>(t.size());
    const int cut = corner.value_or(M - 1);
    corner_t = corner ? t[*corner] : 2.0;
    auto sub = [&](int lo, int hi) {
      return std::vector<double>(t.begin() + lo, t.begin() + hi + 1);
    };
    a_lo = CubicSpline(sub(0, cut), a.segment(0, cut + 1));
    if (corner && cut < M - 1)
      a_hi = CubicSpline(sub(cut, M - 1), a.segment(cut, M - cut));
    if (family == Family::Axisym) {
      const int N = static_cast<int>(c.cols());
      c_lo.resize(N);
      if (corner && cut < M - 1) c_hi.resize(N);
      for (int j = 0; j < N; ++j) {
        c_lo[j] = CubicSpline(sub(0, cut), c.block(0, j, cut + 1, 1));
        if (corner && cut < M - 1)
          c_hi[j] = CubicSpline(sub(cut, M - 1), c.block(cut, j, M - cut, 1));
      }
    }
  }

  void measure_flags() {
    auto window_const = [&](double lo, double hi) {
      double ref_a = -1.0;
      Vector ref_c;
      for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] < lo - 1e-14 || t[i] > hi + 1e-14) continue;
        if (ref_a < 0.0) {
          ref_a = a[i];
          if (family == Family::Axisym) ref_c = c.row(i).transpose();
          continue;
        }
        if (std::abs(a[i] - ref_a) > kConstancyTol) return false;
        if (family == Family::Axisym &&
            (c.row(i).transpose() - ref_c).cwiseAbs().maxCoeff() > kConstancyTol)
          return false;
      }
      return true;
    };
    const0 = window_const(0.0, 1.0 / 20.0);
    const1 = window_const(5.0 / 6.0, 1.0);
  }

  void measure_min_R() {
    min_R = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < t.size(); ++i) {
      if (family == Family::Round) {
        min_R = std::min(min_R, (n - 1) * (n - 2) / a[i]);
      } else {
        const Vector av = Vector::Constant(c.cols(), a[i]);
        const double h = M_PI / (c.cols() - 1);
        min_R = std::min(
            min_R,
            axisym_slice_curvature(av, c.row(i).transpose(), h).minCoeff());
      }
    }
  }
};

MetricPath MetricPath::from_samples(const std::vector<SphereMetric>& samples,
                                    std::optional<int> corner_index) {
  if (samples.size() < 5)
    throw PreconditionError("metric path: need >= 5 t-nodes");
  auto impl = std::make_shared<Impl>();
  const int M = static_cast<int>(samples.size());
  impl->n = samples[0].dim();
  int grid = 1;
  for (const auto& m : samples) {
    if (m.dim() != impl->n)
      throw AlignmentError("metric path: slices must share the dimension");
    if (m.axisym_like()) grid = std::max(grid, m.grid_size());
  }
  impl->family = grid > 1 ? Family::Axisym : Family::Round;
  impl->t.resize(M);
  for (int i = 0; i < M; ++i) impl->t[i] = static_cast<double>(i) / (M - 1);
  impl->a = Vector(M);
  if (impl->family == Family::Axisym) impl->c = Matrix(M, grid);
  for (int i = 0; i < M; ++i) {
    Components comp = metric_components(samples[i], grid);
    impl->a[i] = comp.a;
    if (impl->family == Family::Axisym) impl->c.row(i) = comp.c.transpose();
  }
  if (corner_index) {
    if (*corner_index <= 0 || *corner_index >= M - 1)
      throw PreconditionError("metric path: corner must be interior");
    impl->corner = corner_index;
  }
  impl->build_splines();
  impl->measure_flags();
  impl->measure_min_R();
  MetricPath p;
  p.impl_ = std::move(impl);
  return p;
}

MetricPath MetricPath::constant(const SphereMetric& metric, int t_nodes) {
  return from_samples(std::vector<SphereMetric>(t_nodes, metric));
}

MetricPath::Family MetricPath::family() const { return impl_->family; }
int MetricPath::dim() const { return impl_->n; }
int MetricPath::t_nodes() const { return static_cast<int>(impl_->t.size()); }
int MetricPath::grid_size() const {
  return impl_->family == Family::Axisym ? static_cast<int>(impl_->c.cols()) : 1;
}
double MetricPath::t(int i) const { return impl_->t[i]; }
bool MetricPath::constant_near_0() const { return impl_->const0; }
bool MetricPath::constant_near_1() const { return impl_->const1; }
bool MetricPath::psc() const { return impl_->min_R > 0.0; }
double MetricPath::min_scalar() const { return impl_->min_R; }
std::optional<int> MetricPath::corner_index() const { return impl_->corner; }
double MetricPath::junction_c1_defect() const { return impl_->junction_defect; }

SphereMetric MetricPath::sample(int i) const {
  const auto& im = *impl_;
  if (im.family == Family::Round)
    return SphereMetric::round(im.n, std::sqrt(im.a[i]));
  const Vector b = (im.c.row(i).transpose() / im.a[i]).cwiseMax(0.0).cwiseSqrt();
  const SphereMetric base = SphereMetric::axisym(b);
  return im.a[i] == 1.0 ? base : SphereMetric::scaled(base, im.a[i]);
}

MetricPath::SliceEval MetricPath::eval(double tq) const {
  const auto& im = *impl_;
  const bool hi = im.corner && tq > im.corner_t && !im.a_hi.empty();
  const CubicSpline& sa = hi ? im.a_hi : im.a_lo;
  SliceEval out;
  out.a = sa.value(tq);
  out.a_t = sa.deriv(tq);
  out.a_tt = sa.deriv2(tq);
  if (im.family == Family::Axisym) {
    const auto& sc = hi ? im.c_hi : im.c_lo;
    const int N = static_cast<int>(sc.size());
    out.c.resize(N);
    out.c_t.resize(N);
    out.c_tt.resize(N);
    for (int j = 0; j < N; ++j) {
      out.c[j] = sc[j].value(tq);
      out.c_t[j] = sc[j].deriv(tq);
      out.c_tt[j] = sc[j].deriv2(tq);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

MetricPath convex_path(const SphereMetric& a, const SphereMetric& b,
                       int t_nodes) {
  if (a.dim() != b.dim())
    throw AlignmentError("convex_path: metrics must share the dimension");
  std::vector<SphereMetric> samples;
  samples.reserve(t_nodes);
  const int grid = std::max(a.grid_size(), b.grid_size());
  Components ca = metric_components(a, grid);
  Components cb = metric_components(b, grid);
  for (int i = 0; i < t_nodes; ++i) {
    const double t = static_cast<double>(i) / (t_nodes - 1);
    const double w = std::min(1.0, 1.5 * t);
    const double at = (1.0 - w) * ca.a + w * cb.a;
    if (grid == 1) {
      samples.push_back(SphereMetric::round(a.dim(), std::sqrt(at)));
    } else {
      const Vector ct = (1.0 - w) * ca.c + w * cb.c;
      const Vector prof = (ct / at).cwiseMax(0.0).cwiseSqrt();
      const SphereMetric base = SphereMetric::axisym(prof);
      samples.push_back(at == 1.0 ? base : SphereMetric::scaled(base, at));
    }
  }
  return MetricPath::from_samples(samples);
}

namespace {

// Piecewise-linear evaluation of sampled per-node data.
double plerp(const std::vector<double>& t, const Vector& y, double tq) {
  const int M = static_cast<int>(t.size());
  if (tq <= t.front()) return y[0];
  if (tq >= t.back()) return y[M - 1];
  const int i =
      static_cast<int>(std::upper_bound(t.begin(), t.end(), tq) - t.begin()) - 1;
  const double w = (tq - t[i]) / (t[i + 1] - t[i]);
  return (1.0 - w) * y[i] + w * y[i + 1];
}

}  // namespace

MetricPath mollify(const MetricPath& path, double sigma) {
  if (!(sigma > 0.0) || sigma > 1.0 / 6.0)
    throw PreconditionError("mollify: require 0 < sigma <= 1/6");
  const int M = path.t_nodes();
  const int N = path.grid_size();
  std::vector<double> t(M);
  for (int i = 0; i < M; ++i) t[i] = path.t(i);

  // Raw per-node component tables.
  Vector a_raw(M);
  Matrix c_raw;
  if (N > 1) c_raw.resize(M, N);
  for (int i = 0; i < M; ++i) {
    auto ev = path.eval(t[i]);
    a_raw[i] = ev.a;
    if (N > 1) c_raw.row(i) = ev.c.transpose();
  }

  const double norm = 315.0 / (256.0 * sigma);
  auto kernel = [&](double tau) {
    const double y = tau / sigma;
    return norm * std::pow(1.0 - y * y, 4);
  };

  // Exact convolution of the piecewise-linear path: integrate kernel x linear
  // segment with Gauss points between consecutive breakpoints.
  auto convolve = [&](const Vector& y, double tc) {
    std::vector<double> cuts{tc - sigma};
    for (double tn : t)
      if (tc - tn > tc - sigma + 1e-15 && tc - tn < tc + sigma - 1e-15)
        cuts.push_back(tc - tn);
    cuts.push_back(tc + sigma);
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    for (size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double lo = cuts[k], hi = cuts[k + 1];
      const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      for (int g = 0; g < 6; ++g) {
        const double tau = mid + half * kGaussX[g];
        acc += half * kGaussW[g] * kernel(tau) * plerp(t, y, tc - tau);
      }
    }
    return acc;
  };

  Vector a_new = a_raw;
  Matrix c_new = c_raw;
  for (int i = 0; i < M; ++i) {
    if (t[i] < 0.5 - 1e-14 || t[i] > 5.0 / 6.0 + 1e-14) continue;
    a_new[i] = convolve(a_raw, t[i]);
    for (int j = 0; j < N && N > 1; ++j)
      c_new(i, j) = convolve(c_raw.col(j), t[i]);
  }

  std::vector<SphereMetric> samples;
  samples.reserve(M);
  for (int i = 0; i < M; ++i) {
    if (N == 1) {
      samples.push_back(SphereMetric::round(path.dim(), std::sqrt(a_new[i])));
    } else {
      const Vector prof = (c_new.row(i).transpose() / a_new[i]).cwiseMax(0.0).cwiseSqrt();
      const SphereMetric base = SphereMetric::axisym(prof);
      samples.push_back(a_new[i] == 1.0 ? base
                                        : SphereMetric::scaled(base, a_new[i]));
    }
  }
  MetricPath out = MetricPath::from_samples(samples);

  // Measured C1 defect across the junction nodes.
  const double h = t[1] - t[0];
  auto defect_at = [&](double tj) {
    const int i = std::clamp(static_cast<int>(std::round(tj / h)), 2, M - 3);
    double worst = 0.0;
    auto one_component = [&](const Vector& y) {
      const double dl = d1_right(y[i - 2], y[i - 1], y[i], h, h);
      const double dr = d1_left(y[i], y[i + 1], y[i + 2], h, h);
      worst = std::max(worst, std::abs(dl - dr));
    };
    one_component(a_new);
    for (int j = 0; j < N && N > 1; ++j) one_component(c_new.col(j));
    return worst;
  };
  const double defect = std::max(defect_at(0.5), defect_at(5.0 / 6.0));
  auto impl = std::make_shared<MetricPath::Impl>(*out.impl_);
  impl->junction_defect = defect;
  out.impl_ = std::move(impl);
  return out;
}

MetricPath flatten_reparametrize(const MetricPath& path, double T) {
  if (!(T > 0.0)) throw PreconditionError("flatten_reparametrize: T > 0 required");
  const double L = std::cbrt(6.0 * T);
  auto c_of = [&](double t) { return 0.5 * L * t * t - t * t * t / 3.0; };
  const int M = path.t_nodes();
  std::vector<SphereMetric> samples;
  samples.reserve(M);
  for (int i = 0; i < M; ++i) {
    const double tau = static_cast<double>(i) / (M - 1);
    const double tin = std::clamp(c_of(tau * L) / T, 0.0, 1.0);
    auto ev = path.eval(tin);
    if (path.family() == MetricPath::Family::Round) {
      samples.push_back(SphereMetric::round(path.dim(), std::sqrt(ev.a)));
    } else {
      const Vector prof = (ev.c / ev.a).cwiseMax(0.0).cwiseSqrt();
      const SphereMetric base = SphereMetric::axisym(prof);
      samples.push_back(ev.a == 1.0 ? base : SphereMetric::scaled(base, ev.a));
    }
  }
  return MetricPath::from_samples(samples);
}

PathNorms path_norms(const MetricPath& path) {
  if (path.t_nodes() < 5)
    throw PreconditionError("path_norms: need >= 5 t-nodes");
  const int M = path.t_nodes();
  const int N = path.grid_size();
  const double h = path.t(1) - path.t(0);

  Vector a(M);
  Matrix c;
  if (N > 1) c.resize(M, N);
  for (int i = 0; i < M; ++i) {
    auto ev = path.eval(path.t(i));
    a[i] = ev.a;
    if (N > 1) c.row(i) = ev.c.transpose();
  }

  PathNorms out;
  const double dimfac = std::sqrt(static_cast<double>(path.dim() - 1));
  for (int i = 0; i < M; ++i) {
    double a1;
    if (i == 0)
      a1 = d1_left(a[0], a[1], a[2], h, h);
    else if (i == M - 1)
      a1 = d1_right(a[M - 3], a[M - 2], a[M - 1], h, h);
    else
      a1 = (a[i + 1] - a[i - 1]) / (2.0 * h);

    if (N == 1) {
      out.sup_d1 = std::max(out.sup_d1, dimfac * std::abs(a1) / a[i]);
    } else {
      for (int j = 0; j < N; ++j) {
        double c1;
        if (i == 0)
          c1 = d1_left(c(0, j), c(1, j), c(2, j), h, h);
        else if (i == M - 1)
          c1 = d1_right(c(M - 3, j), c(M - 2, j), c(M - 1, j), h, h);
        else
          c1 = (c(i + 1, j) - c(i - 1, j)) / (2.0 * h);
        const double ra = a1 / a[i];
        const double rc = (j == 0 || j == N - 1) ? ra : c1 / c(i, j);
        out.sup_d1 = std::max(out.sup_d1, std::sqrt(ra * ra + rc * rc));
      }
    }
    if (i > 0 && i < M - 1) {
      const double a2 = (a[i + 1] - 2.0 * a[i] + a[i - 1]) / (h * h);
      if (N == 1) {
        out.sup_d2 = std::max(out.sup_d2, dimfac * std::abs(a2) / a[i]);
      } else {
        for (int j = 0; j < N; ++j) {
          const double c2 =
              (c(i + 1, j) - 2.0 * c(i, j) + c(i - 1, j)) / (h * h);
          const double ra = a2 / a[i];
          const double rc = (j == 0 || j == N - 1) ? ra : c2 / c(i, j);
          out.sup_d2 = std::max(out.sup_d2, std::sqrt(ra * ra + rc * rc));
        }
      }
    }
    const SphereMetric slice = path.sample(i);
    out.sup_R =
        std::max(out.sup_R, scalar_curvature(slice).cwiseAbs().maxCoeff());
  }
  return out;
}

// Named generators -----------------------------------------------------------

Vector eccentric_profile(double e, int nodes) {
  const Vector x = Vector::LinSpaced(nodes, 0.0, M_PI);
  return x.array().sin() * (1.0 + (e - 1.0) * x.array().sin().square());
}

Vector dumbbell_profile(double beta, int nodes) {
  const Vector x = Vector::LinSpaced(nodes, 0.0, M_PI);
  return x.array().sin() * (1.0 - beta * x.array().sin().square());
}

MetricPath round_radius_path(int n, double rho0, double rho1, int t_nodes) {
  std::vector<SphereMetric> samples;
  samples.reserve(t_nodes);
  for (int i = 0; i < t_nodes; ++i) {
    const double t = static_cast<double>(i) / (t_nodes - 1);
    const double rho = rho0 + (rho1 - rho0) * smoothstep5(1.5 * t);
    samples.push_back(SphereMetric::round(n, rho));
  }
  return MetricPath::from_samples(samples);
}

namespace {

MetricPath eccentricity_path(double e_max, int t_nodes, int profile_nodes,
                             bool back_to_round) {
  std::vector<SphereMetric> samples;
  samples.reserve(t_nodes);
  for (int i = 0; i < t_nodes; ++i) {
    const double t = static_cast<double>(i) / (t_nodes - 1);
    auto ramp7 = [](double x) {  // C^3 septic ramp
      if (x <= 0.0) return 0.0;
      if (x >= 1.0) return 1.0;
      return x * x * x * x * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)));
    };
    double w;
    if (back_to_round) {
      w = ramp7((t - 0.08) / 0.30) * ramp7((0.76 - t) / 0.30);
    } else {
      w = ramp7((t - 0.15) / 0.70);
    }
    const double e = 1.0 + (e_max - 1.0) * w;
    samples.push_back(SphereMetric::axisym(eccentric_profile(e, profile_nodes)));
  }
  return MetricPath::from_samples(samples);
}

}  // namespace

MetricPath eccentric_bump_path(double e_max, int t_nodes, int profile_nodes) {
  return eccentricity_path(e_max, t_nodes, profile_nodes, true);
}

MetricPath to_eccentric_path(double e_max, int t_nodes, int profile_nodes) {
  return eccentricity_path(e_max, t_nodes, profile_nodes, false);
}

}  // namespace fillin
