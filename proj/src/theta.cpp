#include "fillin/theta.hpp"

#include "fillin/necks.hpp"

#include <algorithm>
#include <cmath>

namespace fillin {

ThetaBound theta_closed_form(int n, double H) {
  ThetaBound out;
  out.kind = ThetaKind::ClosedForm;
  if (n == 2) {
    if (!(H >= 0.0 && H < 1.0))
      throw PreconditionError(
          "theta closed form (circle): valid window is 0 <= H < 1");
    out.value = 2.0 * (1.0 - H * H);
    out.provenance = "round-circle-closed-form";
    out.hypotheses.push_back("0 <= H < 1");
    return out;
  }
  if (n == 3) {
    if (!(H >= 2.0))
      throw PreconditionError(
          "theta closed form (round 2-sphere): valid window is H >= 2");
    out.value = 6.0 * (1.0 - H * H / 4.0);
    out.provenance = "round-sphere-closed-form";
    out.hypotheses.push_back("H >= 2");
    return out;
  }
  throw PreconditionError(
      "theta closed form: only n = 2 and n = 3 closed forms are exposed");
}

double amplification(int n, double lambda, double theta_lambda) {
  if (n < 3) throw PreconditionError("amplification: n >= 3 required");
  if (!(lambda > 1.0))
    throw PreconditionError("amplification: lambda > 1 required");
  if (theta_lambda <= 0.0) return 2.0;  // trivial branch
  const double mu = (n - 1.0) / n *
                    std::pow(n * lambda * lambda / (n - 1.0) + theta_lambda,
                             2.0 / n) *
                    std::pow(theta_lambda, 1.0 - 2.0 / n);
  const double c_mu = solve_c_mu(n, mu);
  const double alpha =
      std::pow(1.0 - c_mu, 1.0 / (n - 2)) *
      std::pow(lambda * lambda + (n - 1.0) / n * theta_lambda, 1.0 / (n - 2));
  if (!(alpha > 1.0))
    throw NumericalError("amplification: computed alpha <= 1 (alpha = " +
                         format_g17(alpha) + ")");
  return alpha;
}

double uniform_decay_mu(int n, double theta) {
  return (n - 1.0) / n *
         std::pow(theta + 4.0 * n / (n - 1.0), 2.0 / n) *
         std::pow(theta, 1.0 - 2.0 / n);
}

UniformDecayConstants uniform_decay_constants(int n) {
  if (n < 3) throw PreconditionError("uniform decay: n >= 3 required");
  UniformDecayConstants out;
  out.alpha0 = std::pow(2.0, 1.0 / (n - 2));
  // Largest theta with c_mu(theta) <= 1/2, i.e. mu(theta) = 2^{2/n} since
  // x = 1/2 solves x^{1-2/n} = mu (1-x) exactly at that mu.
  const double mu_target = std::pow(2.0, 2.0 / n);
  double lo = 1e-12, hi = 1.0;
  while (uniform_decay_mu(n, hi) < mu_target) hi *= 2.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (uniform_decay_mu(n, mid) < mu_target ? lo : hi) = mid;
  }
  out.theta0 = 0.5 * (lo + hi);
  const double c = solve_c_mu(n, uniform_decay_mu(n, out.theta0));
  out.certificate = 4.0 * (1.0 - c) - 2.0;
  if (std::abs(out.certificate) > 1e-10)
    throw NumericalError("uniform decay: certificate 4(1 - c_mu) = 2 missed");
  return out;
}

ThetaBound decay_curve(int n, double H0, double theta_H0,
                       const std::vector<double>& H_grid) {
  if (n < 3) throw PreconditionError("decay curve: n >= 3 required");
  if (!(H0 >= 1.0)) throw PreconditionError("decay curve: H0 >= 1 required");
  if (!(theta_H0 > 0.0))
    throw PreconditionError("decay curve: theta_H0 > 0 required");
  ThetaBound out;
  out.kind = ThetaKind::DecayCurve;
  out.provenance = "exponential-decay-envelope";
  out.hypotheses.push_back("H grid within [H0, infinity)");
  const double alpha0 = std::pow(2.0, 1.0 / (n - 2));
  out.beta = 2.0 * std::log2(alpha0);  // = 2/(n-2)
  out.C = alpha0 * alpha0 * theta_H0 * std::pow(H0, out.beta);

  for (double H : H_grid) {
    if (H < H0 * (1.0 - 1e-12))
      throw PreconditionError("decay curve: H grid must lie in [H0, inf)");
    out.H.push_back(H);
    out.envelope.push_back(out.C * std::pow(H, -out.beta));
    // Doubling iterate bound at the largest 2^k H0 <= H.
    const int k = std::max(0, static_cast<int>(std::floor(std::log2(H / H0))));
    out.iterate.push_back(std::pow(alpha0, -2.0 * k) * theta_H0);
  }
  for (size_t i = 0; i < out.H.size(); ++i) {
    const double ratio = out.H[i] / H0;
    const double pow2 = std::exp2(std::floor(std::log2(ratio)));
    // At the iterate abscissae the envelope dominates by the alpha0^2 slack.
    if (std::abs(ratio - pow2) < 1e-12 &&
        out.envelope[i] < out.iterate[i] * (1.0 - 1e-12))
      out.flags.push_back("envelope fails to dominate at H = " +
                          format_g17(out.H[i]));
  }
  return out;
}

ThetaBound monotone_envelope(std::vector<EnvelopePoint> bounds) {
  if (bounds.empty())
    throw PreconditionError("monotone envelope: nonempty list required");
  std::sort(bounds.begin(), bounds.end(),
            [](const EnvelopePoint& a, const EnvelopePoint& b) {
              return a.H < b.H;
            });
  ThetaBound out;
  out.kind = ThetaKind::UpperBound;
  out.provenance = "monotone-envelope";
  out.hypotheses.push_back("upper bounds comparable under H-monotonicity");
  double run = std::numeric_limits<double>::infinity();
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& p : bounds) {
    if (p.bound > prev)
      out.flags.push_back("monotonicity violated by raw pair H = " +
                          format_g17(p.H));
    prev = p.bound;
    run = std::min(run, p.bound);
    out.H.push_back(p.H);
    out.envelope.push_back(run);
  }
  out.value = run;
  return out;
}

ThetaBound fillin_lower_bound(int n, double minR, double maxH) {
  if (n < 3) throw PreconditionError("fill-in lower bound: n >= 3 required");
  if (!(maxH >= 0.0))
    throw PreconditionError("fill-in lower bound: max H >= 0 required");
  const double gap = minR - (n - 2.0) / (n - 1.0) * maxH * maxH;
  if (!(gap > 0.0))
    throw PreconditionError(
        "fill-in lower bound: hypothesis min R > (n-2)/(n-1) max H^2 violated");
  ThetaBound out;
  out.kind = ThetaKind::LowerBound;
  out.value = gap;
  out.provenance = "min-curvature-lower-bound";
  out.hypotheses.push_back("min R > (n-2)/(n-1) max H^2");
  out.flags.push_back(
      "dichotomy: the alternative theta = 0 (not attained) is not excluded");
  return out;
}

ThetaBound spectral_lower_bound(const SphereMetric& metric) {
  const Lambda1Result eig = lambda1(metric);
  if (!(eig.lambda > 0.0))
    throw PreconditionError("spectral lower bound: lambda1 must be positive");
  ThetaBound out;
  out.kind = ThetaKind::LowerBound;
  out.value = 2.0 * eig.lambda;
  out.provenance = "spectral-lower-bound";
  out.hypotheses.push_back("lambda1(-Lap + R/2) > 0");
  out.flags.push_back(
      "dichotomy: the alternative theta = 0 (not attained) is not excluded");

  // Cylinder verification: f1^2 dt^2 + gamma has R = 2 lambda1.
  const int M = 41;
  std::vector<double> t(M);
  for (int i = 0; i < M; ++i) t[i] = i / (M - 1.0);
  double defect = 0.0;
  if (metric.round_like()) {
    const double K = sqr(metric.round_radius());
    WarpedBand band = WarpedBand::round_band(
        metric.dim(), t, Vector::Constant(M, K),
        Matrix::Constant(M, 1, eig.eigenfunction[0]));
    const BandCurvature bc = fd_band_curvature(band);
    for (int i = 1; i + 1 < M; ++i)
      defect = std::max(defect,
                        (bc.R.row(i).array() - 2.0 * eig.lambda).abs().maxCoeff());
  } else {
    const int N = metric.grid_size();
    Matrix a(M, N), c(M, N), lapse(M, N);
    for (int i = 0; i < M; ++i) {
      a.row(i).setConstant(metric.component_a());
      c.row(i) = metric.component_c().transpose();
      lapse.row(i) = eig.eigenfunction.transpose();
    }
    WarpedBand band = WarpedBand::axisym_band(t, std::move(a), std::move(c),
                                              std::move(lapse));
    const BandCurvature bc = fd_band_curvature(band);
    for (int i = 1; i + 1 < M; ++i)
      defect = std::max(defect,
                        (bc.R.row(i).array() - 2.0 * eig.lambda).abs().maxCoeff());
  }
  if (defect > 1e-4)
    throw NumericalError(
        "spectral lower bound: cylinder curvature defect " + format_g17(defect));
  out.hypotheses.push_back("cylinder curvature defect " + format_g17(defect) +
                           " <= 1e-4");
  return out;
}

PscFillinCondition psc_fillin_condition(int n, double minR0,
                                        const ScalarField& H) {
  if (n < 3) throw PreconditionError("psc condition: n >= 3 required");
  if (!(minR0 > 0.0))
    throw PreconditionError("psc condition: min R_gamma0 > 0 required");
  if (H.size() == 0) throw PreconditionError("psc condition: empty H field");
  PscFillinCondition out;
  out.threshold = std::sqrt((n - 1.0) / (n - 2.0) * minR0);
  out.max_H = H.maxCoeff();
  out.admits = out.max_H < out.threshold;
  return out;
}

}  // namespace fillin
