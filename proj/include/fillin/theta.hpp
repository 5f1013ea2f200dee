#pragma once

// Bound calculus for the fill-in invariant theta(Sigma, gamma, H): closed
// forms on round data, the amplification factor, uniform-decay constants,
// the exponential-decay envelope, monotone envelopes of upper bounds, and
// the lower-bound records with their dichotomy flags.

#include "fillin/manifold.hpp"

#include <string>
#include <vector>

namespace fillin {

enum class ThetaKind { ClosedForm, LowerBound, UpperBound, DecayCurve };

struct ThetaBound {
  ThetaKind kind = ThetaKind::ClosedForm;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> H;         // DecayCurve support
  std::vector<double> envelope;  // C H^{-beta} at the H nodes
  std::vector<double> iterate;   // doubling-sequence bound where defined
  std::string provenance;
  std::vector<std::string> hypotheses;  // checked inequalities
  std::vector<std::string> flags;       // dichotomy / monotonicity notes
  double beta = 0.0, C = 0.0;           // DecayCurve parameters
};

/// Closed forms on round data: 2(1 - H^2) for circles (0 <= H < 1) and
/// 6(1 - H^2/4) for round 2-spheres (H >= 2).
ThetaBound theta_closed_form(int n, double H);

/// Amplification factor alpha > 1 with theta(lambda) <= alpha^{-2} theta(1);
/// returns the trivial branch alpha = 2 when theta_lambda <= 0.
double amplification(int n, double lambda, double theta_lambda);

struct UniformDecayConstants {
  double theta0 = 0.0;
  double alpha0 = 0.0;
  double certificate = 0.0;  // 4 (1 - c_mu(theta0)) - 2, checked to 1e-10
};

/// alpha0 = 2^{1/(n-2)} and the largest theta0 with c_mu(theta0) <= 1/2 for
/// the lambda = 2 instance of mu(theta).
UniformDecayConstants uniform_decay_constants(int n);

/// mu(theta) at lambda = 2: (n-1)/n (theta + 4n/(n-1))^{2/n} theta^{1-2/n}.
double uniform_decay_mu(int n, double theta);

/// Decay envelope C H^{-beta}, beta = 2/(n-2), C = alpha0^2 theta_H0 H0^beta,
/// together with the doubling iterates alpha0^{-2k} theta_H0 at H = 2^k H0.
ThetaBound decay_curve(int n, double H0, double theta_H0,
                       const std::vector<double>& H_grid);

struct EnvelopePoint {
  double H = 0.0;
  double bound = 0.0;
};

/// Tightest non-increasing envelope consistent with monotonicity in H;
/// raw pairs violating monotonicity are flagged.
ThetaBound monotone_envelope(std::vector<EnvelopePoint> bounds);

/// Lower bound min R - (n-2)/(n-1) max H^2, recorded with the dichotomy flag
/// (the alternative "theta = 0 and not attained" cannot be excluded).
ThetaBound fillin_lower_bound(int n, double minR, double maxH);

/// Spectral lower bound 2 lambda1(-Lap + R/2) for H = 0, with the cylinder
/// verification that f1^2 dt^2 + gamma has scalar curvature 2 lambda1.
ThetaBound spectral_lower_bound(const SphereMetric& metric);

struct PscFillinCondition {
  bool admits = false;
  double threshold = 0.0;  // ((n-1)/(n-2) min R)^{1/2}
  double max_H = 0.0;
};

/// PSC fill-in condition max H < ((n-1)/(n-2) min R_gamma0)^{1/2} (strict).
PscFillinCondition psc_fillin_condition(int n, double minR0,
                                        const ScalarField& H);

}  // namespace fillin
