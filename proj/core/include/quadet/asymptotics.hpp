#pragma once

#include <cstddef>
#include <cstdint>

#include "quadet/channel.hpp"
#include "quadet/constellation.hpp"
#include "quadet/detect.hpp"

namespace quadet {

/// A hypothesis pair (eps_a sent, eps_b competing) over one spectrum, with
/// lambda_n = (eps_a gamma_n + 1) / (eps_b gamma_n + 1).
struct PairwiseContext {
  double eps_a = 0.0;
  double eps_b = 0.0;
  RVector gamma;
  RVector lambdas;

  static PairwiseContext make(const Spectrum& spectrum, double eps_a, double eps_b);
};

/// eta(x) = x - 1 - log(x), evaluated without cancellation near x = 1.
double eta(double x);

struct DeflectionResult {
  double delta = 0.0;
  /// Cantelli bound on the pairwise error probability, 1 / (1 + delta).
  double cantelli_bound = 1.0;
};

/// delta = [sum eta(lambda_n)]^2 / sum (lambda_n - 1)^2. Throws
/// IdentifiabilityError when every lambda_n equals 1.
DeflectionResult deflection(const PairwiseContext& ctx);

/// Pairwise log-likelihood ratio L = metric_b - metric_a computed from the
/// powers |r_n|^2. The pairwise error a -> b occurs when L <= 0.
double pairwise_llr(const PairwiseContext& ctx, const double* power);

struct PepBounds {
  double lower = 0.0;
  double upper = 0.0;
  double log_lower = 0.0;
  double log_upper = 0.0;
  /// True when the error region is the inside of the ellipsoid (eps_a > eps_b).
  bool inside = true;
  double omega_min = 0.0;
  double omega_max = 0.0;
};

/// Chi-squared bounds on P(a -> b) obtained by replacing the Gaussian over
/// the (ball-mapped) error region with the isotropic Gaussians of the
/// smallest and largest Omega eigenvalue. Evaluated in the log domain.
/// Throws ParameterError when eps_a == eps_b and IdentifiabilityError when K
/// is not positive definite.
PepBounds pep_chisq_bounds(const Spectrum& spectrum, double eps_a, double eps_b);

/// log of the regularized lower incomplete gamma P(s, x), accurate when P underflows.
double log_gamma_p(double s, double x);
/// log of the regularized upper incomplete gamma Q(s, x).
double log_gamma_q(double s, double x);

struct FloorOptions {
  double snr_db = 30.0;
  /// Monte Carlo trials for detectors without an analytic SER (ML, ABQUE).
  std::uint64_t mc_trials = 100000;
  std::uint64_t seed = 1;
};

/// Error-floor proxy: the SER at a large fixed SNR. Analytic SER for the
/// threshold detectors, serial Monte Carlo for ML and ABQUE.
double floor_estimate(DetectorKind detector, const Spectrum& spectrum, const Constellation& constellation,
                      const FloorOptions& options = {});
/// Same, building a white-noise exponential-correlation spectrum at options.snr_db.
double floor_estimate(DetectorKind detector, std::size_t n, double rho, const Constellation& constellation,
                      const FloorOptions& options = {});

/// 9 sum a_n^4 (eps gamma_n + 1)^4 / [sum a_n^2 (eps gamma_n + 1)^2]^2, the
/// fourth-order Lyapunov ratio of the estimate. Throws DegenerateError for a
/// zero denominator.
double lyapunov_ratio(const RVector& a_diag, const RVector& gamma, double eps);

/// Number of eigenvalues above rel_tol * max(gamma), the effective rank.
std::size_t theta_count(const Spectrum& spectrum, double rel_tol = kRankTol);

}  // namespace quadet
