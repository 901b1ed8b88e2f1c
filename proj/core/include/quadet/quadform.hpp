#pragma once

#include <optional>
#include <string>

#include "quadet/channel.hpp"
#include "quadet/constellation.hpp"

namespace quadet {

enum class EstimatorKind { kEd, kHsnr, kBque, kQmmse };

std::string to_string(EstimatorKind kind);

/// Diagonal quadratic energy estimator eps_hat(r) = sum_n a_n |r_n|^2 + c,
/// expressed in the whitened basis.
///
/// All built-in builders fix c = 1 - sum_n a_n (gamma_n + 1), which for the
/// unbiased kinds (ED, HSNR, BQUE) equals -tr(A) because tr(A Gamma) = 1.
struct QuadraticEstimator {
  RVector a_diag;
  double c_affine = 0.0;
  EstimatorKind kind = EstimatorKind::kEd;
  /// BQUE: the energy the estimator was tuned for. QMMSE: the prior variance.
  double parameter = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(a_diag.size()); }
  /// sum_n a_n gamma_n.
  double trace_a_gamma(const Spectrum& spectrum) const;
  std::string label() const;
};

struct QuadformMoments {
  double mean = 0.0;
  double variance = 0.0;
  double second_moment = 0.0;
};

/// Moments of q = z^H diag(a) z + c with z ~ CN(0, diag(cov)).
QuadformMoments quadform_moments(const RVector& a_diag, double c, const RVector& cov_diag);

/// A = I / tr(Gamma).
QuadraticEstimator build_ed(const Spectrum& spectrum);
/// A = Gamma^{-1} / N. Throws SingularityError if some gamma_n < 1e-12 max(gamma).
QuadraticEstimator build_hsnr(const Spectrum& spectrum);
/// Genie-aided best quadratic unbiased estimator tuned for `eps_assumed`:
/// A = Gamma C^{-2} / ||Gamma C^{-1}||_F^2 with C = eps Gamma + I.
QuadraticEstimator build_bque(const Spectrum& spectrum, double eps_assumed);
/// Bayesian quadratic MMSE estimator for a prior of variance sigma_eps_sq:
/// A = s Gamma Cq^{-2} / (1 + s ||Gamma Cq^{-1}||_F^2), Cq^2 = (s+1) Gamma^2 + 2 Gamma + I.
QuadraticEstimator build_qmmse(const Spectrum& spectrum, double sigma_eps_sq);
/// QMMSE with sigma_eps_sq taken from the constellation's uniform prior.
QuadraticEstimator build_qmmse(const Spectrum& spectrum, const Constellation& constellation);

double estimate(const QuadraticEstimator& est, const CVector& r);
/// Same as estimate() from precomputed powers |r_n|^2.
double estimate_from_power(const QuadraticEstimator& est, const double* power);

/// 1 / sum_n (gamma_n / (eps gamma_n + 1))^2. Throws SingularityError for an
/// all-zero spectrum.
double crb(const Spectrum& spectrum, double eps);

struct EstimatorStats {
  double cond_mean = 0.0;
  double cond_var = 0.0;
  double bias = 0.0;
  /// Average MSE under the prior; only set for QMMSE.
  std::optional<double> mse_avg;
};

/// Conditional moments of eps_hat given eps (Gaussian-limit parameters):
/// mean eps tr(A Gamma) + tr(A) + c, which is 1 - (1 - eps) tr(A Gamma) under
/// the builders' c convention; variance sum_n a_n^2 (eps gamma_n + 1)^2.
EstimatorStats cond_stats(const QuadraticEstimator& est, const Spectrum& spectrum, double eps);

/// sigma^2 / (1 + sigma^2 ||Gamma Cq^{-1}||_F^2), the mean MSE the QMMSE reaches.
double qmmse_mse_avg(const Spectrum& spectrum, double sigma_eps_sq);

/// E_eps E[(eps_hat - eps)^2 | eps] for an arbitrary estimator under a prior
/// with unit mean and variance sigma_eps_sq.
double average_mse(const QuadraticEstimator& est, const Spectrum& spectrum, double sigma_eps_sq);

}  // namespace quadet
