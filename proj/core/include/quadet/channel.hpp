#pragma once

#include <complex>
#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "quadet/rng.hpp"

namespace quadet {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Relative tolerance for positive-definiteness checks.
inline constexpr double kRankTol = 1e-12;

double db_to_linear(double db);
double linear_to_db(double linear);

/// Statistical description of a SIMO link: N receive antennas, exponential
/// channel correlation rho and average SNR alpha = tr(C_h) / tr(C_z).
struct ChannelSpec {
  std::size_t n_antennas = 1;
  double rho = 0.0;
  double snr = 1.0;  ///< linear
  /// Noise covariance shape; rescaled to hit `snr`. Empty means white noise.
  std::optional<CMatrix> noise_covariance;

  static ChannelSpec white(std::size_t n, double rho, double snr_linear);
  static ChannelSpec white_db(std::size_t n, double rho, double snr_db);

  /// Throws ParameterError when a field is outside its domain.
  void validate() const;
};

/// C_h with [C_h]_{k,l} = rho^(l-k) for k <= l, Hermitian, unit diagonal.
CMatrix build_exponential_covariance(std::size_t n, double rho);

/// Channel and noise covariances. Immutable; both Cholesky factors are
/// computed once so physical-domain sampling is O(N^2) per draw.
class CovariancePair {
 public:
  /// Throws CovarianceError if c_z is not Hermitian positive definite or c_h
  /// is not Hermitian PSD.
  CovariancePair(CMatrix c_h, CMatrix c_z);

  const CMatrix& c_h() const { return c_h_; }
  const CMatrix& c_z() const { return c_z_; }
  /// Lower-triangular L_h with C_h = L_h L_h^H.
  const CMatrix& channel_factor() const { return chol_h_; }
  /// Lower-triangular L_z with C_z = L_z L_z^H.
  const CMatrix& noise_factor() const { return chol_z_; }

  std::size_t size() const { return static_cast<std::size_t>(c_h_.rows()); }
  /// tr(C_h) / tr(C_z).
  double snr() const;

 private:
  CMatrix c_h_;
  CMatrix c_z_;
  CMatrix chol_h_;
  CMatrix chol_z_;
};

CovariancePair build_covariance_pair(const ChannelSpec& spec);

/// Eigen-structure of the whitened channel C_z^{-1/2} C_h C_z^{-1/2} = U diag(gamma) U^H.
///
/// gamma is sorted descending; the whitener W = U^H C_z^{-1/2} maps y to the
/// decorrelated domain r = W y where r | eps ~ CN(0, eps diag(gamma) + I).
class Spectrum {
 public:
  Spectrum(RVector gamma, CMatrix u_basis, CMatrix whitener);

  /// A spectrum given directly in the whitened basis (U = W = I).
  static Spectrum from_gamma(RVector gamma);
  /// gamma = alpha * 1, the isotropic channel.
  static Spectrum isotropic(std::size_t n, double alpha);

  const RVector& gamma() const { return gamma_; }
  const CMatrix& u_basis() const { return u_; }
  const CMatrix& whitener() const { return w_; }
  std::size_t size() const { return static_cast<std::size_t>(gamma_.size()); }

  double trace() const { return gamma_.sum(); }
  double max_gamma() const;
  /// Number of eigenvalues above rel_tol * max(gamma).
  std::size_t significant_count(double rel_tol = kRankTol) const;
  bool is_isotropic(double rel_tol = 0.0) const;
  /// The same eigenbasis with every eigenvalue multiplied by `factor`.
  Spectrum scaled(double factor) const;

 private:
  RVector gamma_;
  CMatrix u_;
  CMatrix w_;
};

/// Eigendecomposes the whitened channel. Deterministic: eigenvalues are
/// stably sorted descending and each eigenvector is rotated so that its first
/// nonzero entry is real and positive. Throws SingularityError when c_z has
/// min eigenvalue <= kRankTol * max eigenvalue.
Spectrum decompose(const CovariancePair& pair);

/// r = W y.
CVector whiten(const Spectrum& spectrum, const CVector& y);

/// Draw r with r_n = sqrt(eps gamma_n + 1) g_n, g_n ~ CN(0, 1).
CVector sample_whitened(const Spectrum& spectrum, double energy, RngStream& rng);

struct PhysicalSample {
  CVector y;
  double h_norm_sq = 0.0;
};

/// y = h x + z with h ~ CN(0, C_h), z ~ CN(0, C_z).
PhysicalSample sample_physical(const CovariancePair& pair, std::complex<double> symbol,
                               RngStream& rng);

/// A whitened received vector together with its ground truth.
struct RxSample {
  CVector r;
  std::size_t true_symbol_index = 0;  ///< 0-based
  double true_channel_norm = 0.0;     ///< ||h||^2
};

}  // namespace quadet
