#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "quadet/channel.hpp"
#include "quadet/constellation.hpp"
#include "quadet/quadform.hpp"

namespace quadet {

/// Decision boundaries tau_1 < ... < tau_{M-1} on the energy-estimate axis.
struct ThresholdSet {
  std::vector<double> taus;
  EstimatorKind estimator_kind = EstimatorKind::kEd;
  std::string label;
};

struct Decision {
  std::size_t symbol_index = 0;  ///< 0-based
  /// Energy estimate for quadratic detectors, minimum metric for ML.
  double statistic = 0.0;
};

/// Unconditional ML detector: argmin_i sum_n |r_n|^2 / (eps_i gamma_n + 1) + log(eps_i gamma_n + 1).
/// Per-symbol weights and log-determinants are precomputed; ties go to the
/// lower-energy symbol.
class MlDetector {
 public:
  MlDetector(const Spectrum& spectrum, const Constellation& constellation);

  Decision detect(const CVector& r) const;
  /// Same decision from the powers |r_n|^2 (length size()).
  Decision detect_power(const double* power) const;
  /// Metric of symbol i.
  double metric(std::size_t i, const double* power) const;

  std::size_t size() const { return n_; }
  std::size_t symbols() const { return log_det_.size(); }

 private:
  std::size_t n_ = 0;
  std::vector<double> inv_;  // symbols x n, row-major
  std::vector<double> log_det_;
};

Decision ml_detect(const Spectrum& spectrum, const Constellation& constellation, const CVector& r);

/// ML over an isotropic channel gamma = alpha 1, which depends on r only
/// through ||r||^2: argmin_i ||r||^2 / (eps_i alpha + 1) + N log(eps_i alpha + 1).
Decision ml_detect_isotropic(double alpha, std::size_t n, const Constellation& constellation,
                             double norm_sq);

/// Larger intersection point of the N(mu1, var1) and N(mu2, var2) densities.
/// Equal variances (|a| < 1e-14 relative) fall back to the linear root.
/// Throws ParameterError on a bad input, GeometryError when the densities
/// never cross.
double normal_intersection(double mu1, double mu2, double var1, double var2);

/// Gaussian-limit moments of the estimate under each symbol.
std::vector<EstimatorStats> symbol_stats(const QuadraticEstimator& est, const Spectrum& spectrum,
                                         const Constellation& constellation);

/// Thresholds between the Gaussian likelihoods of adjacent symbols. Throws
/// IdentifiabilityError for repeated energies and DegenerateError when the
/// means or the resulting thresholds are not strictly ascending.
ThresholdSet compute_thresholds(const QuadraticEstimator& est, const Spectrum& spectrum,
                                const Constellation& constellation);

/// Index of the decision interval containing `value`; a value equal to a
/// threshold falls in the lower interval.
std::size_t classify_value(const ThresholdSet& thresholds, double value);

Decision classify(const QuadraticEstimator& est, const ThresholdSet& thresholds, const CVector& r);
Decision classify_power(const QuadraticEstimator& est, const ThresholdSet& thresholds, const double* power);

/// One BQUE per symbol energy, each with its own thresholds.
struct BqueBank {
  std::vector<QuadraticEstimator> estimators;
  std::vector<ThresholdSet> thresholds;

  static BqueBank build(const Spectrum& spectrum, const Constellation& constellation);
  std::size_t size() const { return estimators.size(); }
};

/// Two-stage detector: the ED decision j selects bank entry j, which makes
/// the final decision.
Decision abque_detect(const QuadraticEstimator& ed, const ThresholdSet& ed_thresholds, const BqueBank& bank,
                      const CVector& r);
Decision abque_detect_power(const QuadraticEstimator& ed, const ThresholdSet& ed_thresholds,
                            const BqueBank& bank, const double* power);

/// Q(x) = erfc(x / sqrt(2)) / 2.
double q_function(double x);

struct SerPrediction {
  double total = 0.0;
  /// Error probability conditioned on each transmitted symbol.
  std::vector<double> per_symbol;
};

/// Gaussian-tail SER of a threshold detector. The thresholds need not come
/// from `est`.
SerPrediction analytic_ser(const QuadraticEstimator& est, const Spectrum& spectrum,
                           const Constellation& constellation, const ThresholdSet& thresholds);

/// SER of the genie detector that knows the transmitted symbol i and uses
/// bank entry i.
SerPrediction analytic_ser_genie(const BqueBank& bank, const Spectrum& spectrum,
                                 const Constellation& constellation);

enum class DetectorKind { kMl, kEd, kHsnr, kBqueGenie, kQmmse, kAbque };

std::string to_string(DetectorKind kind);
/// Accepts "ml", "ed", "hsnr", "bque", "bque_genie", "qmmse", "abque" (any case).
DetectorKind parse_detector(const std::string& name);
bool is_quadratic(DetectorKind kind);

/// Every detector prepared once for a (spectrum, constellation) pair.
/// Immutable after construction and safe to share across threads.
class DetectorSet {
 public:
  DetectorSet(const Spectrum& spectrum, const Constellation& constellation, std::vector<DetectorKind> kinds);

  const std::vector<DetectorKind>& kinds() const { return kinds_; }
  /// Decision of detector `kind` given the true symbol (used only by the genie).
  std::size_t decide(DetectorKind kind, const double* power, std::size_t true_symbol) const;
  /// Analytic SER for detectors that have one (all but ML and ABQUE).
  std::optional<double> analytic(DetectorKind kind) const;

  const QuadraticEstimator& ed() const { return ed_; }
  const ThresholdSet& ed_thresholds() const { return ed_tau_; }
  const BqueBank& bank() const { return bank_; }

 private:
  bool has(DetectorKind kind) const;

  std::vector<DetectorKind> kinds_;
  std::optional<MlDetector> ml_;
  QuadraticEstimator ed_;
  ThresholdSet ed_tau_;
  std::optional<QuadraticEstimator> hsnr_;
  ThresholdSet hsnr_tau_;
  std::optional<QuadraticEstimator> qmmse_;
  ThresholdSet qmmse_tau_;
  BqueBank bank_;
  std::vector<std::optional<double>> analytic_;
};

}  // namespace quadet
