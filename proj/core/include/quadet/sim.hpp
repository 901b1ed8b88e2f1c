#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quadet/detect.hpp"

namespace quadet {

enum class SweepKind { kSnr, kAntennas, kRho };

std::string to_string(SweepKind kind);

struct OutageConfig {
  std::vector<double> zeta_grid;
  std::size_t n_channels = 500;
  std::uint64_t inner_trials = 20000;
};

/// One Monte Carlo experiment. The operating points are the Cartesian
/// product n_antennas x rho x snr_db, visited in that nesting order.
struct ExperimentSpec {
  std::vector<std::size_t> n_antennas{64};
  std::vector<double> rho{0.7};
  std::vector<double> snr_db{10.0};
  std::size_t mod_order = 8;
  std::vector<DetectorKind> detectors{DetectorKind::kEd};
  std::uint64_t trials = 10000;
  std::uint64_t seed = 0;
  /// Worker threads; 0 uses std::thread::hardware_concurrency().
  unsigned threads = 1;
  /// Trials per RNG block. Results depend on (seed, block_size) only.
  std::uint64_t block_size = 8192;
  std::optional<OutageConfig> outage;

  /// Throws ParameterError when a field is out of range.
  void validate() const;
  /// The swept axis: whichever grid has more than one value (SNR by default).
  SweepKind sweep() const;
};

struct GridPoint {
  std::size_t n = 0;
  double rho = 0.0;
  double snr_db = 0.0;
};

std::vector<GridPoint> grid_points(const ExperimentSpec& spec);

struct SerRow {
  DetectorKind detector = DetectorKind::kEd;
  double snr_db = 0.0;
  std::size_t n = 0;
  double rho = 0.0;
  std::size_t m = 0;
  std::uint64_t trials = 0;
  std::uint64_t errors = 0;
  double ser = 0.0;
  double stderr_ = 0.0;  ///< sqrt(ser (1 - ser) / trials)
  std::optional<double> analytic_ser;
};

struct SerResult {
  std::vector<SerRow> rows;  ///< grid-major, in the order of `detectors`
};

double standard_error(std::uint64_t errors, std::uint64_t trials);

/// Symbol error rates of every requested detector. All detectors see the same
/// samples (common random numbers). Deterministic in (spec.seed, spec.block_size)
/// for any thread count.
SerResult run_ser(const ExperimentSpec& spec);

struct ChannelSample {
  double h_norm_sq = 0.0;
  double cond_ser = 0.0;
};

struct OutageCurve {
  DetectorKind detector = DetectorKind::kEd;
  GridPoint point;
  std::size_t m = 0;
  std::vector<double> zeta;
  std::vector<double> p_out;
  std::vector<double> p_out_stderr;
  std::vector<ChannelSample> samples;  ///< one per channel realization
};

struct OutageResult {
  std::vector<OutageCurve> curves;  ///< grid-major, in the order of `detectors`
  std::vector<std::string> warnings;
};

/// Fraction of samples whose conditional SER exceeds zeta.
double outage_probability(const std::vector<ChannelSample>& samples, double zeta);

/// Outage curves: for each channel drawn from CN(0, C_h), the conditional SER
/// under the detectors' unconditional thresholds is estimated by inner Monte
/// Carlo. Requires spec.outage.
OutageResult run_outage(const ExperimentSpec& spec);

/// Running mean and central moments up to order four, mergeable in a fixed order.
class MomentAccumulator {
 public:
  void add(double x);
  void merge(const MomentAccumulator& other);

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance.
  double variance() const;
  double skewness() const;
  double excess_kurtosis() const;
  double stderr_mean() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

/// Moments of estimate(est, r) with r drawn at energy eps over `samples` draws.
MomentAccumulator sample_estimator(const QuadraticEstimator& est, const Spectrum& spectrum, double eps,
                                   std::uint64_t samples, std::uint64_t seed, std::uint64_t stream_tag,
                                   unsigned threads);

/// Empirical P(a -> b) of the pairwise ML test.
struct PepEstimate {
  std::uint64_t trials = 0;
  std::uint64_t errors = 0;
  double pep = 0.0;
  double stderr_ = 0.0;
};

PepEstimate simulate_pep(const Spectrum& spectrum, double eps_a, double eps_b, std::uint64_t trials,
                         std::uint64_t seed, std::uint64_t stream_tag, unsigned threads);

struct ValidationSpec {
  std::uint64_t seed = 0;
  std::size_t n = 64;
  double rho = 0.7;
  double snr_db = 10.0;
  std::size_t mod_order = 8;
  std::uint64_t samples = 50000;
  std::vector<std::size_t> clt_n{16, 64, 256, 1024};
  std::uint64_t clt_samples = 50000;
  std::vector<std::size_t> deflection_n{32, 64, 128, 256, 512};
  std::uint64_t pep_trials = 50000;
  unsigned threads = 1;

  void validate() const;
};

struct UnbiasednessRow {
  std::string estimator;
  double eps = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
  double z = 0.0;  ///< (mean - eps) / stderr
};

struct EfficiencyRow {
  double eps = 0.0;
  double empirical_var = 0.0;
  double crb = 0.0;
  double ratio = 0.0;
};

struct QmmseRow {
  double empirical_mse = 0.0;
  double analytic_mse = 0.0;
  double ratio = 0.0;
};

struct CltRow {
  std::size_t n = 0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double lyapunov = 0.0;
};

struct DeflectionRow {
  std::size_t n = 0;
  double eps_a = 0.0;
  double eps_b = 0.0;
  double delta = 0.0;
};

struct PepRow {
  double eps_a = 0.0;
  double eps_b = 0.0;
  double simulated = 0.0;
  double stderr_ = 0.0;
  double cantelli = 0.0;
  double chisq_lower = 0.0;
  double chisq_upper = 0.0;
};

struct ValidationReport {
  ValidationSpec spec;
  std::vector<UnbiasednessRow> unbiasedness;
  std::vector<EfficiencyRow> efficiency;  ///< BQUE(eps) for every symbol energy
  QmmseRow qmmse;
  std::vector<CltRow> clt;  ///< ED at the largest symbol energy
  std::vector<DeflectionRow> deflection;
  std::vector<PepRow> pep;  ///< adjacent symbol pairs, both directions
};

/// Sampling checks of the estimators and bounds at one operating point.
ValidationReport run_estimator_validation(const ValidationSpec& spec);

}  // namespace quadet
