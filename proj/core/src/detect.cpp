#include "quadet/detect.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "quadet/error.hpp"

namespace quadet {

namespace {

constexpr double kQuadTol = 1e-14;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return s;
}

}  // namespace

MlDetector::MlDetector(const Spectrum& spectrum, const Constellation& constellation) : n_(spectrum.size()) {
  const auto& g = spectrum.gamma();
  inv_.resize(constellation.size() * n_);
  log_det_.resize(constellation.size());
  for (std::size_t i = 0; i < constellation.size(); ++i) {
    const double eps = constellation.energy(i);
    double ld = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      const double c = eps * g(static_cast<Eigen::Index>(k)) + 1.0;
      inv_[i * n_ + k] = 1.0 / c;
      ld += std::log(c);
    }
    log_det_[i] = ld;
  }
}

double MlDetector::metric(std::size_t i, const double* power) const {
  const double* w = inv_.data() + i * n_;
  double acc = 0.0;
  for (std::size_t k = 0; k < n_; ++k) acc += w[k] * power[k];
  return acc + log_det_[i];
}

Decision MlDetector::detect_power(const double* power) const {
  Decision d{0, metric(0, power)};
  for (std::size_t i = 1; i < symbols(); ++i) {
    const double m = metric(i, power);
    if (m < d.statistic) d = {i, m};
  }
  return d;
}

Decision MlDetector::detect(const CVector& r) const {
  if (static_cast<std::size_t>(r.size()) != n_) throw DimensionError("received vector length does not match");
  const RVector power = r.cwiseAbs2();
  return detect_power(power.data());
}

Decision ml_detect(const Spectrum& spectrum, const Constellation& constellation, const CVector& r) {
  return MlDetector(spectrum, constellation).detect(r);
}

Decision ml_detect_isotropic(double alpha, std::size_t n, const Constellation& constellation, double norm_sq) {
  const double nn = static_cast<double>(n);
  Decision d{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < constellation.size(); ++i) {
    const double c = constellation.energy(i) * alpha + 1.0;
    const double m = norm_sq / c + nn * std::log(c);
    if (m < d.statistic) d = {i, m};
  }
  return d;
}

double normal_intersection(double mu1, double mu2, double var1, double var2) {
  if (!(var1 > 0.0) || !(var2 > 0.0)) throw ParameterError("variances must be positive");
  if (!(mu1 < mu2)) throw ParameterError("means must be strictly ascending");
  // log N(t; mu1, var1) = log N(t; mu2, var2)  <=>  a t^2 + b t + c = 0.
  const double a = 1.0 / var2 - 1.0 / var1;
  const double b = 2.0 * (mu1 / var1 - mu2 / var2);
  const double c = mu2 * mu2 / var2 - mu1 * mu1 / var1 + std::log(var2 / var1);

  if (std::abs(a) < kQuadTol * std::max(1.0 / var1, 1.0 / var2)) return -c / b;

  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) throw GeometryError("Gaussian likelihoods do not intersect");
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  const double r1 = q / a;
  const double r2 = q != 0.0 ? c / q : r1;
  return std::max(r1, r2);
}

std::vector<EstimatorStats> symbol_stats(const QuadraticEstimator& est, const Spectrum& spectrum,
                                         const Constellation& constellation) {
  std::vector<EstimatorStats> out;
  out.reserve(constellation.size());
  for (double eps : constellation.energies()) out.push_back(cond_stats(est, spectrum, eps));
  return out;
}

ThresholdSet compute_thresholds(const QuadraticEstimator& est, const Spectrum& spectrum,
                                const Constellation& constellation) {
  if (!check_identifiable(constellation)) {
    throw IdentifiabilityError("constellation has repeated energies");
  }
  const auto stats = symbol_stats(est, spectrum, constellation);
  ThresholdSet out;
  out.estimator_kind = est.kind;
  out.label = est.label();
  out.taus.reserve(stats.size() - 1);
  for (std::size_t i = 0; i + 1 < stats.size(); ++i) {
    if (!(stats[i].cond_mean < stats[i + 1].cond_mean)) {
      throw DegenerateError(est.label() + ": conditional means are not ascending");
    }
    out.taus.push_back(normal_intersection(stats[i].cond_mean, stats[i + 1].cond_mean, stats[i].cond_var,
                                           stats[i + 1].cond_var));
  }
  for (std::size_t i = 1; i < out.taus.size(); ++i) {
    if (!(out.taus[i - 1] < out.taus[i])) {
      throw DegenerateError(est.label() + ": thresholds are not ascending");
    }
  }
  return out;
}

std::size_t classify_value(const ThresholdSet& thresholds, double value) {
  const auto& t = thresholds.taus;
  return static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), value) - t.begin());
}

Decision classify(const QuadraticEstimator& est, const ThresholdSet& thresholds, const CVector& r) {
  const double v = estimate(est, r);
  return {classify_value(thresholds, v), v};
}

Decision classify_power(const QuadraticEstimator& est, const ThresholdSet& thresholds, const double* power) {
  const double v = estimate_from_power(est, power);
  return {classify_value(thresholds, v), v};
}

BqueBank BqueBank::build(const Spectrum& spectrum, const Constellation& constellation) {
  BqueBank bank;
  bank.estimators.reserve(constellation.size());
  bank.thresholds.reserve(constellation.size());
  for (double eps : constellation.energies()) {
    bank.estimators.push_back(build_bque(spectrum, eps));
    bank.thresholds.push_back(compute_thresholds(bank.estimators.back(), spectrum, constellation));
  }
  return bank;
}

Decision abque_detect(const QuadraticEstimator& ed, const ThresholdSet& ed_thresholds, const BqueBank& bank,
                      const CVector& r) {
  const std::size_t j = classify(ed, ed_thresholds, r).symbol_index;
  return classify(bank.estimators[j], bank.thresholds[j], r);
}

Decision abque_detect_power(const QuadraticEstimator& ed, const ThresholdSet& ed_thresholds,
                            const BqueBank& bank, const double* power) {
  const std::size_t j = classify_power(ed, ed_thresholds, power).symbol_index;
  return classify_power(bank.estimators[j], bank.thresholds[j], power);
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

namespace {

double symbol_error(const EstimatorStats& s, const ThresholdSet& thresholds, std::size_t i) {
  const double sd = std::sqrt(s.cond_var);
  double p = 0.0;
  if (i > 0) p += q_function((s.cond_mean - thresholds.taus[i - 1]) / sd);
  if (i < thresholds.taus.size()) p += q_function((thresholds.taus[i] - s.cond_mean) / sd);
  return p;
}

}  // namespace

SerPrediction analytic_ser(const QuadraticEstimator& est, const Spectrum& spectrum,
                           const Constellation& constellation, const ThresholdSet& thresholds) {
  if (thresholds.taus.size() + 1 != constellation.size()) {
    throw DimensionError("threshold count must be M - 1");
  }
  const auto stats = symbol_stats(est, spectrum, constellation);
  SerPrediction out;
  out.per_symbol.reserve(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) out.per_symbol.push_back(symbol_error(stats[i], thresholds, i));
  double sum = 0.0;
  for (double p : out.per_symbol) sum += p;
  out.total = sum / static_cast<double>(stats.size());
  return out;
}

SerPrediction analytic_ser_genie(const BqueBank& bank, const Spectrum& spectrum,
                                 const Constellation& constellation) {
  if (bank.size() != constellation.size()) throw DimensionError("bank size must equal M");
  SerPrediction out;
  double sum = 0.0;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto s = cond_stats(bank.estimators[i], spectrum, constellation.energy(i));
    out.per_symbol.push_back(symbol_error(s, bank.thresholds[i], i));
    sum += out.per_symbol.back();
  }
  out.total = sum / static_cast<double>(bank.size());
  return out;
}

std::string to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kMl: return "ml";
    case DetectorKind::kEd: return "ed";
    case DetectorKind::kHsnr: return "hsnr";
    case DetectorKind::kBqueGenie: return "bque";
    case DetectorKind::kQmmse: return "qmmse";
    case DetectorKind::kAbque: return "abque";
  }
  return "?";
}

DetectorKind parse_detector(const std::string& name) {
  const std::string s = lower(name);
  if (s == "ml") return DetectorKind::kMl;
  if (s == "ed") return DetectorKind::kEd;
  if (s == "hsnr") return DetectorKind::kHsnr;
  if (s == "bque" || s == "bque_genie") return DetectorKind::kBqueGenie;
  if (s == "qmmse") return DetectorKind::kQmmse;
  if (s == "abque") return DetectorKind::kAbque;
  throw ParameterError("unknown detector '" + name + "'");
}

bool is_quadratic(DetectorKind kind) { return kind != DetectorKind::kMl; }

DetectorSet::DetectorSet(const Spectrum& spectrum, const Constellation& constellation,
                         std::vector<DetectorKind> kinds)
    : kinds_(std::move(kinds)) {
  if (kinds_.empty()) throw ParameterError("detector set is empty");
  if (has(DetectorKind::kMl)) ml_.emplace(spectrum, constellation);
  // ED is always built: ABQUE uses it as the first stage.
  ed_ = build_ed(spectrum);
  ed_tau_ = compute_thresholds(ed_, spectrum, constellation);
  if (has(DetectorKind::kHsnr)) {
    hsnr_ = build_hsnr(spectrum);
    hsnr_tau_ = compute_thresholds(*hsnr_, spectrum, constellation);
  }
  if (has(DetectorKind::kQmmse)) {
    qmmse_ = build_qmmse(spectrum, constellation);
    qmmse_tau_ = compute_thresholds(*qmmse_, spectrum, constellation);
  }
  if (has(DetectorKind::kBqueGenie) || has(DetectorKind::kAbque)) {
    bank_ = BqueBank::build(spectrum, constellation);
  }
  for (DetectorKind k : kinds_) {
    switch (k) {
      case DetectorKind::kEd:
        analytic_.push_back(analytic_ser(ed_, spectrum, constellation, ed_tau_).total);
        break;
      case DetectorKind::kHsnr:
        analytic_.push_back(analytic_ser(*hsnr_, spectrum, constellation, hsnr_tau_).total);
        break;
      case DetectorKind::kQmmse:
        analytic_.push_back(analytic_ser(*qmmse_, spectrum, constellation, qmmse_tau_).total);
        break;
      case DetectorKind::kBqueGenie:
        analytic_.push_back(analytic_ser_genie(bank_, spectrum, constellation).total);
        break;
      case DetectorKind::kMl:
      case DetectorKind::kAbque:
        analytic_.push_back(std::nullopt);
        break;
    }
  }
}

bool DetectorSet::has(DetectorKind kind) const {
  return std::find(kinds_.begin(), kinds_.end(), kind) != kinds_.end();
}

std::size_t DetectorSet::decide(DetectorKind kind, const double* power, std::size_t true_symbol) const {
  switch (kind) {
    case DetectorKind::kMl: return ml_->detect_power(power).symbol_index;
    case DetectorKind::kEd: return classify_power(ed_, ed_tau_, power).symbol_index;
    case DetectorKind::kHsnr: return classify_power(*hsnr_, hsnr_tau_, power).symbol_index;
    case DetectorKind::kQmmse: return classify_power(*qmmse_, qmmse_tau_, power).symbol_index;
    case DetectorKind::kBqueGenie:
      return classify_power(bank_.estimators[true_symbol], bank_.thresholds[true_symbol], power).symbol_index;
    case DetectorKind::kAbque: return abque_detect_power(ed_, ed_tau_, bank_, power).symbol_index;
  }
  return 0;
}

std::optional<double> DetectorSet::analytic(DetectorKind kind) const {
  for (std::size_t i = 0; i < kinds_.size(); ++i) {
    if (kinds_[i] == kind) return analytic_[i];
  }
  return std::nullopt;
}

}  // namespace quadet
