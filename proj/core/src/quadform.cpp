#include "quadet/quadform.hpp"

#include <cmath>
#include <sstream>

#include "quadet/error.hpp"

namespace quadet {

namespace {

constexpr double kSingularTol = 1e-12;

void require_same_size(const RVector& a, const Spectrum& s) {
  if (static_cast<std::size_t>(a.size()) != s.size()) {
    throw DimensionError("estimator and spectrum dimensions differ");
  }
}

QuadraticEstimator finish(RVector a, const Spectrum& spectrum, EstimatorKind kind, double parameter) {
  QuadraticEstimator est;
  est.c_affine = 1.0 - (a.array() * (spectrum.gamma().array() + 1.0)).sum();
  est.a_diag = std::move(a);
  est.kind = kind;
  est.parameter = parameter;
  return est;
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kEd: return "ED";
    case EstimatorKind::kHsnr: return "HSNR";
    case EstimatorKind::kBque: return "BQUE";
    case EstimatorKind::kQmmse: return "QMMSE";
  }
  return "?";
}

double QuadraticEstimator::trace_a_gamma(const Spectrum& spectrum) const {
  require_same_size(a_diag, spectrum);
  return a_diag.dot(spectrum.gamma());
}

std::string QuadraticEstimator::label() const {
  if (kind != EstimatorKind::kBque) return to_string(kind);
  std::ostringstream os;
  os << "BQUE(" << parameter << ")";
  return os.str();
}

QuadformMoments quadform_moments(const RVector& a_diag, double c, const RVector& cov_diag) {
  if (a_diag.size() != cov_diag.size()) throw DimensionError("quadratic form and covariance sizes differ");
  if ((cov_diag.array() <= 0.0).any()) throw ParameterError("covariance diagonal must be positive");
  QuadformMoments m;
  const auto weighted = (a_diag.array() * cov_diag.array()).eval();
  m.mean = weighted.sum() + c;
  m.variance = weighted.square().sum();
  m.second_moment = m.variance + m.mean * m.mean;
  return m;
}

QuadraticEstimator build_ed(const Spectrum& spectrum) {
  const double tr = spectrum.trace();
  if (!(tr > 0.0)) throw SingularityError("energy detector needs tr(Gamma) > 0");
  RVector a = RVector::Constant(spectrum.gamma().size(), 1.0 / tr);
  return finish(std::move(a), spectrum, EstimatorKind::kEd, 0.0);
}

QuadraticEstimator build_hsnr(const Spectrum& spectrum) {
  const auto& g = spectrum.gamma();
  const double cut = kSingularTol * spectrum.max_gamma();
  if (!(g.minCoeff() > 0.0) || g.minCoeff() < cut) {
    throw SingularityError("high-SNR statistic needs a full-rank spectrum");
  }
  const double n = static_cast<double>(g.size());
  RVector a = (n * g.array()).inverse().matrix();
  return finish(std::move(a), spectrum, EstimatorKind::kHsnr, 0.0);
}

QuadraticEstimator build_bque(const Spectrum& spectrum, double eps_assumed) {
  if (!(eps_assumed >= 0.0)) throw ParameterError("BQUE energy must be nonnegative");
  const auto g = spectrum.gamma().array();
  const auto c = (eps_assumed * g + 1.0).eval();
  const double fisher = (g / c).square().sum();
  if (!(fisher > 0.0)) throw SingularityError("BQUE needs a nonzero spectrum");
  RVector a = (g / c.square() / fisher).matrix();
  return finish(std::move(a), spectrum, EstimatorKind::kBque, eps_assumed);
}

QuadraticEstimator build_qmmse(const Spectrum& spectrum, double sigma_eps_sq) {
  if (!(sigma_eps_sq > 0.0)) throw ParameterError("QMMSE prior variance must be positive");
  const auto g = spectrum.gamma().array();
  const auto cq2 = ((sigma_eps_sq + 1.0) * g.square() + 2.0 * g + 1.0).eval();
  const double norm = (g.square() / cq2).sum();
  RVector a = (sigma_eps_sq * g / cq2 / (1.0 + sigma_eps_sq * norm)).matrix();
  return finish(std::move(a), spectrum, EstimatorKind::kQmmse, sigma_eps_sq);
}

QuadraticEstimator build_qmmse(const Spectrum& spectrum, const Constellation& constellation) {
  return build_qmmse(spectrum, constellation.energy_variance());
}

double estimate(const QuadraticEstimator& est, const CVector& r) {
  if (static_cast<std::size_t>(r.size()) != est.size()) {
    throw DimensionError("received vector length does not match the estimator");
  }
  return est.a_diag.dot(r.cwiseAbs2()) + est.c_affine;
}

double estimate_from_power(const QuadraticEstimator& est, const double* power) {
  const auto n = est.a_diag.size();
  const double* a = est.a_diag.data();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) acc += a[k] * power[k];
  return acc + est.c_affine;
}

double crb(const Spectrum& spectrum, double eps) {
  const auto g = spectrum.gamma().array();
  const double fisher = (g / (eps * g + 1.0)).square().sum();
  if (!(fisher > 0.0)) throw SingularityError("CRB undefined for an all-zero spectrum");
  return 1.0 / fisher;
}

EstimatorStats cond_stats(const QuadraticEstimator& est, const Spectrum& spectrum, double eps) {
  require_same_size(est.a_diag, spectrum);
  const auto g = spectrum.gamma().array();
  const auto a = est.a_diag.array();
  EstimatorStats s;
  s.cond_mean = eps * (a * g).sum() + a.sum() + est.c_affine;
  s.cond_var = (a * (eps * g + 1.0)).square().sum();
  s.bias = s.cond_mean - eps;
  if (est.kind == EstimatorKind::kQmmse) s.mse_avg = qmmse_mse_avg(spectrum, est.parameter);
  return s;
}

double qmmse_mse_avg(const Spectrum& spectrum, double sigma_eps_sq) {
  const auto g = spectrum.gamma().array();
  const auto cq2 = ((sigma_eps_sq + 1.0) * g.square() + 2.0 * g + 1.0).eval();
  const double norm = (g.square() / cq2).sum();
  return sigma_eps_sq / (1.0 + sigma_eps_sq * norm);
}

double average_mse(const QuadraticEstimator& est, const Spectrum& spectrum, double sigma_eps_sq) {
  require_same_size(est.a_diag, spectrum);
  const auto g = spectrum.gamma().array();
  const auto a = est.a_diag.array();
  const double t = (a * g).sum();
  const double offset = a.sum() + est.c_affine;  // cond_mean = eps t + offset
  const double second = sigma_eps_sq + 1.0;       // E[eps^2] for unit mean
  const double var_term = (a.square() * (second * g.square() + 2.0 * g + 1.0)).sum();
  const double bias_term = (t - 1.0) * (t - 1.0) * second + 2.0 * (t - 1.0) * offset + offset * offset;
  return var_term + bias_term;
}

}  // namespace quadet
