#include "quadet/asymptotics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "quadet/error.hpp"

namespace quadet {

namespace {

constexpr double kTiny = 1e-300;

}  // namespace

PairwiseContext PairwiseContext::make(const Spectrum& spectrum, double eps_a, double eps_b) {
  if (!(eps_a >= 0.0) || !(eps_b >= 0.0)) throw ParameterError("pair energies must be nonnegative");
  PairwiseContext ctx;
  ctx.eps_a = eps_a;
  ctx.eps_b = eps_b;
  ctx.gamma = spectrum.gamma();
  ctx.lambdas = ((eps_a * ctx.gamma.array() + 1.0) / (eps_b * ctx.gamma.array() + 1.0)).matrix();
  return ctx;
}

double eta(double x) {
  const double d = x - 1.0;
  if (std::abs(d) < 1e-4) {
    return d * d * (0.5 - d * (1.0 / 3.0 - d * (0.25 - d * 0.2)));
  }
  return d - std::log1p(d);
}

DeflectionResult deflection(const PairwiseContext& ctx) {
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index k = 0; k < ctx.lambdas.size(); ++k) {
    const double l = ctx.lambdas(k);
    num += eta(l);
    den += (l - 1.0) * (l - 1.0);
  }
  if (!(den > 0.0)) throw IdentifiabilityError("hypotheses are indistinguishable: every lambda equals 1");
  DeflectionResult out;
  out.delta = num * num / den;
  out.cantelli_bound = 1.0 / (1.0 + out.delta);
  return out;
}

double pairwise_llr(const PairwiseContext& ctx, const double* power) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < ctx.gamma.size(); ++k) {
    const double ca = ctx.eps_a * ctx.gamma(k) + 1.0;
    const double cb = ctx.eps_b * ctx.gamma(k) + 1.0;
    acc += power[k] * (1.0 / cb - 1.0 / ca) + std::log(cb / ca);
  }
  return acc;
}

double log_gamma_p(double s, double x) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  const double p = boost::math::gamma_p(s, x);
  if (p > kTiny) return std::log(p);
  // P(s, x) = x^s e^-x / Gamma(s + 1) * sum_k x^k / ((s+1)...(s+k)).
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 100000; ++k) {
    term *= x / (s + k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return s * std::log(x) - x - std::lgamma(s + 1.0) + std::log(sum);
}

double log_gamma_q(double s, double x) {
  if (x <= 0.0) return 0.0;
  const double q = boost::math::gamma_q(s, x);
  if (q > kTiny) return std::log(q);
  // Continued fraction (modified Lentz) for Q(s, x) Gamma(s) e^x x^-s.
  double b = x + 1.0 - s;
  double c = 1.0 / 1e-300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return s * std::log(x) - x - std::lgamma(s) + std::log(h);
}

PepBounds pep_chisq_bounds(const Spectrum& spectrum, double eps_a, double eps_b) {
  if (!(eps_a >= 0.0) || !(eps_b >= 0.0)) throw ParameterError("pair energies must be nonnegative");
  if (eps_a == eps_b) throw ParameterError("pair energies must differ");
  const auto& g = spectrum.gamma();
  const auto n = g.size();

  RVector ca = (eps_a * g.array() + 1.0).matrix();
  RVector cb = (eps_b * g.array() + 1.0).matrix();
  const double log_ratio = (ca.array().log() - cb.array().log()).sum();  // log|C_a C_b^-1|
  RVector k = ((cb.array().inverse() - ca.array().inverse()) / log_ratio).matrix();
  if (!(k.minCoeff() > 0.0) || !std::isfinite(log_ratio) || log_ratio == 0.0) {
    throw IdentifiabilityError("ellipsoid matrix K is not positive definite");
  }

  // Omega = C_a K / |K|^(1/N); the ball radius is |K|^(-1/N), so radius / omega_n = 1 / (c_a,n k_n).
  const double log_gm = k.array().log().mean();
  RVector omega = (ca.array() * k.array() / std::exp(log_gm)).matrix();
  const double log_det_a = ca.array().log().sum();
  const double nn = static_cast<double>(n);

  PepBounds out;
  out.inside = eps_a > eps_b;
  out.omega_min = omega.minCoeff();
  out.omega_max = omega.maxCoeff();

  auto bound = [&](double w) {
    const double y = std::exp(-log_gm) / w;  // half the chi-squared argument
    const double log_region = out.inside ? log_gamma_p(nn, y) : log_gamma_q(nn, y);
    return -log_det_a + nn * std::log(w) + log_region;
  };
  out.log_lower = bound(out.omega_min);
  out.log_upper = bound(out.omega_max);
  out.lower = std::exp(out.log_lower);
  out.upper = std::exp(out.log_upper);
  return out;
}

double floor_estimate(DetectorKind detector, const Spectrum& spectrum, const Constellation& constellation,
                      const FloorOptions& options) {
  const DetectorSet set(spectrum, constellation, {detector});
  if (auto a = set.analytic(detector)) return *a;
  if (options.mc_trials == 0) throw ParameterError("floor Monte Carlo needs at least one trial");

  RngStream rng(options.seed, 0);
  const auto& g = spectrum.gamma();
  std::vector<double> power(spectrum.size());
  std::uint64_t errors = 0;
  for (std::uint64_t t = 0; t < options.mc_trials; ++t) {
    const std::size_t sym = rng.uniform_index(constellation.size());
    const double eps = constellation.energy(sym);
    for (std::size_t k = 0; k < power.size(); ++k) {
      const auto z = rng.complex_normal();
      power[k] = (eps * g(static_cast<Eigen::Index>(k)) + 1.0) * std::norm(z);
    }
    if (set.decide(detector, power.data(), sym) != sym) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(options.mc_trials);
}

double floor_estimate(DetectorKind detector, std::size_t n, double rho, const Constellation& constellation,
                      const FloorOptions& options) {
  const auto pair = build_covariance_pair(ChannelSpec::white_db(n, rho, options.snr_db));
  return floor_estimate(detector, decompose(pair), constellation, options);
}

double lyapunov_ratio(const RVector& a_diag, const RVector& gamma, double eps) {
  if (a_diag.size() != gamma.size()) throw DimensionError("coefficient and spectrum sizes differ");
  const auto w = (a_diag.array() * (eps * gamma.array() + 1.0)).eval();
  const double den = w.square().sum();
  if (!(den > 0.0)) throw DegenerateError("Lyapunov ratio has a zero denominator");
  return 9.0 * w.square().square().sum() / (den * den);
}

std::size_t theta_count(const Spectrum& spectrum, double rel_tol) { return spectrum.significant_count(rel_tol); }

}  // namespace quadet
