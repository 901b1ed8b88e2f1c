#include "quadet/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "quadet/asymptotics.hpp"
#include "quadet/error.hpp"

namespace quadet {

namespace {

// Top byte of every stream id names the experiment family.
constexpr std::uint64_t kTagSer = 1;
constexpr std::uint64_t kTagOutage = 2;
constexpr std::uint64_t kTagValidation = 3;

std::uint64_t stream_id(std::uint64_t tag, std::uint64_t group, std::uint64_t index) {
  return (tag << 56) ^ (group << 32) ^ index;
}

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs fn(i) for i in [0, count) on a pool of workers. Work items are
// claimed dynamically; callers write results into per-item slots so the
// outcome does not depend on scheduling. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const unsigned workers = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string describe(const GridPoint& p) {
  std::ostringstream os;
  os << "N=" << p.n << ", rho=" << p.rho << ", snr=" << p.snr_db << " dB";
  return os.str();
}

// Rethrows the active exception with `context` prepended, keeping its type.
[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const GeometryError& e) {
    throw GeometryError(context + ": " + e.what());
  } catch (const DegenerateError& e) {
    throw DegenerateError(context + ": " + e.what());
  } catch (const SingularityError& e) {
    throw SingularityError(context + ": " + e.what());
  } catch (const IdentifiabilityError& e) {
    throw IdentifiabilityError(context + ": " + e.what());
  } catch (const ParameterError& e) {
    throw ParameterError(context + ": " + e.what());
  }
}

Spectrum spectrum_at(const GridPoint& p) {
  return decompose(build_covariance_pair(ChannelSpec::white_db(p.n, p.rho, p.snr_db)));
}

// |r_n|^2 with r_n = sqrt(eps gamma_n + 1) g_n.
void draw_power(const RVector& gamma, double eps, RngStream& rng, double* power) {
  for (Eigen::Index k = 0; k < gamma.size(); ++k) {
    power[k] = (eps * gamma(k) + 1.0) * std::norm(rng.complex_normal());
  }
}

void require_finite(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw ParameterError(std::string(what) + " grid is empty");
  for (double x : v) {
    if (!std::isfinite(x)) throw ParameterError(std::string(what) + " grid has a non-finite value");
  }
}

}  // namespace

std::string to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::kSnr: return "snr";
    case SweepKind::kAntennas: return "antennas";
    case SweepKind::kRho: return "rho";
  }
  return "?";
}

void ExperimentSpec::validate() const {
  if (n_antennas.empty()) throw ParameterError("antenna grid is empty");
  for (auto n : n_antennas) {
    if (n < 1) throw ParameterError("antenna count must be at least 1");
  }
  require_finite(rho, "rho");
  for (double r : rho) ChannelSpec::white(1, r, 1.0).validate();
  require_finite(snr_db, "snr");
  if (mod_order < 2) throw ParameterError("modulation order must be at least 2");
  if (detectors.empty()) throw ParameterError("no detectors requested");
  if (trials < 1) throw ParameterError("trials must be at least 1");
  if (block_size < 1) throw ParameterError("block size must be at least 1");
  if (outage) {
    require_finite(outage->zeta_grid, "zeta");
    if (outage->n_channels < 1) throw ParameterError("outage needs at least one channel");
    if (outage->inner_trials < 1) throw ParameterError("outage needs at least one inner trial");
  }
}

SweepKind ExperimentSpec::sweep() const {
  if (n_antennas.size() > 1) return SweepKind::kAntennas;
  if (rho.size() > 1) return SweepKind::kRho;
  return SweepKind::kSnr;
}

std::vector<GridPoint> grid_points(const ExperimentSpec& spec) {
  std::vector<GridPoint> out;
  for (auto n : spec.n_antennas) {
    for (double r : spec.rho) {
      for (double s : spec.snr_db) out.push_back({n, r, s});
    }
  }
  return out;
}

double standard_error(std::uint64_t errors, std::uint64_t trials) {
  const double p = static_cast<double>(errors) / static_cast<double>(trials);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

SerResult run_ser(const ExperimentSpec& spec) {
  spec.validate();
  const auto constellation = Constellation::uniform_ask(spec.mod_order);
  const auto points = grid_points(spec);
  const std::size_t nd = spec.detectors.size();
  const std::uint64_t blocks = (spec.trials + spec.block_size - 1) / spec.block_size;

  SerResult result;
  for (std::size_t gi = 0; gi < points.size(); ++gi) {
    const auto& p = points[gi];
    std::optional<Spectrum> spectrum;
    std::optional<DetectorSet> set;
    try {
      spectrum.emplace(spectrum_at(p));
      set.emplace(*spectrum, constellation, spec.detectors);
    } catch (const Error&) {
      rethrow_with_context(describe(p));
    }
    const RVector& gamma = spectrum->gamma();

    std::vector<std::uint64_t> block_errors(static_cast<std::size_t>(blocks) * nd, 0);
    parallel_for(static_cast<std::size_t>(blocks), spec.threads, [&](std::size_t b) {
      RngStream rng(spec.seed, stream_id(kTagSer, gi, b));
      const std::uint64_t begin = b * spec.block_size;
      const std::uint64_t end = std::min(spec.trials, begin + spec.block_size);
      std::vector<double> power(p.n);
      std::uint64_t* errs = block_errors.data() + b * nd;
      for (std::uint64_t t = begin; t < end; ++t) {
        const std::size_t sym = rng.uniform_index(constellation.size());
        draw_power(gamma, constellation.energy(sym), rng, power.data());
        for (std::size_t d = 0; d < nd; ++d) {
          if (set->decide(spec.detectors[d], power.data(), sym) != sym) ++errs[d];
        }
      }
    });

    for (std::size_t d = 0; d < nd; ++d) {
      SerRow row;
      row.detector = spec.detectors[d];
      row.snr_db = p.snr_db;
      row.n = p.n;
      row.rho = p.rho;
      row.m = spec.mod_order;
      row.trials = spec.trials;
      for (std::uint64_t b = 0; b < blocks; ++b) row.errors += block_errors[b * nd + d];
      row.ser = static_cast<double>(row.errors) / static_cast<double>(row.trials);
      row.stderr_ = standard_error(row.errors, row.trials);
      row.analytic_ser = set->analytic(row.detector);
      result.rows.push_back(row);
    }
  }
  return result;
}

double outage_probability(const std::vector<ChannelSample>& samples, double zeta) {
  if (samples.empty()) throw ParameterError("no channel samples");
  std::size_t count = 0;
  for (const auto& s : samples) {
    if (s.cond_ser > zeta) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(samples.size());
}

OutageResult run_outage(const ExperimentSpec& spec) {
  spec.validate();
  if (!spec.outage) throw ParameterError("outage configuration missing");
  const auto& cfg = *spec.outage;
  const auto constellation = Constellation::uniform_ask(spec.mod_order);
  const auto points = grid_points(spec);
  const std::size_t nd = spec.detectors.size();

  OutageResult result;
  const double resolution = 10.0 / static_cast<double>(cfg.inner_trials);
  for (double z : cfg.zeta_grid) {
    if (z < resolution) {
      std::ostringstream os;
      os << "zeta = " << z << " is below the resolution 10/inner_trials = " << resolution;
      result.warnings.push_back(os.str());
    }
  }

  std::vector<double> amplitude(constellation.amplitudes().begin(), constellation.amplitudes().end());

  for (std::size_t gi = 0; gi < points.size(); ++gi) {
    const auto& p = points[gi];
    std::optional<CovariancePair> pair;
    std::optional<Spectrum> spectrum;
    std::optional<DetectorSet> set;
    try {
      pair.emplace(build_covariance_pair(ChannelSpec::white_db(p.n, p.rho, p.snr_db)));
      spectrum.emplace(decompose(*pair));
      set.emplace(*spectrum, constellation, spec.detectors);
    } catch (const Error&) {
      rethrow_with_context(describe(p));
    }
    const auto n = static_cast<Eigen::Index>(p.n);

    // samples[c * nd + d]
    std::vector<ChannelSample> samples(cfg.n_channels * nd);
    parallel_for(cfg.n_channels, spec.threads, [&](std::size_t c) {
      RngStream rng(spec.seed, stream_id(kTagOutage, gi, c));
      CVector draw(n);
      for (Eigen::Index k = 0; k < n; ++k) draw(k) = rng.complex_normal();
      const CVector h = pair->channel_factor() * draw;
      const CVector g = spectrum->whitener() * h;
      const double h_norm_sq = h.squaredNorm();

      std::vector<std::uint64_t> errors(nd, 0);
      std::vector<double> power(p.n);
      for (std::uint64_t t = 0; t < cfg.inner_trials; ++t) {
        const std::size_t sym = rng.uniform_index(constellation.size());
        const double x = amplitude[sym];
        for (Eigen::Index k = 0; k < n; ++k) power[k] = std::norm(g(k) * x + rng.complex_normal());
        for (std::size_t d = 0; d < nd; ++d) {
          if (set->decide(spec.detectors[d], power.data(), sym) != sym) ++errors[d];
        }
      }
      for (std::size_t d = 0; d < nd; ++d) {
        samples[c * nd + d] = {h_norm_sq,
                               static_cast<double>(errors[d]) / static_cast<double>(cfg.inner_trials)};
      }
    });

    for (std::size_t d = 0; d < nd; ++d) {
      OutageCurve curve;
      curve.detector = spec.detectors[d];
      curve.point = p;
      curve.m = spec.mod_order;
      curve.zeta = cfg.zeta_grid;
      curve.samples.reserve(cfg.n_channels);
      for (std::size_t c = 0; c < cfg.n_channels; ++c) curve.samples.push_back(samples[c * nd + d]);
      for (double z : cfg.zeta_grid) {
        const double po = outage_probability(curve.samples, z);
        curve.p_out.push_back(po);
        curve.p_out_stderr.push_back(std::sqrt(po * (1.0 - po) / static_cast<double>(cfg.n_channels)));
      }
      result.curves.push_back(std::move(curve));
    }
  }
  return result;
}

void MomentAccumulator::add(double x) {
  const double n1 = static_cast<double>(n_);
  ++n_;
  const double n = static_cast<double>(n_);
  const double delta = x - mean_;
  const double dn = delta / n;
  const double dn2 = dn * dn;
  const double term1 = delta * dn * n1;
  mean_ += dn;
  m4_ += term1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * m2_ - 4.0 * dn * m3_;
  m3_ += term1 * dn * (n - 2.0) - 3.0 * dn * m2_;
  m2_ += term1;
}

void MomentAccumulator::merge(const MomentAccumulator& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(o.n_);
  const double n = na + nb;
  const double d = o.mean_ - mean_;
  const double d2 = d * d;
  const double m2 = m2_ + o.m2_ + d2 * na * nb / n;
  const double m3 = m3_ + o.m3_ + d2 * d * na * nb * (na - nb) / (n * n) + 3.0 * d * (na * o.m2_ - nb * m2_) / n;
  const double m4 = m4_ + o.m4_ + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                    6.0 * d2 * (na * na * o.m2_ + nb * nb * m2_) / (n * n) + 4.0 * d * (na * o.m3_ - nb * m3_) / n;
  mean_ += d * nb / n;
  m2_ = m2;
  m3_ = m3;
  m4_ = m4;
  n_ += o.n_;
}

double MomentAccumulator::variance() const {
  return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double MomentAccumulator::skewness() const {
  if (n_ < 2 || m2_ <= 0.0) return 0.0;
  return std::sqrt(static_cast<double>(n_)) * m3_ / std::pow(m2_, 1.5);
}

double MomentAccumulator::excess_kurtosis() const {
  if (n_ < 2 || m2_ <= 0.0) return 0.0;
  return static_cast<double>(n_) * m4_ / (m2_ * m2_) - 3.0;
}

double MomentAccumulator::stderr_mean() const {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

namespace {

constexpr std::uint64_t kSampleBlock = 16384;

}  // namespace

MomentAccumulator sample_estimator(const QuadraticEstimator& est, const Spectrum& spectrum, double eps,
                                   std::uint64_t samples, std::uint64_t seed, std::uint64_t stream_tag,
                                   unsigned threads) {
  if (est.size() != spectrum.size()) throw DimensionError("estimator and spectrum dimensions differ");
  const std::uint64_t blocks = (samples + kSampleBlock - 1) / kSampleBlock;
  std::vector<MomentAccumulator> parts(static_cast<std::size_t>(blocks));
  parallel_for(parts.size(), threads, [&](std::size_t b) {
    RngStream rng(seed, stream_id(kTagValidation, stream_tag, b));
    std::vector<double> power(spectrum.size());
    const std::uint64_t end = std::min(samples, (b + 1) * kSampleBlock);
    for (std::uint64_t t = b * kSampleBlock; t < end; ++t) {
      draw_power(spectrum.gamma(), eps, rng, power.data());
      parts[b].add(estimate_from_power(est, power.data()));
    }
  });
  MomentAccumulator total;
  for (const auto& part : parts) total.merge(part);
  return total;
}

PepEstimate simulate_pep(const Spectrum& spectrum, double eps_a, double eps_b, std::uint64_t trials,
                         std::uint64_t seed, std::uint64_t stream_tag, unsigned threads) {
  if (trials < 1) throw ParameterError("PEP simulation needs at least one trial");
  const auto ctx = PairwiseContext::make(spectrum, eps_a, eps_b);
  const std::uint64_t blocks = (trials + kSampleBlock - 1) / kSampleBlock;
  std::vector<std::uint64_t> errors(static_cast<std::size_t>(blocks), 0);
  parallel_for(errors.size(), threads, [&](std::size_t b) {
    RngStream rng(seed, stream_id(kTagValidation, stream_tag, b));
    std::vector<double> power(spectrum.size());
    const std::uint64_t end = std::min(trials, (b + 1) * kSampleBlock);
    for (std::uint64_t t = b * kSampleBlock; t < end; ++t) {
      draw_power(spectrum.gamma(), eps_a, rng, power.data());
      if (pairwise_llr(ctx, power.data()) <= 0.0) ++errors[b];
    }
  });
  PepEstimate out;
  out.trials = trials;
  for (auto e : errors) out.errors += e;
  out.pep = static_cast<double>(out.errors) / static_cast<double>(trials);
  out.stderr_ = standard_error(out.errors, trials);
  return out;
}

void ValidationSpec::validate() const {
  ChannelSpec::white_db(n, rho, snr_db).validate();
  if (mod_order < 2) throw ParameterError("modulation order must be at least 2");
  if (samples < 2 || clt_samples < 2 || pep_trials < 1) throw ParameterError("sample counts too small");
  for (auto v : clt_n) {
    if (v < 1) throw ParameterError("CLT antenna counts must be positive");
  }
  for (auto v : deflection_n) {
    if (v < 1) throw ParameterError("deflection antenna counts must be positive");
  }
}

ValidationReport run_estimator_validation(const ValidationSpec& spec) {
  spec.validate();
  ValidationReport report;
  report.spec = spec;
  const auto constellation = Constellation::uniform_ask(spec.mod_order);
  const auto spectrum = spectrum_at({spec.n, spec.rho, spec.snr_db});
  const std::size_t m = constellation.size();
  std::uint64_t tag = 0;

  const auto ed = build_ed(spectrum);
  const auto hsnr = build_hsnr(spectrum);
  const auto qmmse = build_qmmse(spectrum, constellation);

  auto unbiased_row = [&](const std::string& name, const QuadraticEstimator& est, double eps) {
    const auto acc = sample_estimator(est, spectrum, eps, spec.samples, spec.seed, tag++, spec.threads);
    UnbiasednessRow row{name, eps, acc.mean(), acc.stderr_mean(), 0.0};
    row.z = (row.mean - eps) / row.stderr_;
    report.unbiasedness.push_back(row);
    return acc;
  };

  double qmmse_mse = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double eps = constellation.energy(i);
    unbiased_row("ED", ed, eps);
    unbiased_row("HSNR", hsnr, eps);
    const auto bque = build_bque(spectrum, eps);
    const auto acc = unbiased_row(bque.label(), bque, eps);
    EfficiencyRow eff{eps, acc.variance(), crb(spectrum, eps), 0.0};
    eff.ratio = eff.empirical_var / eff.crb;
    report.efficiency.push_back(eff);

    const auto q = sample_estimator(qmmse, spectrum, eps, spec.samples, spec.seed, tag++, spec.threads);
    const double bias = q.mean() - eps;
    const double n = static_cast<double>(q.count());
    qmmse_mse += q.variance() * (n - 1.0) / n + bias * bias;
  }
  report.qmmse.empirical_mse = qmmse_mse / static_cast<double>(m);
  report.qmmse.analytic_mse = qmmse_mse_avg(spectrum, constellation.energy_variance());
  report.qmmse.ratio = report.qmmse.empirical_mse / report.qmmse.analytic_mse;

  const double eps_top = constellation.energy(m - 1);
  for (auto n : spec.clt_n) {
    const auto s = spectrum_at({n, spec.rho, spec.snr_db});
    const auto e = build_ed(s);
    const auto acc = sample_estimator(e, s, eps_top, spec.clt_samples, spec.seed, tag++, spec.threads);
    report.clt.push_back({n, acc.skewness(), acc.excess_kurtosis(), lyapunov_ratio(e.a_diag, s.gamma(), eps_top)});
  }

  for (auto n : spec.deflection_n) {
    const auto s = spectrum_at({n, spec.rho, spec.snr_db});
    for (auto [a, b] : {std::pair<std::size_t, std::size_t>{1, 0}, {m - 1, m - 2}}) {
      const double ea = constellation.energy(a);
      const double eb = constellation.energy(b);
      report.deflection.push_back({n, ea, eb, deflection(PairwiseContext::make(s, ea, eb)).delta});
    }
  }

  for (std::size_t i = 0; i + 1 < m; ++i) {
    for (auto [a, b] : {std::pair<std::size_t, std::size_t>{i, i + 1}, {i + 1, i}}) {
      const double ea = constellation.energy(a);
      const double eb = constellation.energy(b);
      const auto sim = simulate_pep(spectrum, ea, eb, spec.pep_trials, spec.seed, tag++, spec.threads);
      const auto bounds = pep_chisq_bounds(spectrum, ea, eb);
      PepRow row;
      row.eps_a = ea;
      row.eps_b = eb;
      row.simulated = sim.pep;
      row.stderr_ = sim.stderr_;
      row.cantelli = deflection(PairwiseContext::make(spectrum, ea, eb)).cantelli_bound;
      row.chisq_lower = bounds.lower;
      row.chisq_upper = bounds.upper;
      report.pep.push_back(row);
    }
  }
  return report;
}

}  // namespace quadet
