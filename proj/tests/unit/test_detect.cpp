#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "quadet/detect.hpp"
#include "quadet/error.hpp"

using namespace quadet;

namespace {

RVector vec(std::initializer_list<double> v) {
  RVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

Spectrum correlated(std::size_t n, double rho, double snr_db) {
  return decompose(build_covariance_pair(ChannelSpec::white_db(n, rho, snr_db)));
}

double log_density(double t, double mu, double var) { return -(t - mu) * (t - mu) / (2 * var) - 0.5 * std::log(var); }

}  // namespace

TEST(Ml, ZeroInputSelectsNullSymbol) {
  const auto s = correlated(8, 0.7, 10.0);
  const auto c = Constellation::uniform_ask(8);
  EXPECT_EQ(ml_detect(s, c, CVector::Zero(8)).symbol_index, 0u);
}

TEST(Ml, ScalarBoundary) {
  const auto s = Spectrum::from_gamma(vec({1.0}));
  const auto c = Constellation::from_energies({0.0, 2.0});
  ASSERT_NEAR(c.energy(1), 2.0, 1e-15);
  const double boundary = 1.5 * std::log(3.0);
  CVector r(1);
  r(0) = std::sqrt(boundary * (1 - 1e-9));
  EXPECT_EQ(ml_detect(s, c, r).symbol_index, 0u);
  r(0) = std::sqrt(boundary * (1 + 1e-9));
  EXPECT_EQ(ml_detect(s, c, r).symbol_index, 1u);
}

TEST(Ml, MatchesDenseLikelihoodInPhysicalDomain) {
  oracle::Rng orng(31);
  const auto c = Constellation::uniform_ask(4);
  std::vector<double> energies(c.energies().begin(), c.energies().end());
  for (int inst = 0; inst < 10; ++inst) {
    const std::size_t n = static_cast<std::size_t>(orng.integer(2, 7));
    ChannelSpec spec = ChannelSpec::white_db(n, orng.uniform(0.0, 0.9), orng.uniform(-5.0, 15.0));
    // Colored noise: random Hermitian positive definite shape.
    CMatrix b(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) b(i, j) = orng.cnormal();
    spec.noise_covariance = b * b.adjoint() + CMatrix::Identity(n, n);
    const auto pair = build_covariance_pair(spec);
    const auto s = decompose(pair);
    RngStream rng(inst, 0);
    for (int t = 0; t < 200; ++t) {
      const std::size_t sym = rng.uniform_index(c.size());
      const auto y = sample_physical(pair, c.amplitude(sym), rng).y;
      EXPECT_EQ(ml_detect(s, c, whiten(s, y)).symbol_index, oracle::dense_ml(pair.c_h(), pair.c_z(), energies, y));
    }
  }
}

TEST(Ml, PowerAndVectorFormsAgree) {
  const auto s = correlated(6, 0.5, 5.0);
  const auto c = Constellation::uniform_ask(8);
  const MlDetector ml(s, c);
  RngStream rng(4, 4);
  for (int t = 0; t < 100; ++t) {
    const auto r = sample_whitened(s, c.energy(t % 8), rng);
    std::vector<double> p(6);
    for (int k = 0; k < 6; ++k) p[k] = std::norm(r(k));
    EXPECT_EQ(ml.detect(r).symbol_index, ml.detect_power(p.data()).symbol_index);
  }
}

TEST(NormalIntersection, EqualVariances) { EXPECT_DOUBLE_EQ(normal_intersection(0, 2, 1, 1), 1.0); }

TEST(NormalIntersection, UnequalVariancesMatchBisection) {
  const double tau = normal_intersection(0, 1, 1, 4);
  EXPECT_NEAR(tau, oracle::density_crossing(0, 1, 1, 4, 0.0, 10.0), 1e-10);
  EXPECT_NEAR(log_density(tau, 0, 1), log_density(tau, 1, 4), 1e-10);
}

TEST(NormalIntersection, DensityEqualityOnRandomInputs) {
  oracle::Rng rng(9);
  for (int t = 0; t < 500; ++t) {
    const double mu1 = rng.uniform(-5, 5);
    const double mu2 = mu1 + rng.uniform(0.01, 5);
    const double v1 = rng.uniform(0.01, 3);
    const double v2 = v1 * rng.uniform(1.0, 5.0);
    const double tau = normal_intersection(mu1, mu2, v1, v2);
    EXPECT_NEAR(log_density(tau, mu1, v1), log_density(tau, mu2, v2), 1e-10 * std::max(1.0, std::abs(log_density(tau, mu1, v1))));
    EXPECT_GT(tau, mu1);
  }
}

TEST(NormalIntersection, Errors) {
  EXPECT_THROW(normal_intersection(0, 1, 0, 1), ParameterError);
  EXPECT_THROW(normal_intersection(1, 0, 1, 1), ParameterError);
}

TEST(NormalIntersection, ExtremeVarianceRatio) {
  // Two Gaussian densities with distinct variances always cross twice.
  const double tau = normal_intersection(0, 1e-3, 100, 1e-6);
  EXPECT_NEAR(log_density(tau, 0, 100), log_density(tau, 1e-3, 1e-6), 1e-9);
  EXPECT_GT(tau, 1e-3);
}

TEST(Thresholds, BinaryUnbiased) {
  const auto s = correlated(4, 0.5, 5.0);
  const auto c = Constellation::uniform_ask(2);
  const auto st = symbol_stats(build_ed(s), s, c);
  const auto th = compute_thresholds(build_ed(s), s, c);
  ASSERT_EQ(th.taus.size(), 1u);
  EXPECT_GT(th.taus[0], 0.0);
  EXPECT_LT(th.taus[0], 2.0);
  const double ref = oracle::density_crossing(st[0].cond_mean, st[1].cond_mean, st[0].cond_var, st[1].cond_var, 0.0, 2.0);
  EXPECT_NEAR(th.taus[0], ref, 1e-10);
}

TEST(Thresholds, VarianceIncreasesWithEnergy) {
  const auto s = correlated(16, 0.8, 5.0);
  const auto c = Constellation::uniform_ask(8);
  for (const auto& est : {build_ed(s), build_hsnr(s), build_bque(s, 1.0), build_qmmse(s, c)}) {
    const auto st = symbol_stats(est, s, c);
    for (std::size_t i = 1; i < st.size(); ++i) EXPECT_GT(st[i].cond_var, st[i - 1].cond_var);
    const auto th = compute_thresholds(est, s, c);
    EXPECT_TRUE(std::is_sorted(th.taus.begin(), th.taus.end()));
    EXPECT_EQ(th.estimator_kind, est.kind);
  }
}

TEST(Thresholds, RejectsRepeatedEnergies) {
  const auto s = correlated(4, 0.5, 5.0);
  const auto c = Constellation::from_amplitudes({0.0, 1.0, 1.0}, true);
  EXPECT_THROW(compute_thresholds(build_ed(s), s, c), IdentifiabilityError);
}

TEST(Thresholds, IsotropicPartitionsCoincide) {
  const double alpha = 2.0;
  const std::size_t n = 16;
  const auto s = Spectrum::isotropic(n, alpha);
  const auto c = Constellation::uniform_ask(8);
  const auto ed = build_ed(s);
  const auto t_ed = compute_thresholds(ed, s, c);
  for (double eps : {0.0, 1.0, 18.0 / 7.0}) {
    const auto b = build_bque(s, eps);
    const auto t_b = compute_thresholds(b, s, c);
    for (std::size_t i = 0; i < t_ed.taus.size(); ++i) EXPECT_NEAR(t_ed.taus[i], t_b.taus[i], 1e-12);
  }
}

TEST(Classify, BoundaryConvention) {
  ThresholdSet th{{-1.0, 0.5, 2.0}, EstimatorKind::kEd, "t"};
  EXPECT_EQ(classify_value(th, -1.0), 0u);
  EXPECT_EQ(classify_value(th, std::nextafter(-1.0, 0.0)), 1u);
  EXPECT_EQ(classify_value(th, 0.5), 1u);
  EXPECT_EQ(classify_value(th, 2.0), 2u);
  EXPECT_EQ(classify_value(th, std::nextafter(2.0, 3.0)), 3u);
  EXPECT_EQ(classify_value(th, -1e308), 0u);
  EXPECT_EQ(classify_value(th, -INFINITY), 0u);
  EXPECT_EQ(classify_value(th, INFINITY), 3u);
}

TEST(Classify, MatchesLinearScan) {
  oracle::Rng rng(2);
  for (int inst = 0; inst < 50; ++inst) {
    std::vector<double> taus(3);
    for (auto& t : taus) t = rng.uniform(-3, 3);
    std::sort(taus.begin(), taus.end());
    ThresholdSet th{taus, EstimatorKind::kEd, "t"};
    for (double v = -4.0; v <= 4.0; v += 0.001) {
      std::size_t idx = 0;
      while (idx < taus.size() && v > taus[idx]) ++idx;
      ASSERT_EQ(classify_value(th, v), idx);
    }
  }
}

TEST(Classify, VectorAndPowerForms) {
  const auto s = correlated(8, 0.7, 5.0);
  const auto c = Constellation::uniform_ask(4);
  const auto ed = build_ed(s);
  const auto th = compute_thresholds(ed, s, c);
  RngStream rng(1, 1);
  for (int t = 0; t < 200; ++t) {
    const auto r = sample_whitened(s, c.energy(t % 4), rng);
    std::vector<double> p(8);
    for (int k = 0; k < 8; ++k) p[k] = std::norm(r(k));
    const auto d = classify(ed, th, r);
    EXPECT_EQ(d.symbol_index, classify_power(ed, th, p.data()).symbol_index);
    EXPECT_EQ(d.symbol_index, classify_value(th, estimate(ed, r)));
    EXPECT_NEAR(d.statistic, estimate(ed, r), 1e-12);
  }
}

TEST(Abque, IsotropicStageTwoKeepsDecision) {
  const auto s = Spectrum::isotropic(12, 1.5);
  const auto c = Constellation::uniform_ask(8);
  const auto ed = build_ed(s);
  const auto th = compute_thresholds(ed, s, c);
  const auto bank = BqueBank::build(s, c);
  RngStream rng(5, 5);
  for (int t = 0; t < 5000; ++t) {
    const auto r = sample_whitened(s, c.energy(t % 8), rng);
    EXPECT_EQ(abque_detect(ed, th, bank, r).symbol_index, classify(ed, th, r).symbol_index);
  }
}

TEST(Abque, StageTwoIsBankEntryOfStageOne) {
  const auto s = correlated(32, 0.7, 10.0);
  const auto c = Constellation::uniform_ask(8);
  const auto ed = build_ed(s);
  const auto th = compute_thresholds(ed, s, c);
  const auto bank = BqueBank::build(s, c);
  ASSERT_EQ(bank.size(), 8u);
  RngStream rng(6, 6);
  for (int t = 0; t < 2000; ++t) {
    const auto r = sample_whitened(s, c.energy(t % 8), rng);
    const std::size_t j = classify(ed, th, r).symbol_index;
    const auto d = abque_detect(ed, th, bank, r);
    const auto ref = classify(bank.estimators[j], bank.thresholds[j], r);
    EXPECT_EQ(d.symbol_index, ref.symbol_index);
    EXPECT_DOUBLE_EQ(d.statistic, ref.statistic);
  }
}

TEST(QFunction, Values) {
  EXPECT_DOUBLE_EQ(q_function(0.0), 0.5);
  for (double x = -8.0; x <= 8.0; x += 0.37) {
    EXPECT_NEAR(q_function(-x), 1.0 - q_function(x), 1e-15);
    const double ref = static_cast<double>(oracle::gaussian_tail(x));
    EXPECT_NEAR(q_function(x), ref, 1e-14 * ref) << x;
  }
  EXPECT_NEAR(q_function(1.2815515655446004), 0.1, 1e-15);
  EXPECT_NEAR(q_function(1.2815515655446004), static_cast<double>(oracle::gaussian_tail(1.2815515655446004L)), 1e-15);
  EXPECT_GT(q_function(38.0), 0.0);
  EXPECT_DOUBLE_EQ(q_function(INFINITY), 0.0);
  EXPECT_DOUBLE_EQ(q_function(-INFINITY), 1.0);
}

TEST(AnalyticSer, ThresholdsAtInfinityGiveZero) {
  const auto s = correlated(8, 0.7, 5.0);
  const auto c = Constellation::uniform_ask(2);
  const auto ed = build_ed(s);
  // With one boundary far below every mean, only the null symbol errs.
  ThresholdSet low{{-1e300}, EstimatorKind::kEd, "low"};
  const auto p_low = analytic_ser(ed, s, c, low);
  EXPECT_DOUBLE_EQ(p_low.per_symbol[1], 0.0);
  EXPECT_DOUBLE_EQ(p_low.per_symbol[0], 1.0);
  ThresholdSet inf{{INFINITY}, EstimatorKind::kEd, "inf"};
  const auto p_inf = analytic_ser(ed, s, c, inf);
  EXPECT_DOUBLE_EQ(p_inf.per_symbol[0], 0.0);
  EXPECT_DOUBLE_EQ(p_inf.total, 0.5);
}

TEST(AnalyticSer, BinaryMatchesGaussianTails) {
  const auto s = correlated(8, 0.7, 5.0);
  const auto c = Constellation::uniform_ask(2);
  const auto ed = build_ed(s);
  const auto th = compute_thresholds(ed, s, c);
  const auto st = symbol_stats(ed, s, c);
  const double tau = th.taus[0];
  const double p0 = static_cast<double>(oracle::gaussian_tail((tau - st[0].cond_mean) / std::sqrt(st[0].cond_var)));
  const double p1 = static_cast<double>(oracle::gaussian_tail((st[1].cond_mean - tau) / std::sqrt(st[1].cond_var)));
  const auto p = analytic_ser(ed, s, c, th);
  EXPECT_NEAR(p.per_symbol[0], p0, 1e-13 * p0);
  EXPECT_NEAR(p.per_symbol[1], p1, 1e-13 * p1);
  EXPECT_NEAR(p.total, 0.5 * (p0 + p1), 1e-13 * p.total);
}

TEST(AnalyticSer, SymmetricEqualVarianceToy) {
  // ED at gamma -> 0 has equal conditional variances; the M=2 boundary then
  // sits at the midpoint and the SER is Q(d / (2 sigma)).
  const auto s = Spectrum::from_gamma(vec({1e-9, 1e-9}));
  const auto c = Constellation::uniform_ask(2);
  const auto ed = build_ed(s);
  const auto st = symbol_stats(ed, s, c);
  ThresholdSet th{{1.0}, EstimatorKind::kEd, "mid"};
  const double sigma = std::sqrt(st[0].cond_var);
  EXPECT_NEAR(analytic_ser(ed, s, c, th).total, q_function(1.0 / sigma), 1e-12);
}

TEST(AnalyticSer, DimensionCheck) {
  const auto s = correlated(4, 0.5, 5.0);
  const auto c = Constellation::uniform_ask(4);
  ThresholdSet th{{0.5}, EstimatorKind::kEd, "x"};
  EXPECT_THROW(analytic_ser(build_ed(s), s, c, th), DimensionError);
}

TEST(AnalyticSer, IntersectionIsLocallyOptimal) {
  const auto c = Constellation::uniform_ask(8);
  for (double snr : {0.0, 10.0}) {
    const auto s = correlated(16, 0.7, snr);
    for (const auto& est : {build_ed(s), build_hsnr(s), build_bque(s, 1.0), build_qmmse(s, c)}) {
      const auto th = compute_thresholds(est, s, c);
      const auto st = symbol_stats(est, s, c);
      const double base = analytic_ser(est, s, c, th).total;
      for (std::size_t i = 0; i < th.taus.size(); ++i) {
        for (double sign : {-1.0, 1.0}) {
          auto moved = th;
          moved.taus[i] += sign * 1e-3 * std::sqrt(st[i].cond_var);
          EXPECT_GE(analytic_ser(est, s, c, moved).total, base * (1 - 1e-14)) << est.label() << " " << i;
        }
      }
    }
  }
}

TEST(AnalyticSer, GenieUsesOwnBankEntry) {
  const auto s = correlated(16, 0.7, 10.0);
  const auto c = Constellation::uniform_ask(4);
  const auto bank = BqueBank::build(s, c);
  const auto g = analytic_ser_genie(bank, s, c);
  double total = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double pi = analytic_ser(bank.estimators[i], s, c, bank.thresholds[i]).per_symbol[i];
    EXPECT_NEAR(g.per_symbol[i], pi, 1e-15);
    total += pi;
  }
  EXPECT_NEAR(g.total, total / c.size(), 1e-15);
}

TEST(Isotropic, QuadraticDecisionsCoincideAndMlUsesNorm) {
  const double alpha = db_to_linear(5.0);
  const std::size_t n = 16;
  const auto s = Spectrum::isotropic(n, alpha);
  const auto c = Constellation::uniform_ask(8);
  const DetectorSet set(s, c, {DetectorKind::kMl, DetectorKind::kEd, DetectorKind::kHsnr, DetectorKind::kBqueGenie,
                               DetectorKind::kQmmse, DetectorKind::kAbque});
  RngStream rng(10, 10);
  std::vector<double> p(n);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t sym = t % 8;
    const auto r = sample_whitened(s, c.energy(sym), rng);
    for (std::size_t k = 0; k < n; ++k) p[k] = std::norm(r(k));
    const std::size_t ed = set.decide(DetectorKind::kEd, p.data(), sym);
    EXPECT_EQ(set.decide(DetectorKind::kHsnr, p.data(), sym), ed);
    EXPECT_EQ(set.decide(DetectorKind::kBqueGenie, p.data(), sym), ed);
    EXPECT_EQ(set.decide(DetectorKind::kQmmse, p.data(), sym), ed);
    EXPECT_EQ(set.decide(DetectorKind::kAbque, p.data(), sym), ed);
    EXPECT_EQ(set.decide(DetectorKind::kMl, p.data(), sym),
              ml_detect_isotropic(alpha, n, c, r.squaredNorm()).symbol_index);
  }
}

TEST(DetectorKinds, ParseAndName) {
  for (auto k : {DetectorKind::kMl, DetectorKind::kEd, DetectorKind::kHsnr, DetectorKind::kBqueGenie,
                 DetectorKind::kQmmse, DetectorKind::kAbque})
    EXPECT_EQ(parse_detector(to_string(k)), k);
  EXPECT_EQ(parse_detector("BQUE_GENIE"), DetectorKind::kBqueGenie);
  EXPECT_THROW(parse_detector("mmse"), ParameterError);
  EXPECT_FALSE(is_quadratic(DetectorKind::kMl));
  EXPECT_TRUE(is_quadratic(DetectorKind::kQmmse));
}

TEST(DetectorSet, AnalyticMatchesDirectComputation) {
  const auto s = correlated(16, 0.7, 10.0);
  const auto c = Constellation::uniform_ask(8);
  const DetectorSet set(s, c, {DetectorKind::kEd, DetectorKind::kMl, DetectorKind::kBqueGenie});
  const auto ed = build_ed(s);
  EXPECT_NEAR(*set.analytic(DetectorKind::kEd), analytic_ser(ed, s, c, compute_thresholds(ed, s, c)).total, 1e-15);
  EXPECT_FALSE(set.analytic(DetectorKind::kMl).has_value());
  EXPECT_NEAR(*set.analytic(DetectorKind::kBqueGenie), analytic_ser_genie(BqueBank::build(s, c), s, c).total, 1e-15);
}
