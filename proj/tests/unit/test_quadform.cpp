#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "quadet/error.hpp"
#include "quadet/quadform.hpp"
#include "quadet/sim.hpp"

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

RVector random_gamma(oracle::Rng& rng, int n) {
  RVector g(n);
  for (int k = 0; k < n; ++k) g(k) = std::exp(rng.uniform(-3.0, 3.0));
  return g;
}

}  // namespace

TEST(QuadformMoments, IdentityCase) {
  const auto m = quadform_moments(RVector::Ones(5), 0.0, RVector::Ones(5));
  EXPECT_DOUBLE_EQ(m.mean, 5.0);
  EXPECT_DOUBLE_EQ(m.variance, 5.0);
  EXPECT_DOUBLE_EQ(m.second_moment, 30.0);
}

TEST(QuadformMoments, DirectFormula) {
  const auto m = quadform_moments(vec({2, 1}), 3.0, vec({1, 4}));
  EXPECT_DOUBLE_EQ(m.mean, 9.0);
  EXPECT_DOUBLE_EQ(m.variance, 20.0);
}

TEST(QuadformMoments, LengthMismatch) {
  EXPECT_THROW(quadform_moments(RVector::Ones(2), 0.0, RVector::Ones(3)), DimensionError);
  EXPECT_THROW(quadform_moments(RVector::Ones(2), 0.0, vec({1.0, 0.0})), ParameterError);
}

TEST(QuadformMoments, MatchesSampling) {
  oracle::Rng rng(11);
  for (int inst = 0; inst < 5; ++inst) {
    const int n = rng.integer(1, 6);
    RVector a(n), cov(n);
    for (int k = 0; k < n; ++k) {
      a(k) = rng.uniform(-2.0, 2.0);
      cov(k) = rng.uniform(0.1, 5.0);
    }
    const double c = rng.uniform(-1.0, 1.0);
    const auto m = quadform_moments(a, c, cov);
    const auto s = oracle::sample_quadform(a, c, cov, 400000, rng);
    EXPECT_NEAR(s.mean, m.mean, 4 * s.mean_se) << inst;
    EXPECT_NEAR(s.var, m.variance, 4 * s.var_se) << inst;
  }
}

TEST(Ed, Coefficients) {
  const auto s = Spectrum::from_gamma(vec({3, 1}));
  const auto ed = build_ed(s);
  EXPECT_DOUBLE_EQ(ed.a_diag(0), 0.25);
  EXPECT_DOUBLE_EQ(ed.a_diag(1), 0.25);
  EXPECT_DOUBLE_EQ(ed.c_affine, -0.5);
  CVector r(2);
  r << 2.0, 0.0;
  EXPECT_DOUBLE_EQ(estimate(ed, r), 0.5);
  EXPECT_DOUBLE_EQ(estimate(ed, CVector::Zero(2)), -0.5);
  EXPECT_NEAR(ed.trace_a_gamma(s), 1.0, 1e-15);
}

TEST(Ed, IsotropicForm) {
  const double alpha = 2.5;
  const auto s = Spectrum::isotropic(4, alpha);
  const auto ed = build_ed(s);
  CVector r(4);
  r << 1.0, std::complex<double>(0, 2), 0.5, 3.0;
  EXPECT_NEAR(estimate(ed, r), (r.squaredNorm() / 4 - 1) / alpha, 1e-14);
}

TEST(Hsnr, Coefficients) {
  const auto h = build_hsnr(Spectrum::from_gamma(vec({2, 0.5})));
  EXPECT_DOUBLE_EQ(h.a_diag(0), 0.25);
  EXPECT_DOUBLE_EQ(h.a_diag(1), 1.0);
  EXPECT_NEAR(h.c_affine, 1.0 - (0.25 * 3 + 1.0 * 1.5), 1e-15);
}

TEST(Hsnr, RejectsNearSingularSpectrum) {
  EXPECT_THROW(build_hsnr(Spectrum::from_gamma(vec({1.0, 1e-13}))), SingularityError);
  EXPECT_THROW(build_hsnr(Spectrum::from_gamma(vec({1.0, 0.0}))), SingularityError);
  EXPECT_NO_THROW(build_hsnr(Spectrum::from_gamma(vec({1.0, 1e-11}))));
}

TEST(Bque, NullEnergy) {
  const auto g = vec({3, 1, 0.5});
  const auto b = build_bque(Spectrum::from_gamma(g), 0.0);
  const double sq = g.squaredNorm();
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(b.a_diag(k), g(k) / sq, 1e-15);
}

TEST(Bque, WorkedExample) {
  const auto b = build_bque(Spectrum::from_gamma(vec({3, 1})), 1.0);
  EXPECT_NEAR(b.a_diag(0), (3.0 / 16) / (13.0 / 16), 1e-15);
  EXPECT_NEAR(b.a_diag(1), (1.0 / 4) / (13.0 / 16), 1e-15);
  EXPECT_EQ(b.label(), "BQUE(1)");
}

TEST(Bque, IsotropicCollapsesToEd) {
  const auto s = Spectrum::isotropic(6, 3.7);
  const auto ed = build_ed(s);
  for (double eps : {0.0, 0.5, 2.0, 10.0}) {
    const auto b = build_bque(s, eps);
    EXPECT_LT((b.a_diag - ed.a_diag).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(b.c_affine, ed.c_affine, 1e-14);
  }
  const auto h = build_hsnr(s);
  EXPECT_LT((h.a_diag - ed.a_diag).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Unbiasedness, TraceConstraintForBuiltins) {
  oracle::Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto s = Spectrum::from_gamma(random_gamma(rng, rng.integer(1, 40)));
    const double eps = rng.uniform(0.0, 4.0);
    for (const auto& est : {build_ed(s), build_hsnr(s), build_bque(s, eps)}) {
      EXPECT_NEAR(est.trace_a_gamma(s), 1.0, 1e-12);
      EXPECT_NEAR(est.c_affine, -est.a_diag.sum(), 1e-12 * std::max(1.0, est.a_diag.sum()));
      EXPECT_GT(est.a_diag.minCoeff(), 0.0);
      const auto st = cond_stats(est, s, eps);
      EXPECT_NEAR(st.cond_mean, eps, 1e-12 * std::max(1.0, eps));
      EXPECT_NEAR(st.bias, 0.0, 1e-12 * std::max(1.0, eps));
    }
  }
}

TEST(Crb, ClosedForms) {
  const double alpha = 2.0, eps = 1.5;
  EXPECT_NEAR(crb(Spectrum::isotropic(8, alpha), eps), std::pow(eps * alpha + 1, 2) / (8 * alpha * alpha), 1e-15);
  EXPECT_NEAR(crb(Spectrum::from_gamma(vec({3, 1})), 1.0), 16.0 / 13.0, 1e-15);
  EXPECT_THROW(crb(Spectrum::from_gamma(RVector::Zero(3)), 1.0), SingularityError);
}

TEST(Crb, AttainedByBque) {
  oracle::Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto s = Spectrum::from_gamma(random_gamma(rng, rng.integer(2, 64)));
    const double eps = rng.uniform(0.0, 5.0);
    const double v = cond_stats(build_bque(s, eps), s, eps).cond_var;
    EXPECT_NEAR(v, crb(s, eps), 1e-12 * crb(s, eps));
  }
}

TEST(Bque, OptimalAmongUnbiasedDiagonalEstimators) {
  oracle::Rng rng(17);
  for (int t = 0; t < 1000; ++t) {
    const int n = rng.integer(1, 6);
    const auto g = random_gamma(rng, n);
    const auto s = Spectrum::from_gamma(g);
    const double eps = rng.uniform(0.0, 4.0);
    // Random competitor projected onto sum a_n gamma_n = 1.
    RVector a(n);
    for (int k = 0; k < n; ++k) a(k) = rng.uniform(-1.0, 2.0);
    a /= a.dot(g);
    if (!a.allFinite()) continue;
    QuadraticEstimator comp{a, 1.0 - a.dot(g + RVector::Ones(n)), EstimatorKind::kEd, 0.0};
    const double v_comp = cond_stats(comp, s, eps).cond_var;
    const double v_bque = cond_stats(build_bque(s, eps), s, eps).cond_var;
    EXPECT_LE(v_bque, v_comp * (1 + 1e-12)) << "trial " << t;
  }
}

TEST(Qmmse, UnitGammaExample) {
  const auto q = build_qmmse(Spectrum::from_gamma(vec({1, 1})), 1.0);
  EXPECT_NEAR(q.a_diag(0), 1.0 / 7.0, 1e-15);
  EXPECT_NEAR(q.a_diag(1), 1.0 / 7.0, 1e-15);
  // Minimum-MSE affine estimator found by solving the normal equations.
  const auto ref = oracle::affine_mmse(vec({1, 1}), 1.0);
  EXPECT_NEAR(q.a_diag(0), ref(0), 1e-12);
  EXPECT_NEAR(q.a_diag(1), ref(1), 1e-12);
  EXPECT_NEAR(q.c_affine, ref(2), 1e-12);
}

TEST(Qmmse, MatchesNormalEquationsOnRandomSpectra) {
  oracle::Rng rng(23);
  for (int t = 0; t < 30; ++t) {
    const int n = rng.integer(1, 8);
    const auto g = random_gamma(rng, n);
    const double s2 = rng.uniform(0.05, 3.0);
    const auto q = build_qmmse(Spectrum::from_gamma(g), s2);
    const auto ref = oracle::affine_mmse(g, s2);
    for (int k = 0; k < n; ++k) EXPECT_NEAR(q.a_diag(k), ref(k), 1e-9 * std::abs(ref(k)) + 1e-12);
    EXPECT_NEAR(q.c_affine, ref(n), 1e-9 * std::max(1.0, std::abs(ref(n))));
  }
}

TEST(Qmmse, HighSnrLimitIsScaledHsnr) {
  const auto base = correlated(8, 0.7, 10.0);
  const auto s = base.scaled(1e6);
  const double s2 = 0.75;
  const auto q = build_qmmse(s, s2);
  const RVector prod = q.a_diag.cwiseProduct(s.gamma());
  EXPECT_LT((prod.array() / prod(0) - 1.0).abs().maxCoeff(), 1e-6);
  EXPECT_NEAR(prod(0), 1.0 / (1.0 + 1.0 / s2 + 8.0), 1e-5);
}

TEST(Qmmse, TraceIdentity) {
  const auto s = correlated(8, 0.5, 10.0);
  for (double s2 : {0.1, 1.0, 1e3, 1e9}) {
    double f = 0.0;
    for (double g : s.gamma()) f += s2 * g * g / ((s2 + 1) * g * g + 2 * g + 1);
    EXPECT_NEAR(build_qmmse(s, s2).trace_a_gamma(s), f / (1 + f), 1e-13);
  }
}

TEST(Qmmse, LargePriorVarianceLimit) {
  // At a fixed spectrum the Frobenius term stays bounded by N, so the trace
  // tends to N / (N + 1). Unbiasedness is recovered only as that term grows.
  const auto s = correlated(8, 0.5, 10.0);
  EXPECT_NEAR(build_qmmse(s, 1e9).trace_a_gamma(s), 8.0 / 9.0, 1e-7);
  double prev = 0.0;
  for (std::size_t n : {8u, 64u, 512u}) {
    const auto sn = correlated(n, 0.5, 10.0);
    const double t = build_qmmse(sn, 1e9).trace_a_gamma(sn);
    EXPECT_GT(t, prev);
    prev = t;
  }
  EXPECT_GT(prev, 1.0 - 2e-3);
}

TEST(Qmmse, MeanEnergyIsFixedPoint) {
  const auto s = correlated(16, 0.7, 5.0);
  const auto q = build_qmmse(s, Constellation::uniform_ask(8));
  EXPECT_NEAR(cond_stats(q, s, 1.0).cond_mean, 1.0, 1e-14);
  EXPECT_TRUE(cond_stats(q, s, 1.0).mse_avg.has_value());
  EXPECT_FALSE(cond_stats(build_ed(s), s, 1.0).mse_avg.has_value());
}

TEST(Qmmse, MseFormulaAndOptimality) {
  const auto s = correlated(12, 0.8, 3.0);
  const auto c = Constellation::uniform_ask(4);
  const double s2 = c.energy_variance();
  const auto q = build_qmmse(s, s2);
  EXPECT_NEAR(average_mse(q, s, s2), qmmse_mse_avg(s, s2), 1e-12);
  EXPECT_LT(qmmse_mse_avg(s, s2), average_mse(build_ed(s), s, s2));
  EXPECT_LT(qmmse_mse_avg(s, s2), average_mse(build_hsnr(s), s, s2));
  // Unbiased estimators: the average MSE is the prior-averaged variance.
  const auto ed = build_ed(s);
  double avg_var = 0.0;
  for (double e : c.energies()) avg_var += cond_stats(ed, s, e).cond_var;
  EXPECT_NEAR(average_mse(ed, s, s2), avg_var / c.size(), 1e-12);
}

TEST(Qmmse, EmpiricalMseMatchesFormula) {
  const auto s = correlated(16, 0.7, 10.0);
  const auto c = Constellation::uniform_ask(8);
  const auto q = build_qmmse(s, c);
  RngStream rng(8, 8);
  const int draws = 1000000;
  long double acc = 0;
  for (int t = 0; t < draws; ++t) {
    const double eps = c.energy(rng.uniform_index(c.size()));
    const double e = estimate(q, sample_whitened(s, eps, rng)) - eps;
    acc += e * e;
  }
  const double emp = static_cast<double>(acc / draws);
  EXPECT_NEAR(emp / qmmse_mse_avg(s, c.energy_variance()), 1.0, 0.02);
}

TEST(CondStats, AgreesWithQuadformMoments) {
  const auto s = correlated(10, 0.6, 7.0);
  for (const auto& est : {build_ed(s), build_hsnr(s), build_bque(s, 1.3), build_qmmse(s, 0.8)}) {
    for (double eps : {0.0, 0.4, 2.5}) {
      const auto st = cond_stats(est, s, eps);
      const RVector cov = (eps * s.gamma().array() + 1.0).matrix();
      const auto m = quadform_moments(est.a_diag, est.c_affine, cov);
      EXPECT_NEAR(st.cond_mean, m.mean, 1e-13);
      EXPECT_NEAR(st.cond_var, m.variance, 1e-13 * m.variance);
      const double trace_form = 1.0 - (1.0 - eps) * est.trace_a_gamma(s);
      EXPECT_NEAR(st.cond_mean, trace_form, 1e-13);
    }
  }
}

TEST(CondStats, EdIsotropicNullVariance) {
  const double alpha = 3.0;
  const auto s = Spectrum::isotropic(5, alpha);
  EXPECT_NEAR(cond_stats(build_ed(s), s, 0.0).cond_var, 1.0 / (5 * alpha * alpha), 1e-15);
}

TEST(IsotropicCollapse, AllEstimatorsAreIncreasingAffineInNorm) {
  const auto s = Spectrum::isotropic(7, 4.0);
  const auto ed = build_ed(s);
  for (const auto& est : {build_hsnr(s), build_bque(s, 2.0), build_qmmse(s, 0.7)}) {
    // a proportional to 1 with a positive factor.
    EXPECT_LT((est.a_diag.array() / est.a_diag(0) - 1.0).abs().maxCoeff(), 1e-14);
    EXPECT_GT(est.a_diag(0), 0.0);
    (void)ed;
  }
}

TEST(Estimate, DimensionMismatch) {
  const auto ed = build_ed(Spectrum::isotropic(3, 1.0));
  EXPECT_THROW(estimate(ed, CVector::Zero(4)), DimensionError);
}

TEST(Estimate, UnbiasedOnAverage) {
  const auto s = correlated(32, 0.7, 10.0);
  const double eps = 18.0 / 7.0;
  std::uint64_t tag = 0;
  for (const auto& est : {build_ed(s), build_hsnr(s), build_bque(s, eps)}) {
    const auto acc = sample_estimator(est, s, eps, 1000000, 77, tag++, 1);
    EXPECT_NEAR(acc.mean(), eps, 4 * acc.stderr_mean()) << est.label();
  }
}
