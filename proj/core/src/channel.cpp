#include "quadet/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "quadet/error.hpp"

namespace quadet {

namespace {

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

bool is_hermitian(const CMatrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(max_abs(m), 1e-300);
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool is_real(const CMatrix& m) { return m.imag().isZero(0.0); }

// Hermitian eigendecomposition, ascending eigenvalues. Uses the real solver
// when the matrix has no imaginary part.
void hermitian_eig(const CMatrix& m, RVector& values, CMatrix& vectors) {
  if (is_real(m)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.real());
    if (solver.info() != Eigen::Success) throw SingularityError("eigendecomposition failed");
    values = solver.eigenvalues();
    vectors = solver.eigenvectors().cast<std::complex<double>>();
  } else {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(m);
    if (solver.info() != Eigen::Success) throw SingularityError("eigendecomposition failed");
    values = solver.eigenvalues();
    vectors = solver.eigenvectors();
  }
}

CMatrix psd_factor(const CMatrix& c, const char* what) {
  Eigen::LLT<CMatrix> llt(c);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Semi-definite: fall back to V sqrt(D), still satisfying C = F F^H.
  RVector d;
  CMatrix v;
  hermitian_eig(c, d, v);
  const double tol = kRankTol * std::max(d.maxCoeff(), 0.0);
  if (d.minCoeff() < -tol) {
    throw CovarianceError(std::string(what) + " is not positive semi-definite");
  }
  return v * d.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

ChannelSpec ChannelSpec::white(std::size_t n, double rho, double snr_linear) {
  ChannelSpec spec;
  spec.n_antennas = n;
  spec.rho = rho;
  spec.snr = snr_linear;
  return spec;
}

ChannelSpec ChannelSpec::white_db(std::size_t n, double rho, double snr_db) {
  return white(n, rho, db_to_linear(snr_db));
}

void ChannelSpec::validate() const {
  if (n_antennas < 1) throw ParameterError("n_antennas must be at least 1");
  if (!(rho >= 0.0 && rho < 1.0)) {
    std::ostringstream os;
    os << "rho = " << rho
       << " is outside [0, 1); rho = 1 makes the channel covariance rank-one and a "
          "full-rank channel covariance is required";
    throw ParameterError(os.str());
  }
  if (!(snr > 0.0) || !std::isfinite(snr)) throw ParameterError("snr must be positive and finite");
  if (noise_covariance) {
    const auto& c = *noise_covariance;
    if (c.rows() != static_cast<Eigen::Index>(n_antennas) || c.cols() != c.rows()) {
      throw DimensionError("noise covariance must be n_antennas x n_antennas");
    }
  }
}

CMatrix build_exponential_covariance(std::size_t n, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw ParameterError("exponential correlation requires 0 <= rho < 1");
  }
  const auto size = static_cast<Eigen::Index>(n);
  CMatrix c(size, size);
  for (Eigen::Index k = 0; k < size; ++k) {
    for (Eigen::Index l = k; l < size; ++l) {
      const double v = std::pow(rho, static_cast<double>(l - k));
      c(k, l) = v;
      c(l, k) = std::conj(std::complex<double>(v));
    }
  }
  return c;
}

CovariancePair::CovariancePair(CMatrix c_h, CMatrix c_z) : c_h_(std::move(c_h)), c_z_(std::move(c_z)) {
  if (c_h_.rows() != c_z_.rows() || c_h_.rows() != c_h_.cols() || c_z_.rows() != c_z_.cols()) {
    throw DimensionError("covariance matrices must be square and of equal size");
  }
  if (!is_hermitian(c_h_, 1e-12)) throw CovarianceError("channel covariance is not Hermitian");
  if (!is_hermitian(c_z_, 1e-12)) throw CovarianceError("noise covariance is not Hermitian");

  RVector d;
  CMatrix v;
  hermitian_eig(c_z_, d, v);
  if (!(d.minCoeff() > kRankTol * d.maxCoeff())) {
    throw CovarianceError("noise covariance is not positive definite");
  }
  chol_z_ = psd_factor(c_z_, "noise covariance");
  chol_h_ = psd_factor(c_h_, "channel covariance");
}

double CovariancePair::snr() const { return c_h_.trace().real() / c_z_.trace().real(); }

CovariancePair build_covariance_pair(const ChannelSpec& spec) {
  spec.validate();
  CMatrix c_h = build_exponential_covariance(spec.n_antennas, spec.rho);
  const double tr_h = c_h.trace().real();
  const auto n = static_cast<Eigen::Index>(spec.n_antennas);
  if (!spec.noise_covariance) {
    const double sigma2 = tr_h / (static_cast<double>(n) * spec.snr);
    return CovariancePair(std::move(c_h), CMatrix::Identity(n, n) * sigma2);
  }
  CMatrix c_z = *spec.noise_covariance;
  if (!is_hermitian(c_z, 1e-12)) throw CovarianceError("custom noise covariance is not Hermitian");
  const double tr_z = c_z.trace().real();
  if (!(tr_z > 0.0)) throw CovarianceError("custom noise covariance is not positive definite");
  c_z *= tr_h / (spec.snr * tr_z);
  return CovariancePair(std::move(c_h), std::move(c_z));
}

Spectrum::Spectrum(RVector gamma, CMatrix u_basis, CMatrix whitener)
    : gamma_(std::move(gamma)), u_(std::move(u_basis)), w_(std::move(whitener)) {
  if (u_.rows() != gamma_.size() || u_.cols() != gamma_.size() || w_.rows() != gamma_.size() ||
      w_.cols() != gamma_.size()) {
    throw DimensionError("spectrum basis and whitener must be N x N");
  }
  if (gamma_.size() == 0) throw DimensionError("spectrum must be non-empty");
  if ((gamma_.array() < 0.0).any() || !gamma_.allFinite()) {
    throw ParameterError("spectrum eigenvalues must be finite and nonnegative");
  }
}

Spectrum Spectrum::from_gamma(RVector gamma) {
  const auto n = gamma.size();
  return Spectrum(std::move(gamma), CMatrix::Identity(n, n), CMatrix::Identity(n, n));
}

Spectrum Spectrum::isotropic(std::size_t n, double alpha) {
  return from_gamma(RVector::Constant(static_cast<Eigen::Index>(n), alpha));
}

double Spectrum::max_gamma() const { return gamma_.maxCoeff(); }

std::size_t Spectrum::significant_count(double rel_tol) const {
  const double cut = rel_tol * max_gamma();
  return static_cast<std::size_t>((gamma_.array() > cut).count());
}

bool Spectrum::is_isotropic(double rel_tol) const {
  const double hi = gamma_.maxCoeff();
  const double lo = gamma_.minCoeff();
  return hi - lo <= rel_tol * hi;
}

Spectrum Spectrum::scaled(double factor) const {
  if (!(factor > 0.0)) throw ParameterError("spectrum scale factor must be positive");
  // W C_h W^H = diag(gamma); scaling C_z by 1/factor scales W by sqrt(factor).
  return Spectrum(gamma_ * factor, u_, w_ * std::sqrt(factor));
}

Spectrum decompose(const CovariancePair& pair) {
  const auto& c_z = pair.c_z();
  const auto n = c_z.rows();

  RVector dz;
  CMatrix vz;
  hermitian_eig(c_z, dz, vz);
  if (!(dz.minCoeff() > kRankTol * dz.maxCoeff())) {
    throw SingularityError("noise covariance is singular to working precision");
  }
  const CMatrix inv_sqrt = vz * dz.cwiseSqrt().cwiseInverse().asDiagonal() * vz.adjoint();

  CMatrix whitened = inv_sqrt * pair.c_h() * inv_sqrt;
  whitened = (0.5 * (whitened + whitened.adjoint())).eval();

  RVector values;
  CMatrix vectors;
  hermitian_eig(whitened, values, vectors);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });

  RVector gamma(n);
  CMatrix u(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto src = order[static_cast<std::size_t>(j)];
    gamma(j) = std::max(values(src), 0.0);
    auto col = vectors.col(src);
    const double cut = 1e-10 * col.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < n; ++k) {
      const double mag = std::abs(col(k));
      if (mag > cut) {
        col *= std::conj(col(k)) / mag;
        col(k) = mag;
        break;
      }
    }
    u.col(j) = col;
  }

  CMatrix w = u.adjoint() * inv_sqrt;
  return Spectrum(std::move(gamma), std::move(u), std::move(w));
}

CVector whiten(const Spectrum& spectrum, const CVector& y) {
  if (static_cast<std::size_t>(y.size()) != spectrum.size()) {
    throw DimensionError("received vector length does not match the spectrum");
  }
  return spectrum.whitener() * y;
}

CVector sample_whitened(const Spectrum& spectrum, double energy, RngStream& rng) {
  if (!(energy >= 0.0)) throw ParameterError("symbol energy must be nonnegative");
  const auto& gamma = spectrum.gamma();
  CVector r(gamma.size());
  for (Eigen::Index k = 0; k < gamma.size(); ++k) {
    r(k) = std::sqrt(energy * gamma(k) + 1.0) * rng.complex_normal();
  }
  return r;
}

PhysicalSample sample_physical(const CovariancePair& pair, std::complex<double> symbol,
                               RngStream& rng) {
  const auto n = static_cast<Eigen::Index>(pair.size());
  CVector gh(n);
  CVector gz(n);
  for (Eigen::Index k = 0; k < n; ++k) gh(k) = rng.complex_normal();
  for (Eigen::Index k = 0; k < n; ++k) gz(k) = rng.complex_normal();
  const CVector h = pair.channel_factor() * gh;
  PhysicalSample out;
  out.y = h * symbol + pair.noise_factor() * gz;
  out.h_norm_sq = h.squaredNorm();
  return out;
}

}  // namespace quadet
