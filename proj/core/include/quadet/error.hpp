#pragma once

#include <stdexcept>
#include <string>

namespace quadet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A user-facing parameter is outside its admissible domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A covariance matrix is not Hermitian or not positive definite.
class CovarianceError : public Error {
 public:
  using Error::Error;
};

/// A matrix or spectrum is (numerically) singular where full rank is needed.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix sizes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Two Gaussian likelihoods do not intersect on the real line.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Thresholds or moments collapse into a configuration the detector cannot use.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Two hypotheses are statistically indistinguishable.
class IdentifiabilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace quadet
