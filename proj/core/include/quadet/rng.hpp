#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace quadet {

/// Mixes a master seed and a stream index into an engine seed (SplitMix64
/// finalizer applied twice). Distinct stream ids give decorrelated engines.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_id) noexcept;

/// One independent random stream.
///
/// Engine: std::mt19937_64, seeded with derive_seed(master, stream).
/// Gaussians: boost::random::normal_distribution, a ziggurat sampler whose
/// output is a fixed function of the engine words (unlike std:: distributions,
/// it does not vary between standard-library vendors).
/// A standard circularly-symmetric complex normal is (u + j v) / sqrt(2) with
/// u, v independent N(0, 1).
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  double normal() { return normal_(engine_); }

  std::complex<double> complex_normal() {
    constexpr double kInvSqrt2 = 0.70710678118654752440;
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {re * kInvSqrt2, im * kInvSqrt2};
  }

  /// Uniform integer in [0, count).
  std::size_t uniform_index(std::size_t count);

  /// Uniform real in [0, 1).
  double uniform();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace quadet
