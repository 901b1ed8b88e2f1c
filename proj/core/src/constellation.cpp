#include "quadet/constellation.hpp"

#include <cmath>
#include <numeric>

#include "quadet/error.hpp"

namespace quadet {

namespace {

constexpr double kEnergyTol = 1e-12;

bool distinct(double a, double b) {
  return std::abs(a - b) > kEnergyTol * std::max(std::abs(a), std::abs(b));
}

}  // namespace

Constellation::Constellation(std::vector<double> amplitudes, bool allow_degenerate)
    : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() < 2) throw ParameterError("constellation order must be at least 2");
  if (amplitudes_.front() != 0.0) throw ParameterError("constellation must start with the null symbol");
  for (std::size_t i = 0; i < amplitudes_.size(); ++i) {
    if (!std::isfinite(amplitudes_[i]) || amplitudes_[i] < 0.0) {
      throw ParameterError("amplitudes must be finite and nonnegative");
    }
    if (i > 0 && amplitudes_[i] < amplitudes_[i - 1]) {
      throw ParameterError("amplitudes must be ascending");
    }
    if (i > 0 && !allow_degenerate && !distinct(amplitudes_[i], amplitudes_[i - 1])) {
      throw ParameterError("repeated symbol energy: constellation is not uniquely identifiable");
    }
  }

  double total = 0.0;
  for (double a : amplitudes_) total += a * a;
  if (!(total > 0.0)) throw ParameterError("constellation has zero average power");
  const double m = static_cast<double>(amplitudes_.size());
  const double scale = std::sqrt(m / total);

  energies_.reserve(amplitudes_.size());
  for (double& a : amplitudes_) {
    a *= scale;
    energies_.push_back(a * a);
  }
  double var = 0.0;
  const double mean = mean_energy();
  for (double e : energies_) var += (e - mean) * (e - mean);
  energy_variance_ = var / m;
}

Constellation Constellation::uniform_ask(std::size_t m) {
  if (m < 2) throw ParameterError("constellation order must be at least 2");
  std::vector<double> amps(m);
  std::iota(amps.begin(), amps.end(), 0.0);
  return Constellation(std::move(amps), false);
}

Constellation Constellation::from_amplitudes(std::vector<double> amplitudes, bool allow_degenerate) {
  return Constellation(std::move(amplitudes), allow_degenerate);
}

Constellation Constellation::from_energies(std::vector<double> energies, bool allow_degenerate) {
  for (double& e : energies) {
    if (!(e >= 0.0)) throw ParameterError("energies must be nonnegative");
    e = std::sqrt(e);
  }
  return Constellation(std::move(energies), allow_degenerate);
}

double Constellation::mean_energy() const {
  return std::accumulate(energies_.begin(), energies_.end(), 0.0) / static_cast<double>(size());
}

bool check_identifiable(const Constellation& c) {
  const auto e = c.energies();
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      if (!distinct(e[i], e[j])) return false;
    }
  }
  return true;
}

}  // namespace quadet
