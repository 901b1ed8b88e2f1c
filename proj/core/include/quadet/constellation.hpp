#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace quadet {

/// Unipolar PAM constellation carrying information in the symbol energy.
///
/// Amplitudes are ascending and nonnegative with a null symbol first; the
/// prior is uniform and the mean energy is one.
class Constellation {
 public:
  /// Uniform M-ASK: amplitudes proportional to 0, 1, ..., M-1.
  static Constellation uniform_ask(std::size_t m);

  /// Custom constellation from amplitudes, rescaled to unit mean energy.
  /// Rejects non-ascending input, a missing null symbol, and (unless
  /// allow_degenerate) repeated energies.
  static Constellation from_amplitudes(std::vector<double> amplitudes, bool allow_degenerate = false);
  static Constellation from_energies(std::vector<double> energies, bool allow_degenerate = false);

  std::size_t size() const { return energies_.size(); }
  std::span<const double> amplitudes() const { return amplitudes_; }
  std::span<const double> energies() const { return energies_; }
  double energy(std::size_t i) const { return energies_[i]; }
  double amplitude(std::size_t i) const { return amplitudes_[i]; }
  double prior() const { return 1.0 / static_cast<double>(size()); }
  double mean_energy() const;
  /// Var(eps) under the uniform prior.
  double energy_variance() const { return energy_variance_; }

 private:
  Constellation(std::vector<double> amplitudes, bool allow_degenerate);

  std::vector<double> amplitudes_;
  std::vector<double> energies_;
  double energy_variance_ = 0.0;
};

/// True iff all energies are pairwise distinct (relative tolerance 1e-12).
bool check_identifiable(const Constellation& c);

}  // namespace quadet
