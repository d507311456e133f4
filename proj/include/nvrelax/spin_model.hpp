#pragma once

#include <Eigen/Dense>

#include <array>
#include <string_view>

namespace nvrelax {

// Lumped NV level indices. g1/e1 carry the degenerate |ms=+-1> pair.
enum Level : int { kG0 = 0, kG1 = 1, kE0 = 2, kE1 = 3, kSinglet = 4 };
inline constexpr int kNumLevels = 5;

using RateMatrix = Eigen::Matrix<double, kNumLevels, kNumLevels>;
using PopulationVector = Eigen::Matrix<double, kNumLevels, 1>;

/// Transition rates of the lumped five-level NV model, all in 1/s.
struct PhotophysicsParams {
  double pump_rate = 2.0e7;           // laser-on g -> e, spin conserving
  double radiative_rate = 6.5e7;      // e -> g, spin conserving
  double isc_rate_ms0 = 1.1e7;        // e0 -> singlet
  double isc_rate_ms1 = 8.0e7;        // e1 -> singlet
  double singlet_decay_rate = 3.3e6;  // singlet -> ground
  double singlet_branch_to_ms0 = 0.85;
  // Fraction of ground population sitting in |0> at thermal equilibrium.
  // 1/2 puts |0> and the lumped |+-1> level on equal footing; 1/3 is the
  // per-sublevel uniform distribution.
  double ground_eq_ms0 = 0.5;
  double zfs_ghz = 2.87;  // informational only

  /// Throws ParameterError on negative rates, fractions outside [0,1], or
  /// isc_rate_ms1 <= isc_rate_ms0.
  void validate() const;
};

/// Named parameter presets shipped with the toolkit. "default" is tuned to
/// put the optically pumped ground polarization near 0.96.
PhotophysicsParams photophysics_preset(std::string_view name);
bool has_photophysics_preset(std::string_view name);

/// Occupation probabilities over {g0, g1, e0, e1, s}.
class PopulationState {
public:
  PopulationState() = default;
  explicit PopulationState(const PopulationVector& p);
  PopulationState(std::initializer_list<double> p);

  const PopulationVector& vector() const { return p_; }
  double operator[](int level) const { return p_[level]; }

  double ground_total() const { return p_[kG0] + p_[kG1]; }
  /// p_g0 / (p_g0 + p_g1); throws DegeneracyError on an empty ground manifold.
  double ground_polarization() const;

private:
  PopulationVector p_ = PopulationVector::Zero();
};

/// Generator of dp/dt = M p for the given drive condition. gamma1 in 1/s.
RateMatrix build_rate_matrix(const PhotophysicsParams& params, bool laser_on,
                             double gamma1);

/// exp(M * duration) * p. Throws NumericOverflowError when
/// duration * max|M_ij| exceeds kMaxPropagationNorm.
PopulationState propagate(const PopulationState& state, const RateMatrix& m,
                          double duration);
inline constexpr double kMaxPropagationNorm = 1e9;

/// Integral over [0, duration] of exp(M t) p dt, the time-integrated
/// populations. Computed exactly through the augmented generator
/// [[M, p], [0, 0]].
PopulationVector integrate_populations(const PopulationState& state,
                                       const RateMatrix& m, double duration);

/// Instantaneous ground-manifold swap with the given fidelity in [0, 1].
PopulationState apply_pi_pulse(const PopulationState& state, double fidelity);

/// Normalized nonnegative kernel vector of M. Throws DegeneracyError if the
/// kernel is not one-dimensional.
PopulationState steady_state(const RateMatrix& m);

/// Detected-band emission rate radiative_rate * (p_e0 + p_e1), photons/s.
double fluorescence_rate(const PopulationState& state,
                         const PhotophysicsParams& params);

}  // namespace nvrelax
