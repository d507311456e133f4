#pragma once

#include <cstdint>
#include <random>

namespace nvrelax {

using Rng = std::mt19937_64;

struct DetectorParams {
  double collection_efficiency = 0.05;
  double background_rate = 0.0;  // counts/s
  bool noiseless = false;

  void validate() const;
};

/// Mean counts over `shots` repetitions of a readout window of length
/// `window` seconds collecting `fluor_integral` emitted photons per shot.
double expected_counts(double fluor_integral, const DetectorParams& params,
                       double window, double shots);

/// Means at or above this use a rounded normal approximation to Poisson.
inline constexpr double kPoissonNormalCutoff = 1e4;

/// Shot-noise draw with the given mean; returns the mean itself in noiseless
/// mode.
double sample_counts(double mean, const DetectorParams& params, Rng& rng);

struct DifferentialSignal {
  double signal = 0.0;
  double signal_err = 0.0;
};

/// (sig1 - sig2) / (sig1 + sig2) with first-order Poisson error
/// 2 sqrt(sig1 sig2 (sig1 + sig2)) / (sig1 + sig2)^2. Throws
/// DegenerateReadoutError when both are zero.
DifferentialSignal differential_signal(double sig1, double sig2);

/// Mixes a base seed with an index path into an independent sub-seed
/// (splitmix64 finalizer). Results depend only on the inputs, never on
/// evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

Rng make_rng(std::uint64_t seed);

}  // namespace nvrelax
