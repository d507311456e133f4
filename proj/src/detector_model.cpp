#include "nvrelax/detector_model.hpp"

#include "nvrelax/errors.hpp"

#include <cmath>

namespace nvrelax {

void DetectorParams::validate() const {
  if (!(collection_efficiency > 0.0 && collection_efficiency <= 1.0)) {
    throw ParameterError("collection_efficiency must lie in (0, 1]");
  }
  if (!(background_rate >= 0.0)) throw ParameterError("background_rate must be >= 0");
}

double expected_counts(double fluor_integral, const DetectorParams& params,
                       double window, double shots) {
  if (!(fluor_integral >= 0.0) || !(window >= 0.0) || !(shots >= 0.0)) {
    throw ParameterError("expected_counts inputs must be >= 0");
  }
  return shots * (params.collection_efficiency * fluor_integral +
                  params.background_rate * window);
}

double sample_counts(double mean, const DetectorParams& params, Rng& rng) {
  if (!(mean >= 0.0)) throw ParameterError("count mean must be >= 0");
  if (params.noiseless || mean == 0.0) return mean;
  if (mean < kPoissonNormalCutoff) {
    std::poisson_distribution<long long> poisson(mean);
    return static_cast<double>(poisson(rng));
  }
  std::normal_distribution<double> normal(mean, std::sqrt(mean));
  return std::max(0.0, std::round(normal(rng)));
}

DifferentialSignal differential_signal(double sig1, double sig2) {
  if (!(sig1 >= 0.0) || !(sig2 >= 0.0)) {
    throw ParameterError("readout counts must be >= 0");
  }
  const double total = sig1 + sig2;
  if (total == 0.0) throw DegenerateReadoutError("sig1 + sig2 == 0");
  return {(sig1 - sig2) / total,
          2.0 * std::sqrt(sig1 * sig2 * total) / (total * total)};
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

}  // namespace nvrelax
