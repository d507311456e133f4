#pragma once

#include "nvrelax/detector_model.hpp"
#include "nvrelax/fitting.hpp"
#include "nvrelax/sequence_engine.hpp"
#include "nvrelax/spin_model.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace nvrelax::testing {

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::abs(b); }

inline double log_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

// Valid photophysics draw with the spin-dependent ISC ordering intact.
inline PhotophysicsParams random_photophysics(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PhotophysicsParams p;
  p.pump_rate = log_uniform(rng, 1e5, 1e8);
  p.radiative_rate = log_uniform(rng, 1e7, 1e8);
  p.isc_rate_ms0 = log_uniform(rng, 1e5, 3e7);
  p.isc_rate_ms1 = p.isc_rate_ms0 * log_uniform(rng, 1.5, 20.0);
  p.singlet_decay_rate = log_uniform(rng, 1e6, 1e7);
  p.singlet_branch_to_ms0 = unit(rng);
  p.ground_eq_ms0 = 0.2 + 0.6 * unit(rng);
  return p;
}

inline PopulationState random_population(Rng& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  PopulationVector v;
  for (int i = 0; i < kNumLevels; ++i) v[i] = g(rng);
  return PopulationState(v / v.sum());
}

// S(tau) = A exp(-tau/t1) + C on a log grid, with optional Gaussian noise
// of standard deviation sigma (recorded as signal_err).
inline Trace synthetic_trace(double amplitude, double offset, double t1_ms, double sigma,
                             std::uint64_t seed, int n = 30, double tau_min_s = 10e-6,
                             double tau_max_s = 15e-3) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
  Trace t;
  for (double tau : make_tau_grid(tau_min_s, tau_max_s, n, true)) {
    TraceRow r;
    r.tau_s = tau;
    r.signal = amplitude * std::exp(-tau * 1e3 / t1_ms) + offset;
    if (sigma > 0.0) r.signal += noise(rng);
    r.signal_err = sigma;
    r.sig1 = 1e5 * (1.0 + r.signal);
    r.sig2 = 1e5 * (1.0 - r.signal);
    t.rows.push_back(r);
  }
  return t;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("nvrelax_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace nvrelax::testing
