#pragma once

#include "nvrelax/sequence_engine.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace nvrelax {

// Parameters of S(tau) = amplitude * exp(-tau / t1) + offset, t1 in ms.
struct ExpParams {
  double amplitude = 0.0;
  double offset = 0.0;
  double t1_ms = 1.0;
};

double exp_model(double tau_ms, const ExpParams& p);
/// d S / d (amplitude, offset, t1).
Eigen::Vector3d exp_gradient(double tau_ms, const ExpParams& p);

struct FitOptions {
  int max_iter = 200;
  double step_tol = 1e-8;   // relative parameter step
  double cost_tol = 1e-10;  // relative cost decrease
  double t1_min_ms = 1e-4;
  double t1_max_ms = 1e4;
};

struct FitResult {
  double amplitude = 0.0;
  double offset = 0.0;
  double t1 = 0.0;      // ms
  double t1_err = 0.0;  // ms
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // (A, C, t1)
  double reduced_chi2 = 0.0;
  double cost = 0.0;  // weighted sum of squared residuals
  int iterations = 0;
  bool converged = false;
  bool at_bound = false;
  bool weighted = false;

  ExpParams params() const { return {amplitude, offset, t1}; }
};

/// Weighted (1/signal_err^2, when every row has an error) squared residuals.
double fit_cost(const Trace& trace, const ExpParams& p);

/// Log-linear starting point. Needs >= 4 rows spanning >= one decade in tau
/// and >= 4 rows whose signal clears the offset by 3 sigma; throws
/// InsufficientDataError otherwise.
ExpParams initial_guess(const Trace& trace);

/// Levenberg-Marquardt on the single-exponential model with analytic
/// Jacobian. Non-convergence is reported through FitResult::converged.
FitResult fit_exponential(const Trace& trace,
                          const std::optional<ExpParams>& guess = std::nullopt,
                          const FitOptions& options = {});

struct OracleGridSpec {
  int points = 2000;
  double low_factor = 0.1;   // grid starts at low_factor * min tau
  double high_factor = 10.0; // and ends at high_factor * max tau
  std::vector<double> explicit_t1_ms;  // overrides the generated grid
};

struct OracleResult {
  ExpParams params;
  double cost = 0.0;
  double grid_ratio = 1.0;  // ratio between neighboring grid t1 values
};

/// Brute-force variable projection: for each grid t1 the amplitude and
/// offset come from an exact weighted linear least-squares solve.
OracleResult oracle_fit(const Trace& trace, const OracleGridSpec& grid = {});

/// Residual-resampling bootstrap standard deviation of t1 (ms). Throws
/// BootstrapUnstableError if more than 20% of refits fail.
double bootstrap_t1_err(const Trace& trace, const FitResult& fit, int n_resamples,
                        std::uint64_t rng_seed);

}  // namespace nvrelax
