#pragma once

#include "nvrelax/noise_model.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nvrelax {

struct CalibrationPoint {
  double amount = 0.0;
  AmountUnit unit = AmountUnit::kPmol;
  double t1_ms = 0.0;
  std::optional<double> t1_err_ms;
  std::string location_id;
};

struct ReplicateSummary {
  double amount = 0.0;
  AmountUnit unit = AmountUnit::kPmol;
  double mean_t1_ms = 0.0;
  std::optional<double> sem_ms;  // empty when n == 1 and no t1_err is known
  int n = 0;
  bool sem_from_point_error = false;  // n == 1 fallback used
};

/// Mean and standard error of the mean per distinct amount, in ascending
/// amount order. Mixed units throw ParseError.
std::vector<ReplicateSummary> average_replicates(std::span<const CalibrationPoint> points);

struct CalibrationModel {
  double slope = 0.0;          // ms per amount unit
  double intercept = 0.0;      // ms
  double slope_err = 0.0;
  double intercept_err = 0.0;
  double slope_intercept_cov = 0.0;
  double residual_rms = 0.0;   // sqrt(SSR / (n - 2))
  double sigma_t1 = 0.0;       // max(residual_rms, sigma floor)
  double lod = 0.0;
  double k_factor = 1.0;
  AmountUnit unit = AmountUnit::kPmol;
  int n_points = 0;
  bool weighted = false;
  bool slope_nonnegative = false;  // assay-direction warning
};

struct CalibrationOptions {
  double k_factor = 1.0;
  double sigma_floor_ms = 0.1;
};

/// Least squares of t1 on amount, weighted by 1/t1_err^2 when every point
/// carries a positive error. Needs >= 3 distinct amounts.
CalibrationModel fit_calibration(std::span<const CalibrationPoint> points,
                                 const CalibrationOptions& options = {});

/// Fits the replicate means (SEM as point error) instead of raw points.
CalibrationModel fit_calibration_replicates(std::span<const CalibrationPoint> points,
                                            const CalibrationOptions& options = {});

/// k * sigma_t1 / |slope|.
double detection_limit(const CalibrationModel& model, double sigma_t1_ms, double k);

struct Quantification {
  double amount = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double amount_sd = 0.0;
  bool below_baseline = false;  // raw inverse prediction was negative
  bool below_lod = false;
};

inline constexpr double kCiZ = 1.959963984540054;  // two-sided 95%

/// Inverse prediction (t1 - intercept) / slope with first-order propagation
/// of t1_err, slope_err, intercept_err and their covariance.
Quantification quantify(const CalibrationModel& model, double t1_measured_ms,
                        double t1_err_ms);

}  // namespace nvrelax
