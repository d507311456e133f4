#include "nvrelax/assay_analysis.hpp"

#include "nvrelax/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace nvrelax {

namespace {

AmountUnit common_unit(std::span<const CalibrationPoint> points) {
  const AmountUnit unit = points.front().unit;
  for (const auto& p : points) {
    if (p.unit != unit) throw ParseError("calibration points mix amount units");
  }
  return unit;
}

void check_point(const CalibrationPoint& p) {
  if (!(p.amount >= 0.0)) throw ParameterError("calibration amount must be >= 0");
  if (!(p.t1_ms > 0.0)) throw ParameterError("calibration t1 must be > 0");
  if (p.t1_err_ms && !(*p.t1_err_ms >= 0.0)) throw ParameterError("t1_err must be >= 0");
}

}  // namespace

std::vector<ReplicateSummary> average_replicates(std::span<const CalibrationPoint> points) {
  if (points.empty()) return {};
  const AmountUnit unit = common_unit(points);
  std::map<double, std::vector<const CalibrationPoint*>> groups;
  for (const auto& p : points) {
    check_point(p);
    groups[p.amount].push_back(&p);
  }

  std::vector<ReplicateSummary> out;
  for (const auto& [amount, members] : groups) {
    ReplicateSummary s;
    s.amount = amount;
    s.unit = unit;
    s.n = static_cast<int>(members.size());
    double sum = 0.0;
    for (const auto* p : members) sum += p->t1_ms;
    s.mean_t1_ms = sum / s.n;
    if (s.n > 1) {
      double ss = 0.0;
      for (const auto* p : members) ss += (p->t1_ms - s.mean_t1_ms) * (p->t1_ms - s.mean_t1_ms);
      s.sem_ms = std::sqrt(ss / (s.n - 1)) / std::sqrt(static_cast<double>(s.n));
    } else {
      s.sem_ms = members.front()->t1_err_ms;
      s.sem_from_point_error = true;
    }
    out.push_back(s);
  }
  return out;
}

CalibrationModel fit_calibration(std::span<const CalibrationPoint> points,
                                 const CalibrationOptions& options) {
  if (points.empty()) throw InsufficientDataError("calibration needs >= 3 distinct amounts");
  const AmountUnit unit = common_unit(points);
  std::vector<double> distinct;
  for (const auto& p : points) {
    check_point(p);
    distinct.push_back(p.amount);
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) {
    throw InsufficientDataError("calibration needs >= 3 distinct amounts, got " +
                                std::to_string(distinct.size()));
  }
  if (!(options.k_factor > 0.0)) throw ParameterError("k must be > 0");
  if (!(options.sigma_floor_ms >= 0.0)) throw ParameterError("sigma floor must be >= 0");

  const bool weighted = std::all_of(points.begin(), points.end(), [](const CalibrationPoint& p) {
    return p.t1_err_ms && *p.t1_err_ms > 0.0;
  });

  // Centered sums keep the normal equations well conditioned.
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (const auto& p : points) {
    const double w = weighted ? 1.0 / (*p.t1_err_ms * *p.t1_err_ms) : 1.0;
    sw += w;
    sx += w * p.amount;
    sy += w * p.t1_ms;
  }
  const double xbar = sx / sw;
  const double ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    const double w = weighted ? 1.0 / (*p.t1_err_ms * *p.t1_err_ms) : 1.0;
    sxx += w * (p.amount - xbar) * (p.amount - xbar);
    sxy += w * (p.amount - xbar) * (p.t1_ms - ybar);
  }

  CalibrationModel m;
  m.unit = unit;
  m.weighted = weighted;
  m.n_points = static_cast<int>(points.size());
  m.k_factor = options.k_factor;
  m.slope = sxy / sxx;
  m.intercept = ybar - m.slope * xbar;

  double ssr = 0.0, chi2 = 0.0;
  for (const auto& p : points) {
    const double r = p.t1_ms - (m.intercept + m.slope * p.amount);
    const double w = weighted ? 1.0 / (*p.t1_err_ms * *p.t1_err_ms) : 1.0;
    ssr += r * r;
    chi2 += w * r * r;
  }
  const double dof = static_cast<double>(points.size() - 2);
  m.residual_rms = std::sqrt(ssr / dof);
  const double scale = chi2 / dof;  // reduced chi^2 (residual variance if unweighted)
  const double var_slope = scale / sxx;
  m.slope_err = std::sqrt(var_slope);
  m.intercept_err = std::sqrt(scale / sw + xbar * xbar * var_slope);
  m.slope_intercept_cov = -xbar * var_slope;

  m.sigma_t1 = std::max(m.residual_rms, options.sigma_floor_ms);
  m.slope_nonnegative = m.slope >= 0.0;
  if (m.sigma_t1 > 0.0 && m.slope != 0.0) {
    m.lod = detection_limit(m, m.sigma_t1, m.k_factor);
  } else if (m.sigma_t1 <= 0.0) {
    throw DegeneracyError("sigma_t1 is zero; supply a positive sigma floor");
  } else {
    throw DegeneracyError("calibration slope is zero; detection limit undefined");
  }
  return m;
}

CalibrationModel fit_calibration_replicates(std::span<const CalibrationPoint> points,
                                            const CalibrationOptions& options) {
  const auto groups = average_replicates(points);
  std::vector<CalibrationPoint> means;
  means.reserve(groups.size());
  for (const auto& g : groups) {
    means.push_back({g.amount, g.unit, g.mean_t1_ms, g.sem_ms, {}});
  }
  return fit_calibration(means, options);
}

double detection_limit(const CalibrationModel& model, double sigma_t1_ms, double k) {
  if (model.slope == 0.0) throw DegeneracyError("zero slope: detection limit undefined");
  if (!(sigma_t1_ms > 0.0)) throw ParameterError("sigma_t1 must be > 0");
  if (!(k > 0.0)) throw ParameterError("k must be > 0");
  return k * (sigma_t1_ms / std::abs(model.slope));
}

Quantification quantify(const CalibrationModel& model, double t1_measured_ms,
                        double t1_err_ms) {
  if (model.slope == 0.0) throw DegeneracyError("zero slope: cannot invert calibration");
  if (!(t1_measured_ms > 0.0)) throw ParameterError("measured t1 must be > 0");
  if (!(t1_err_ms >= 0.0)) throw ParameterError("t1_err must be >= 0");

  Quantification q;
  const double raw = (t1_measured_ms - model.intercept) / model.slope;
  const double var = (t1_err_ms * t1_err_ms + model.intercept_err * model.intercept_err +
                      raw * raw * model.slope_err * model.slope_err +
                      2.0 * raw * model.slope_intercept_cov) /
                     (model.slope * model.slope);
  q.amount_sd = std::sqrt(std::max(var, 0.0));
  q.below_baseline = raw < 0.0;
  q.amount = std::max(raw, 0.0);
  q.ci_low = std::max(raw - kCiZ * q.amount_sd, 0.0);
  q.ci_high = std::max(raw + kCiZ * q.amount_sd, 0.0);
  q.below_lod = q.amount < model.lod;
  return q;
}

}  // namespace nvrelax
