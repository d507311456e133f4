#include "nvrelax/fitting.hpp"

#include "nvrelax/detector_model.hpp"
#include "nvrelax/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nvrelax {

namespace {

constexpr double kSecondsToMs = 1e3;

struct Prepared {
  Eigen::VectorXd tau_ms;
  Eigen::VectorXd y;
  Eigen::VectorXd sqrt_w;
  bool weighted = false;
};

Prepared prepare(const Trace& trace) {
  trace.validate();
  const auto n = static_cast<Eigen::Index>(trace.rows.size());
  Prepared p;
  p.tau_ms.resize(n);
  p.y.resize(n);
  p.sqrt_w.setOnes(n);
  p.weighted = trace.has_errors();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = trace.rows[static_cast<std::size_t>(i)];
    p.tau_ms[i] = r.tau_s * kSecondsToMs;
    p.y[i] = r.signal;
    if (p.weighted) p.sqrt_w[i] = 1.0 / r.signal_err;
  }
  return p;
}

Eigen::VectorXd residuals(const Prepared& d, const ExpParams& p) {
  Eigen::VectorXd r(d.y.size());
  for (Eigen::Index i = 0; i < d.y.size(); ++i) {
    r[i] = d.sqrt_w[i] * (d.y[i] - exp_model(d.tau_ms[i], p));
  }
  return r;
}

// Jacobian of the weighted residual vector, d r / d (A, C, t1).
Eigen::MatrixX3d jacobian(const Prepared& d, const ExpParams& p) {
  Eigen::MatrixX3d j(d.y.size(), 3);
  for (Eigen::Index i = 0; i < d.y.size(); ++i) {
    j.row(i) = -d.sqrt_w[i] * exp_gradient(d.tau_ms[i], p).transpose();
  }
  return j;
}

ExpParams from_vector(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
Eigen::Vector3d to_vector(const ExpParams& p) { return {p.amplitude, p.offset, p.t1_ms}; }

}  // namespace

double exp_model(double tau_ms, const ExpParams& p) {
  return p.amplitude * std::exp(-tau_ms / p.t1_ms) + p.offset;
}

Eigen::Vector3d exp_gradient(double tau_ms, const ExpParams& p) {
  const double e = std::exp(-tau_ms / p.t1_ms);
  return {e, 1.0, p.amplitude * e * tau_ms / (p.t1_ms * p.t1_ms)};
}

double fit_cost(const Trace& trace, const ExpParams& p) {
  return residuals(prepare(trace), p).squaredNorm();
}

ExpParams initial_guess(const Trace& trace) {
  trace.validate();
  const auto& rows = trace.rows;
  const std::size_t n = rows.size();
  if (n < 4) throw InsufficientDataError("need at least 4 trace points");
  if (rows.back().tau_s < 10.0 * rows.front().tau_s) {
    throw InsufficientDataError("tau span must cover at least one decade");
  }

  const std::size_t tail = std::max<std::size_t>(1, (n + 9) / 10);
  double offset = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) offset += rows[i].signal;
  offset /= static_cast<double>(tail);
  const double amplitude = rows.front().signal - offset;
  const double sign = amplitude < 0.0 ? -1.0 : 1.0;

  // Weighted line through log|signal - C|; weights (signal - C)^2 undo the
  // noise amplification of the logarithm near the offset.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (const auto& r : rows) {
    const double excess = sign * (r.signal - offset);
    if (!(excess > 3.0 * r.signal_err) || excess <= 0.0) continue;
    const double x = r.tau_s * kSecondsToMs;
    const double z = std::log(excess);
    const double w = excess * excess;
    sw += w;
    sx += w * x;
    sy += w * z;
    sxx += w * x * x;
    sxy += w * x * z;
    ++used;
  }
  if (used < 4) {
    throw InsufficientDataError("fewer than 4 points rise above the offset by 3 sigma");
  }
  const double denom = sw * sxx - sx * sx;
  const double slope = denom != 0.0 ? (sw * sxy - sx * sy) / denom : 0.0;
  if (!(slope < 0.0)) throw InsufficientDataError("signal does not decay");
  const double intercept = (sy - slope * sx) / sw;

  FitOptions bounds;
  const double t1 = std::clamp(-1.0 / slope, bounds.t1_min_ms, bounds.t1_max_ms);
  return {sign * std::exp(intercept), offset, t1};
}

FitResult fit_exponential(const Trace& trace, const std::optional<ExpParams>& guess,
                          const FitOptions& options) {
  const Prepared data = prepare(trace);
  const auto n = data.y.size();
  if (n < 4) throw InsufficientDataError("need at least 4 trace points to fit 3 parameters");

  ExpParams start = guess ? *guess : initial_guess(trace);
  start.t1_ms = std::clamp(start.t1_ms, options.t1_min_ms, options.t1_max_ms);

  const double y_scale = std::max(data.y.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::Vector3d x = to_vector(start);
  double cost = residuals(data, start).squaredNorm();
  double lambda = 1e-3;

  FitResult result;
  result.weighted = data.weighted;
  int iter = 0;
  bool converged = false;
  while (iter < options.max_iter && !converged) {
    ++iter;
    const ExpParams current = from_vector(x);
    const Eigen::MatrixX3d j = jacobian(data, current);
    const Eigen::VectorXd r = residuals(data, current);
    const Eigen::Matrix3d jtj = j.transpose() * j;
    const Eigen::Vector3d grad = j.transpose() * r;
    if (cost == 0.0 || grad.isZero(0.0)) {
      converged = true;
      break;
    }

    bool accepted = false;
    while (!accepted) {
      Eigen::Matrix3d damped = jtj;
      for (int k = 0; k < 3; ++k) damped(k, k) += lambda * std::max(jtj(k, k), 1e-300);
      const Eigen::Vector3d step = damped.ldlt().solve(-grad);
      Eigen::Vector3d trial = x + step;
      trial[2] = std::clamp(trial[2], options.t1_min_ms, options.t1_max_ms);
      const double trial_cost = step.allFinite()
                                    ? residuals(data, from_vector(trial)).squaredNorm()
                                    : std::numeric_limits<double>::infinity();
      if (trial_cost <= cost) {
        const Eigen::Vector3d taken = trial - x;
        const double decrease = (cost - trial_cost) / std::max(cost, 1e-300);
        const bool small_step = std::abs(taken[0]) <= options.step_tol * (std::abs(x[0]) + y_scale) &&
                                std::abs(taken[1]) <= options.step_tol * (std::abs(x[1]) + y_scale) &&
                                std::abs(taken[2]) <= options.step_tol * std::abs(x[2]);
        x = trial;
        cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        if (small_step || decrease < options.cost_tol) converged = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) {
          // No descent direction left at working precision.
          converged = true;
          break;
        }
      }
    }
  }

  const ExpParams best = from_vector(x);
  result.amplitude = best.amplitude;
  result.offset = best.offset;
  result.t1 = best.t1_ms;
  result.cost = cost;
  result.iterations = iter;
  result.converged = converged;
  result.at_bound = best.t1_ms <= options.t1_min_ms || best.t1_ms >= options.t1_max_ms;
  result.reduced_chi2 = cost / static_cast<double>(n - 3);

  const Eigen::MatrixX3d j = jacobian(data, best);
  const Eigen::Matrix3d jtj = j.transpose() * j;
  Eigen::Matrix3d cov = jtj.completeOrthogonalDecomposition().pseudoInverse();
  cov *= result.reduced_chi2;
  result.covariance = 0.5 * (cov + cov.transpose());
  result.t1_err = std::sqrt(std::max(result.covariance(2, 2), 0.0));
  return result;
}

OracleResult oracle_fit(const Trace& trace, const OracleGridSpec& grid) {
  const Prepared data = prepare(trace);
  const auto n = data.y.size();
  if (n < 2) throw InsufficientDataError("oracle needs at least 2 points");

  std::vector<double> t1_values = grid.explicit_t1_ms;
  double ratio = 1.0;
  if (t1_values.empty()) {
    if (grid.points < 2) throw ParameterError("oracle grid needs >= 2 points");
    const double lo = grid.low_factor * data.tau_ms.minCoeff();
    const double hi = grid.high_factor * data.tau_ms.maxCoeff();
    ratio = std::pow(hi / lo, 1.0 / (grid.points - 1));
    t1_values.resize(static_cast<std::size_t>(grid.points));
    for (int k = 0; k < grid.points; ++k) {
      t1_values[static_cast<std::size_t>(k)] = lo * std::pow(ratio, k);
    }
  } else if (t1_values.size() > 1) {
    for (std::size_t k = 1; k < t1_values.size(); ++k) {
      ratio = std::max(ratio, t1_values[k] / t1_values[k - 1]);
    }
  }

  OracleResult best;
  best.cost = std::numeric_limits<double>::infinity();
  best.grid_ratio = ratio;
  Eigen::MatrixX2d basis(n, 2);
  for (double t1 : t1_values) {
    for (Eigen::Index i = 0; i < n; ++i) {
      basis(i, 0) = data.sqrt_w[i] * std::exp(-data.tau_ms[i] / t1);
      basis(i, 1) = data.sqrt_w[i];
    }
    const Eigen::VectorXd rhs = data.sqrt_w.cwiseProduct(data.y);
    const Eigen::Vector2d coef = basis.colPivHouseholderQr().solve(rhs);
    const double cost = (rhs - basis * coef).squaredNorm();
    if (cost < best.cost) {
      best.cost = cost;
      best.params = {coef[0], coef[1], t1};
    }
  }
  return best;
}

double bootstrap_t1_err(const Trace& trace, const FitResult& fit, int n_resamples,
                        std::uint64_t rng_seed) {
  if (!fit.converged) throw ParameterError("bootstrap needs a converged fit");
  if (n_resamples < 2) throw ParameterError("bootstrap needs at least 2 resamples");
  const Prepared data = prepare(trace);
  const auto n = data.y.size();
  const ExpParams center = fit.params();

  // Standardized residuals so heteroscedastic errors are resampled fairly.
  Eigen::VectorXd fitted(n), scale(n), standardized(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    fitted[i] = exp_model(data.tau_ms[i], center);
    scale[i] = 1.0 / data.sqrt_w[i];
    standardized[i] = (data.y[i] - fitted[i]) / scale[i];
  }

  std::vector<double> t1s;
  t1s.reserve(static_cast<std::size_t>(n_resamples));
  int failures = 0;
  for (int b = 0; b < n_resamples; ++b) {
    Rng rng = make_rng(derive_seed(rng_seed, static_cast<std::uint64_t>(b)));
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    Trace resampled = trace;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& row = resampled.rows[static_cast<std::size_t>(i)];
      row.signal = std::clamp(fitted[i] + scale[i] * standardized[pick(rng)], -1.0, 1.0);
    }
    try {
      const FitResult refit = fit_exponential(resampled, center);
      if (refit.converged && !refit.at_bound) {
        t1s.push_back(refit.t1);
        continue;
      }
    } catch (const Error&) {
    }
    ++failures;
  }
  if (failures * 5 > n_resamples) {
    throw BootstrapUnstableError("more than 20% of bootstrap refits failed");
  }
  double mean = 0.0;
  for (double t : t1s) mean += t;
  mean /= static_cast<double>(t1s.size());
  double ss = 0.0;
  for (double t : t1s) ss += (t - mean) * (t - mean);
  return t1s.size() > 1 ? std::sqrt(ss / static_cast<double>(t1s.size() - 1)) : 0.0;
}

}  // namespace nvrelax
