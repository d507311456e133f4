#include "nvrelax/errors.hpp"
#include "nvrelax/fitting.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace nvrelax;
using namespace nvrelax::testing;

TEST_CASE("analytic gradient matches central differences") {
  Rng rng = make_rng(101);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const ExpParams p{0.2 * u(rng), 0.02 * u(rng), log_uniform(rng, 0.3, 10.0)};
    const double tau = log_uniform(rng, 0.01, 15.0);
    const Eigen::Vector3d g = exp_gradient(tau, p);
    const double h[3] = {1e-6, 1e-6, 1e-6 * p.t1_ms};
    for (int k = 0; k < 3; ++k) {
      ExpParams hi = p, lo = p;
      (k == 0 ? hi.amplitude : k == 1 ? hi.offset : hi.t1_ms) += h[k];
      (k == 0 ? lo.amplitude : k == 1 ? lo.offset : lo.t1_ms) -= h[k];
      const double fd = (exp_model(tau, hi) - exp_model(tau, lo)) / (2 * h[k]);
      const double scale = std::max(std::abs(g[k]), 1e-6);
      CHECK(std::abs(fd - g[k]) / scale < 1e-6);
    }
  }
}

TEST_CASE("initial guess") {
  const Trace t = synthetic_trace(0.1, 0.0, 2.856, 0.0, 1);
  CHECK(rel_diff(initial_guess(t).t1_ms, 2.856) < 0.05);

  Trace flat = synthetic_trace(0.0, 0.05, 2.856, 0.0, 1);
  CHECK_THROWS_AS(initial_guess(flat), InsufficientDataError);

  Trace short_span = synthetic_trace(0.1, 0.0, 2.856, 0.0, 1, 10, 1e-3, 5e-3);
  CHECK_THROWS_AS(initial_guess(short_span), InsufficientDataError);

  Trace few = synthetic_trace(0.1, 0.0, 2.856, 0.0, 1, 3);
  CHECK_THROWS_AS(initial_guess(few), InsufficientDataError);

  const Trace noisy = synthetic_trace(0.1, 0.003, 2.856, 0.002, 5);
  Trace scaled = noisy;
  for (auto& r : scaled.rows) {
    r.signal *= 2.5;
    r.signal_err *= 2.5;
  }
  const ExpParams a = initial_guess(noisy), b = initial_guess(scaled);
  CHECK(b.t1_ms == doctest::Approx(a.t1_ms).epsilon(1e-12));
  CHECK(b.amplitude == doctest::Approx(2.5 * a.amplitude).epsilon(1e-12));
  CHECK(b.offset == doctest::Approx(2.5 * a.offset).epsilon(1e-12));
}

TEST_CASE("noiseless closed-loop recovery") {
  for (double t1 : {2.856, 0.77}) {
    const FitResult f = fit_exponential(synthetic_trace(0.1, 0.0, t1, 0.0, 1));
    CHECK(f.converged);
    CHECK_FALSE(f.at_bound);
    CHECK(rel_diff(f.t1, t1) < 1e-3);
    CHECK(f.amplitude == doctest::Approx(0.1).epsilon(1e-6));
  }
  Trace doubled = synthetic_trace(0.1, 0.0, 2.856, 0.0, 1);
  for (auto& r : doubled.rows) r.signal *= 2.0;
  const FitResult f = fit_exponential(doubled);
  CHECK(rel_diff(f.t1, 2.856) < 1e-6);
  CHECK(f.amplitude == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("fit result invariants") {
  const FitResult f = fit_exponential(synthetic_trace(0.12, 0.004, 1.7, 0.003, 8));
  CHECK(f.t1 > 0.0);
  CHECK(f.t1_err >= 0.0);
  CHECK(f.weighted);
  CHECK((f.covariance - f.covariance.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(f.covariance);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-15 * eig.eigenvalues().maxCoeff());
  CHECK(f.t1_err == doctest::Approx(std::sqrt(f.covariance(2, 2))));
}

TEST_CASE("unweighted fit when errors are missing") {
  Trace t = synthetic_trace(0.1, 0.0, 2.0, 0.002, 3);
  for (auto& r : t.rows) r.signal_err = 0.0;
  const FitResult f = fit_exponential(t);
  CHECK_FALSE(f.weighted);
  CHECK(rel_diff(f.t1, 2.0) < 0.1);
}

TEST_CASE("iteration limit and bounds are surfaced") {
  const Trace t = synthetic_trace(0.1, 0.0, 2.856, 0.002, 4);
  FitOptions opts;
  opts.max_iter = 1;
  const FitResult f = fit_exponential(t, ExpParams{0.05, 0.0, 20.0}, opts);
  CHECK_FALSE(f.converged);
  CHECK(f.iterations == 1);

  FitOptions tight;
  tight.t1_max_ms = 1.0;
  const FitResult b = fit_exponential(t, std::nullopt, tight);
  CHECK(b.at_bound);
  CHECK(b.t1 == 1.0);
}

TEST_CASE("oracle agrees with the damped fitter") {
  Rng rng = make_rng(2024);
  std::uniform_real_distribution<double> amp(0.02, 0.2), off(-0.02, 0.02);
  for (int i = 0; i < 20; ++i) {
    const double t1 = log_uniform(rng, 0.3, 10.0);
    const Trace t = synthetic_trace(amp(rng), off(rng), t1, 0.002, 500 + static_cast<std::uint64_t>(i));
    const FitResult lm = fit_exponential(t);
    const OracleResult oracle = oracle_fit(t);
    REQUIRE(lm.converged);
    CHECK(std::abs(lm.t1 - oracle.params.t1_ms) <= oracle.params.t1_ms * (oracle.grid_ratio - 1.0));
    CHECK(oracle.cost >= lm.cost - 1e-12);
  }
  const Trace clean = synthetic_trace(0.1, 0.0, 2.856, 0.0, 1);
  const OracleResult o = oracle_fit(clean, {.points = 400});
  CHECK(std::abs(o.params.t1_ms - 2.856) <= 2.856 * (o.grid_ratio - 1.0));
}

TEST_CASE("oracle with a single grid point at truth is exact") {
  const Trace t = synthetic_trace(0.137, -0.004, 1.3, 0.0, 1);
  OracleGridSpec grid;
  grid.explicit_t1_ms = {1.3};
  const OracleResult o = oracle_fit(t, grid);
  CHECK(o.params.amplitude == doctest::Approx(0.137).epsilon(1e-12));
  CHECK(o.params.offset == doctest::Approx(-0.004).epsilon(1e-10));
  CHECK(o.cost < 1e-25);
}

TEST_CASE("tau rescaling scales t1") {
  const Trace t = synthetic_trace(0.1, 0.002, 2.2, 0.002, 31);
  const FitResult base = fit_exponential(t);
  for (double s : {0.1, 7.3, 1000.0}) {
    Trace scaled = t;
    for (auto& r : scaled.rows) r.tau_s *= s;
    const FitResult f = fit_exponential(scaled);
    CHECK(rel_diff(f.t1, s * base.t1) < 1e-7);
  }
}

TEST_CASE("estimator calibration over Monte Carlo traces") {
  const double truth = 3.02;
  const int n = 200;
  double sum = 0.0, sum2 = 0.0, err = 0.0;
  for (int i = 0; i < n; ++i) {
    const FitResult f = fit_exponential(synthetic_trace(0.15, 0.0, truth, 0.004, 9000 + static_cast<std::uint64_t>(i)));
    REQUIRE(f.converged);
    sum += f.t1;
    sum2 += f.t1 * f.t1;
    err += f.t1_err / n;
  }
  const double mean = sum / n;
  const double sd = std::sqrt((sum2 - n * mean * mean) / (n - 1));
  CHECK(rel_diff(mean, truth) < 0.02);
  CHECK(sd / err > 0.5);
  CHECK(sd / err < 2.0);
}

TEST_CASE("bootstrap") {
  SUBCASE("noiseless trace has no spread") {
    const Trace t = synthetic_trace(0.1, 0.0, 2.856, 0.0, 1);
    const FitResult f = fit_exponential(t);
    CHECK(bootstrap_t1_err(t, f, 50, 1) < 1e-6);
  }
  SUBCASE("noisy trace tuned to ~0.1 ms parametric error") {
    // sigma chosen so the parametric t1_err lands near 0.1 ms
    const Trace t = synthetic_trace(0.3, 0.0, 3.02, 0.0055, 77);
    const FitResult f = fit_exponential(t);
    CHECK(f.t1_err > 0.07);
    CHECK(f.t1_err < 0.14);
    const double b200 = bootstrap_t1_err(t, f, 200, 5);
    CHECK(b200 > 0.05);
    CHECK(b200 < 0.2);
    const double b400 = bootstrap_t1_err(t, f, 400, 5);
    CHECK(rel_diff(b400, b200) < 0.2);
    CHECK(bootstrap_t1_err(t, f, 200, 5) == b200);
  }
  SUBCASE("refuses unconverged fits") {
    const Trace t = synthetic_trace(0.1, 0.0, 2.856, 0.002, 1);
    FitResult f = fit_exponential(t);
    f.converged = false;
    CHECK_THROWS_AS(bootstrap_t1_err(t, f, 10, 1), ParameterError);
  }
  SUBCASE("pure noise is unstable") {
    const Trace t = synthetic_trace(0.004, 0.0, 2.0, 0.02, 3);
    FitResult f;
    f.converged = true;
    f.amplitude = 0.004;
    f.t1 = 2.0;
    CHECK_THROWS_AS(bootstrap_t1_err(t, f, 100, 1), BootstrapUnstableError);
  }
}
