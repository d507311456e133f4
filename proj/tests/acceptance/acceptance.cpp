// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include "nvrelax/assay_analysis.hpp"
#include "nvrelax/cli.hpp"
#include "nvrelax/config.hpp"
#include "nvrelax/detector_model.hpp"
#include "nvrelax/fitting.hpp"
#include "nvrelax/io.hpp"
#include "nvrelax/noise_model.hpp"
#include "nvrelax/sequence_engine.hpp"
#include "nvrelax/spin_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace nvrelax;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  failures += !o.pass;
  std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

T1Protocol default_protocol() {
  return parse_config(nlohmann::json{{"t1_intrinsic_ms", 1.0}}).t1_protocol();
}

DetectorParams noiseless() {
  DetectorParams d;
  d.noiseless = true;
  return d;
}

double fitted_t1(const RelaxationBudget& budget, const DetectorParams& det, std::uint64_t seed,
                 const T1Protocol& protocol = default_protocol()) {
  const Trace t = sweep(protocol, photophysics_preset("default"), budget, det, seed);
  return fit_exponential(t).t1;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nvrelax");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

// simulate -> fit for several amounts, then calibrate; returns every byte written.
std::string run_pipeline(const fs::path& dir, int threads) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::vector<double> amounts{0.0, 20.0, 40.0, 60.0, 80.0};
  std::vector<CalibrationPoint> points;
  std::string all;
  for (std::size_t i = 0; i < amounts.size(); ++i) {
    const std::string stem = (dir / ("s" + std::to_string(i))).string();
    nlohmann::json cfg{{"t1_intrinsic_ms", 2.856},
                       {"sample", {{"amount", amounts[i]}, {"unit", "fmol"}}},
                       {"protocol", {{"shots", 1e5}}},
                       {"seed", 100 + i}};
    write_file_atomic(stem + ".json", dump_json(cfg));
    if (cli({"simulate", "--config", stem + ".json", "--out", stem + ".csv", "--threads",
             std::to_string(threads)}) != kExitOk)
      throw std::runtime_error("simulate failed");
    if (cli({"fit", "--in", stem + ".csv", "--out", stem + ".fit.json", "--bootstrap", "50"}) != kExitOk)
      throw std::runtime_error("fit failed");
    const FitResult f = fit_from_json(nlohmann::json::parse(read_file(stem + ".fit.json")));
    points.push_back({amounts[i], AmountUnit::kFmol, f.t1, f.t1_err, "s" + std::to_string(i)});
    all += read_file(stem + ".csv") + read_file(stem + ".config.json") + read_file(stem + ".fit.json");
  }
  write_file_atomic(dir / "calib.csv", calibration_to_csv(points));
  if (cli({"calibrate", "--in", (dir / "calib.csv").string(), "--out", (dir / "model.json").string()}) !=
      kExitOk)
    throw std::runtime_error("calibrate failed");
  return all + read_file(dir / "calib.csv") + read_file(dir / "model.json");
}

}  // namespace

int main() {
  report(1, "noiseless fit recovery (2.856 ms, 0.1%, < 1 s)", [] {
    const auto t0 = Clock::now();
    const double t1 = fitted_t1({1.0 / 2.856, 0.0}, noiseless(), 1);
    const double dt = seconds_since(t0);
    const double rel = std::abs(t1 - 2.856) / 2.856;
    return Outcome{rel <= 1e-3 && dt < 1.0, fmt("t1 = %.9g ms, rel err %.2e, %.3f s", t1, rel, dt)};
  });

  report(2, "Gd channel (73.5 fmol -> 0.770 ms, 1%)", [] {
    SurfaceSample s;
    s.amount = 73.5;
    s.unit = AmountUnit::kFmol;
    s.coupling_per_unit = 0.012905;
    const double t1 = fitted_t1({1.0 / 2.856, gd_relaxation_rate(s)}, noiseless(), 2);
    const double rel = std::abs(t1 - 0.770) / 0.770;
    return Outcome{rel <= 0.01, fmt("gamma_gd = %.5f /ms, t1 = %.6f ms, rel err %.2e", gd_relaxation_rate(s), t1, rel)};
  });

  report(3, "rate additivity (25 pairs, 1%)", [] {
    Rng rng = make_rng(303);
    std::uniform_real_distribution<double> g_int(0.1, 1.0), g_gd(0.0, 2.0);
    double worst = 0.0;
    for (int i = 0; i < 25; ++i) {
      const RelaxationBudget b{g_int(rng), g_gd(rng)};
      const double t1 = fitted_t1(b, noiseless(), 3);
      worst = std::max(worst, std::abs(1.0 / t1 - b.total()) / b.total());
    }
    return Outcome{worst <= 0.01, fmt("worst rel err %.2e", worst)};
  });

  report(4, "noisy estimator (100 sweeps at 3.02 ms, mean 2%, scatter x2, < 60 s)", [] {
    const auto t0 = Clock::now();
    T1Protocol protocol = default_protocol();
    protocol.shots_per_point = 2e6;
    const auto phys = photophysics_preset("default");
    const RelaxationBudget budget{1.0 / 3.02, 0.0};
    const Trace clean = sweep(protocol, phys, budget, noiseless(), 0);
    double min_counts = 1e300;
    for (const auto& r : clean.rows) min_counts = std::min({min_counts, r.sig1, r.sig2});
    const int n = 100;
    std::vector<double> t1s;
    double err_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const FitResult f = fit_exponential(sweep(protocol, phys, budget, DetectorParams{}, 4000 + i));
      t1s.push_back(f.t1);
      err_sum += f.t1_err;
    }
    double mean = 0.0;
    for (double v : t1s) mean += v / n;
    double var = 0.0;
    for (double v : t1s) var += (v - mean) * (v - mean) / (n - 1);
    const double sd = std::sqrt(var), mean_err = err_sum / n;
    const double rel = std::abs(mean - 3.02) / 3.02, ratio = sd / mean_err;
    const double dt = seconds_since(t0);
    const bool ok = min_counts >= 1e5 && rel <= 0.02 && ratio >= 0.5 && ratio <= 2.0 && dt < 60.0;
    return Outcome{ok, fmt("min expected counts %.3g, mean %.5f ms (rel %.2e), scatter %.4f vs reported %.4f "
                           "(ratio %.3f), %.2f s",
                           min_counts, mean, rel, sd, mean_err, ratio, dt)};
  });

  report(5, "LOD reproduction (500 seeds, slope +-0.005, LOD 2.0 +-10%, >= 95%)", [] {
    int ok = 0, slope_ok = 0, lod_ok = 0;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
      Rng rng = make_rng(derive_seed(505, seed, 0));
      std::normal_distribution<double> noise(0.0, 0.1);
      std::vector<CalibrationPoint> pts;
      for (double a : {0.0, 10.0, 20.0, 30.0, 40.0, 50.0})
        for (int r = 0; r < 5; ++r) pts.push_back({a, AmountUnit::kPmol, 3.0 - 0.05 * a + noise(rng), {}, ""});
      const CalibrationModel m = fit_calibration_replicates(pts);
      const double lod = detection_limit(m, 0.1, 1.0);
      const bool s = std::abs(m.slope + 0.05) <= 0.005, l = std::abs(lod - 2.0) <= 0.2;
      slope_ok += s;
      lod_ok += l;
      ok += s && l;
    }
    return Outcome{ok >= 475, fmt("%d/500 seeds pass both (slope %d, lod %d)", ok, slope_ok, lod_ok)};
  });

  report(6, "polarization band [0.94, 0.98]", [] {
    const auto p = steady_state(build_rate_matrix(photophysics_preset("default"), true, 0.0)).ground_polarization();
    return Outcome{p >= 0.94 && p <= 0.98, fmt("ground polarization into ms=0 = %.5f", p)};
  });

  report(7, "oracle equivalence (20 instances, one grid step)", [] {
    Rng rng = make_rng(707);
    T1Protocol protocol = default_protocol();
    protocol.shots_per_point = 1e5;
    int ok = 0;
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double t1 = std::exp(std::uniform_real_distribution<double>(std::log(0.5), std::log(6.0))(rng));
      const Trace t = sweep(protocol, photophysics_preset("default"), {1.0 / t1, 0.0}, DetectorParams{}, 7000 + i);
      const FitResult lm = fit_exponential(t);
      const OracleResult o = oracle_fit(t);
      const double steps = std::abs(std::log(lm.t1 / o.params.t1_ms)) / std::log(o.grid_ratio);
      worst = std::max(worst, steps);
      ok += lm.converged && steps <= 1.0;
    }
    return Outcome{ok == 20, fmt("%d/20 agree, worst %.3f grid steps", ok, worst)};
  });

  report(8, "BSA blocking ratio 0.0594 (3 s.f.)", [] {
    SurfaceSample s;
    s.unit = AmountUnit::kFmol;
    s.coupling_per_unit = 0.012905;
    const double with_bsa = amount_from_t1(2.51, 2.856, s), without = amount_from_t1(0.86, 2.856, s);
    const double ratio = with_bsa / without;
    char sig[32];
    std::snprintf(sig, sizeof sig, "%.3g", ratio);
    return Outcome{std::string(sig) == "0.0594",
                   fmt("%.4f fmol / %.4f fmol = %.6f (%s)", with_bsa, without, ratio, sig)};
  });

  report(9, "pipeline determinism (runs and thread counts)", [] {
    const fs::path root = fs::temp_directory_path() / "nvrelax_acceptance";
    const std::string a = run_pipeline(root / "a", 1);
    const std::string b = run_pipeline(root / "b", 1);
    const std::string c = run_pipeline(root / "c", 4);
    fs::remove_all(root);
    const bool ok = a == b && a == c;
    return Outcome{ok, fmt("%zu bytes, checksum %s, repeat %s, threads %s", a.size(), fnv1a64_hex(a).c_str(),
                           a == b ? "identical" : "DIFFERS", a == c ? "identical" : "DIFFERS")};
  });

  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
