#include "nvrelax/cli.hpp"

#include "nvrelax/assay_analysis.hpp"
#include "nvrelax/config.hpp"
#include "nvrelax/errors.hpp"
#include "nvrelax/fitting.hpp"
#include "nvrelax/io.hpp"
#include "nvrelax/plot.hpp"
#include "nvrelax/sequence_engine.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <ostream>

namespace nvrelax {

namespace fs = std::filesystem;

namespace {

nlohmann::json load_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p.replace_extension(suffix);
  return p;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed, std::optional<unsigned> threads,
                 std::ostream& out) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  const Trace trace = sweep(cfg.t1_protocol(), cfg.photophysics, cfg.budget(), cfg.detector,
                            cfg.seed, cfg.threads);
  write_file_atomic(out_path, trace_to_csv(trace));
  const fs::path sidecar = sibling(out_path, ".config.json");
  write_file_atomic(sidecar, dump_json(resolved_config_json(cfg)));
  out << "wrote " << trace.rows.size() << " rows to " << out_path << " (config echo "
      << sidecar.string() << ")\n";
  return kExitOk;
}

int cmd_fit(const std::string& in_path, const std::string& out_path, int bootstrap,
            std::uint64_t seed, int max_iter, std::ostream& out) {
  const std::string text = read_file(in_path);
  const Trace trace = trace_from_csv(text);
  FitOptions options;
  options.max_iter = max_iter;
  const FitResult fit = fit_exponential(trace, std::nullopt, options);
  nlohmann::json doc = fit_to_json(fit);
  doc["input_checksum"] = "fnv1a64:" + fnv1a64_hex(text);
  if (bootstrap > 0 && fit.converged) {
    doc["bootstrap_t1_err_ms"] = bootstrap_t1_err(trace, fit, bootstrap, seed);
    doc["bootstrap_resamples"] = bootstrap;
  }
  write_file_atomic(out_path, dump_json(doc));
  out << "t1 = " << format_double(fit.t1) << " ms +/- " << format_double(fit.t1_err)
      << " ms" << (fit.converged ? "" : " (NOT CONVERGED)")
      << (fit.at_bound ? " (t1 at bound)" : "") << "\n";
  return fit.converged ? kExitOk : kExitNonConvergence;
}

int cmd_calibrate(const std::string& in_path, const std::string& out_path, double k,
                  double sigma_floor, std::ostream& out) {
  const auto points = calibration_from_csv(read_file(in_path));
  const CalibrationModel model = fit_calibration_replicates(points, {k, sigma_floor});
  write_file_atomic(out_path, dump_json(model_to_json(model)));
  out << "slope = " << format_double(model.slope) << " ms/" << to_string(model.unit)
      << ", lod = " << format_double(model.lod) << ' ' << to_string(model.unit) << " (k = "
      << format_double(model.k_factor) << ")\n";
  if (model.slope_nonnegative) out << "warning: slope >= 0, T1 does not fall with amount\n";
  return kExitOk;
}

int cmd_quantify(const std::string& model_path, double t1, double t1_err, std::ostream& out) {
  if (!(t1 > 0.0)) throw ValidationError("--t1 must be > 0");
  const CalibrationModel model = model_from_json(load_json(model_path));
  const Quantification q = quantify(model, t1, t1_err);
  out << dump_json(quantification_to_json(q, model, t1, t1_err));
  return kExitOk;
}

int cmd_plot(const std::string& in_path, const std::string& fit_path,
             const std::string& out_path, std::ostream& out) {
  const Trace trace = trace_from_csv(read_file(in_path));
  std::optional<FitResult> fit;
  if (!fit_path.empty()) fit = fit_from_json(load_json(fit_path));
  const RenderedPlot plot = render_trace_plot(trace, fit);
  write_file_atomic(out_path, plot.svg);
  const fs::path data = sibling(out_path, ".series.csv");
  write_file_atomic(data, plot.series_csv);
  out << "wrote " << out_path << " and " << data.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"NV-center T1 relaxometry simulator and assay analysis"};
  app.require_subcommand(1);

  std::string config_path, in_path, out_path, fit_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<unsigned> threads;
  std::uint64_t seed = 1;
  int bootstrap = 0;
  int max_iter = FitOptions{}.max_iter;
  double k = 1.0, sigma_floor = 0.1, t1 = 0.0, t1_err = 0.0;

  auto* simulate = app.add_subcommand("simulate", "simulate a T1 sweep into traces.csv");
  simulate->add_option("--config", config_path, "experiment config JSON")->required();
  simulate->add_option("--out", out_path, "output traces.csv")->required();
  simulate->add_option("--seed", seed_override, "override the config seed");
  simulate->add_option("--threads", threads, "worker threads (output is identical)");

  auto* fit = app.add_subcommand("fit", "fit a single exponential to traces.csv");
  fit->add_option("--in", in_path, "input traces.csv")->required();
  fit->add_option("--out", out_path, "output fit.json")->required();
  fit->add_option("--bootstrap", bootstrap, "residual bootstrap resamples (0 = off)")
      ->check(CLI::NonNegativeNumber);
  fit->add_option("--seed", seed, "bootstrap seed");
  fit->add_option("--max-iter", max_iter, "iteration limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* calibrate = app.add_subcommand("calibrate", "fit a linear T1 calibration to calib.csv");
  calibrate->add_option("--in", in_path, "input calib.csv")->required();
  calibrate->add_option("--out", out_path, "output model.json")->required();
  calibrate->add_option("--k", k, "detection-limit multiplier")->capture_default_str();
  calibrate->add_option("--sigma-floor", sigma_floor, "minimum T1 error in ms")
      ->capture_default_str();

  auto* quant = app.add_subcommand("quantify", "inverse-predict an amount from a measured T1");
  quant->add_option("--in,--model", in_path, "model.json")->required();
  quant->add_option("--t1", t1, "measured T1 in ms")->required();
  quant->add_option("--t1-err", t1_err, "T1 uncertainty in ms")->capture_default_str();

  auto* plot = app.add_subcommand("plot", "render traces.csv (and a fit) as SVG");
  plot->add_option("--in", in_path, "input traces.csv")->required();
  plot->add_option("--fit", fit_path, "optional fit.json overlay");
  plot->add_option("--out", out_path, "output .svg")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*simulate) return cmd_simulate(config_path, out_path, seed_override, threads, out);
    if (*fit) return cmd_fit(in_path, out_path, bootstrap, seed, max_iter, out);
    if (*calibrate) return cmd_calibrate(in_path, out_path, k, sigma_floor, out);
    if (*quant) return cmd_quantify(in_path, t1, t1_err, out);
    if (*plot) return cmd_plot(in_path, fit_path, out_path, out);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace nvrelax
