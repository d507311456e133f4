#pragma once

#include "nvrelax/detector_model.hpp"
#include "nvrelax/noise_model.hpp"
#include "nvrelax/sequence_engine.hpp"
#include "nvrelax/spin_model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace nvrelax {

struct ProtocolConfig {
  double tau_min_s = 10e-6;
  double tau_max_s = 15e-3;
  int n_tau = 30;
  bool log_spacing = true;
  double init_laser_s = 5e-6;
  double readout_laser_s = 5e-6;
  double readout_offset_s = 0.0;
  double readout_length_s = 300e-9;
  double shots = 1e6;
  double pi_fidelity = 1.0;
};

// A full simulation experiment. Every key is optional except one of
// gamma_intrinsic (1/ms) or t1_intrinsic_ms.
struct ExperimentConfig {
  std::string preset = "default";
  PhotophysicsParams photophysics;  // preset with overrides applied
  std::optional<double> gamma_intrinsic;
  std::optional<double> t1_intrinsic_ms;
  SurfaceSample sample;
  ProtocolConfig protocol;
  DetectorParams detector;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  double intrinsic_rate_per_ms() const;
  RelaxationBudget budget() const;
  T1Protocol t1_protocol() const;
};

/// Parses and validates. ParseError messages start with the offending key
/// path, e.g. "protocol.shots: expected a number".
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved config with every default written out (threads excepted).
nlohmann::json resolved_config_json(const ExperimentConfig& config);

}  // namespace nvrelax
