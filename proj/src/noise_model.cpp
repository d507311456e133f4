#include "nvrelax/noise_model.hpp"

#include "nvrelax/errors.hpp"

#include <cmath>

namespace nvrelax {

std::string_view to_string(AmountUnit unit) {
  return unit == AmountUnit::kFmol ? "fmol" : "pmol";
}

AmountUnit parse_amount_unit(std::string_view text) {
  if (text == "fmol") return AmountUnit::kFmol;
  if (text == "pmol") return AmountUnit::kPmol;
  throw ParseError("unknown amount unit '" + std::string(text) +
                   "' (expected fmol or pmol)");
}

void SurfaceSample::validate() const {
  if (!(amount >= 0.0)) throw ParameterError("sample amount must be >= 0");
  if (!(coupling_per_unit > 0.0)) throw ParameterError("coupling_per_unit must be > 0");
  if (!(geometry_factor >= 0.0)) throw ParameterError("geometry_factor must be >= 0");
}

void RelaxationBudget::validate() const {
  if (!(gamma_intrinsic >= 0.0) || !(gamma_gd >= 0.0)) {
    throw ParameterError("relaxation rates must be >= 0");
  }
}

double gd_relaxation_rate(const SurfaceSample& sample) {
  sample.validate();
  return sample.coupling_per_unit * sample.geometry_factor * sample.amount;
}

double effective_t1(double t1_intrinsic_ms, double gamma_gd_per_ms) {
  if (!(t1_intrinsic_ms > 0.0)) throw ParameterError("intrinsic T1 must be > 0");
  if (!(gamma_gd_per_ms >= 0.0)) throw ParameterError("gamma_gd must be >= 0");
  return 1.0 / (1.0 / t1_intrinsic_ms + gamma_gd_per_ms);
}

double amount_from_t1(double t1_measured_ms, double t1_baseline_ms,
                      const SurfaceSample& sample_template) {
  if (!(t1_measured_ms > 0.0) || !(t1_baseline_ms > 0.0)) {
    throw ParameterError("T1 values must be > 0");
  }
  const double coupling =
      sample_template.coupling_per_unit * sample_template.geometry_factor;
  if (!(coupling > 0.0)) {
    throw ParameterError("coupling * geometry_factor must be > 0 to invert");
  }
  if (t1_measured_ms > t1_baseline_ms * (1.0 + kBaselineSlack)) {
    throw InconsistencyError("measured T1 exceeds baseline beyond slack; check fit or baseline");
  }
  if (t1_measured_ms >= t1_baseline_ms) return 0.0;
  return (1.0 / t1_measured_ms - 1.0 / t1_baseline_ms) / coupling;
}

}  // namespace nvrelax
