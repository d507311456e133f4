#pragma once

#include <string>
#include <string_view>

namespace nvrelax {

enum class AmountUnit { kFmol, kPmol };

std::string_view to_string(AmountUnit unit);
/// Parses "fmol" / "pmol"; throws ParseError otherwise.
AmountUnit parse_amount_unit(std::string_view text);

// Surface-bound Gd3+ label load. coupling_per_unit is in 1/(ms * unit),
// where unit is the sample's own tag; amounts are never converted.
struct SurfaceSample {
  double amount = 0.0;
  AmountUnit unit = AmountUnit::kFmol;
  double coupling_per_unit = 0.012905;
  double geometry_factor = 1.0;

  void validate() const;
};

// Longitudinal relaxation rates in 1/ms.
struct RelaxationBudget {
  double gamma_intrinsic = 0.0;
  double gamma_gd = 0.0;

  void validate() const;
  double total() const { return gamma_intrinsic + gamma_gd; }
};

/// Added rate (1/ms) from bound Gd3+: coupling * geometry_factor * amount.
double gd_relaxation_rate(const SurfaceSample& sample);

/// 1 / (1/t1_intrinsic + gamma_gd), ms.
double effective_t1(double t1_intrinsic_ms, double gamma_gd_per_ms);

/// Relative slack allowed for a measured T1 above baseline before the pair
/// is considered inconsistent.
inline constexpr double kBaselineSlack = 0.05;

/// Inverts the rate model: (1/t1_measured - 1/t1_baseline) / (coupling *
/// geometry_factor), clamped at 0. Throws InconsistencyError when
/// t1_measured exceeds the baseline by more than kBaselineSlack.
double amount_from_t1(double t1_measured_ms, double t1_baseline_ms,
                      const SurfaceSample& sample_template);

}  // namespace nvrelax
