#include "nvrelax/spin_model.hpp"

#include "nvrelax/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <string>

namespace nvrelax {

namespace {

void require_rate(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ParameterError(std::string(name) + " must be a finite rate >= 0");
  }
}

void require_fraction(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ParameterError(std::string(name) + " must lie in [0, 1]");
  }
}

// Moves population `from` -> `to` at `rate`, keeping the column sum at zero.
void add_transition(RateMatrix& m, int from, int to, double rate) {
  m(to, from) += rate;
  m(from, from) -= rate;
}

}  // namespace

void PhotophysicsParams::validate() const {
  require_rate(pump_rate, "pump_rate");
  require_rate(radiative_rate, "radiative_rate");
  require_rate(isc_rate_ms0, "isc_rate_ms0");
  require_rate(isc_rate_ms1, "isc_rate_ms1");
  require_rate(singlet_decay_rate, "singlet_decay_rate");
  require_fraction(singlet_branch_to_ms0, "singlet_branch_to_ms0");
  require_fraction(ground_eq_ms0, "ground_eq_ms0");
  if (!(isc_rate_ms1 > isc_rate_ms0)) {
    throw ParameterError("isc_rate_ms1 must exceed isc_rate_ms0");
  }
}

bool has_photophysics_preset(std::string_view name) {
  return name == "default" || name == "three_sublevel";
}

PhotophysicsParams photophysics_preset(std::string_view name) {
  PhotophysicsParams p;
  if (name == "default") return p;
  if (name == "three_sublevel") {
    p.ground_eq_ms0 = 1.0 / 3.0;
    return p;
  }
  throw ParameterError("unknown photophysics preset '" + std::string(name) + "'");
}

PopulationState::PopulationState(const PopulationVector& p) : p_(p) {
  for (int i = 0; i < kNumLevels; ++i) {
    if (!(p_[i] >= 0.0 && p_[i] <= 1.0)) {
      throw ParameterError("population entries must lie in [0, 1]");
    }
  }
  if (std::abs(p_.sum() - 1.0) > 1e-12) {
    throw ParameterError("populations must sum to 1");
  }
}

PopulationState::PopulationState(std::initializer_list<double> p) {
  if (p.size() != kNumLevels) {
    throw ParameterError("population state needs exactly 5 entries");
  }
  PopulationVector v;
  std::copy(p.begin(), p.end(), v.data());
  *this = PopulationState(v);
}

double PopulationState::ground_polarization() const {
  const double total = ground_total();
  if (total <= 0.0) throw DegeneracyError("ground manifold is empty");
  return p_[kG0] / total;
}

RateMatrix build_rate_matrix(const PhotophysicsParams& params, bool laser_on,
                             double gamma1) {
  params.validate();
  require_rate(gamma1, "gamma1");

  RateMatrix m = RateMatrix::Zero();
  if (laser_on) {
    add_transition(m, kG0, kE0, params.pump_rate);
    add_transition(m, kG1, kE1, params.pump_rate);
  }
  add_transition(m, kE0, kG0, params.radiative_rate);
  add_transition(m, kE1, kG1, params.radiative_rate);
  add_transition(m, kE0, kSinglet, params.isc_rate_ms0);
  add_transition(m, kE1, kSinglet, params.isc_rate_ms1);
  add_transition(m, kSinglet, kG0,
                 params.singlet_decay_rate * params.singlet_branch_to_ms0);
  add_transition(m, kSinglet, kG1,
                 params.singlet_decay_rate * (1.0 - params.singlet_branch_to_ms0));

  // Ground mixing -gamma1 (p_g - pi_eq (p_g0 + p_g1)) written as two
  // transitions so every population difference decays at exactly gamma1.
  const double eq0 = params.ground_eq_ms0;
  add_transition(m, kG0, kG1, gamma1 * (1.0 - eq0));
  add_transition(m, kG1, kG0, gamma1 * eq0);
  return m;
}

PopulationState propagate(const PopulationState& state, const RateMatrix& m,
                          double duration) {
  if (!(duration >= 0.0)) throw ParameterError("duration must be >= 0");
  if (duration == 0.0) return state;
  if (duration * m.cwiseAbs().maxCoeff() > kMaxPropagationNorm) {
    throw NumericOverflowError("duration * max rate exceeds propagation cap");
  }
  const RateMatrix step = (m * duration).exp();
  PopulationVector p = step * state.vector();
  for (int i = 0; i < kNumLevels; ++i) {
    if (p[i] < -1e-10) {
      throw NumericOverflowError("matrix exponential produced negative population");
    }
    p[i] = std::clamp(p[i], 0.0, 1.0);
  }
  return PopulationState(p / p.sum());
}

PopulationVector integrate_populations(const PopulationState& state,
                                       const RateMatrix& m, double duration) {
  if (!(duration >= 0.0)) throw ParameterError("duration must be >= 0");
  if (duration == 0.0) return PopulationVector::Zero();
  if (duration * m.cwiseAbs().maxCoeff() > kMaxPropagationNorm) {
    throw NumericOverflowError("duration * max rate exceeds propagation cap");
  }
  Eigen::Matrix<double, kNumLevels + 1, kNumLevels + 1> aug;
  aug.setZero();
  aug.topLeftCorner<kNumLevels, kNumLevels>() = m * duration;
  aug.topRightCorner<kNumLevels, 1>() = state.vector() * duration;
  const auto expd = aug.exp().eval();
  return expd.topRightCorner<kNumLevels, 1>();
}

PopulationState apply_pi_pulse(const PopulationState& state, double fidelity) {
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) {
    throw ParameterError("pi pulse fidelity must lie in [0, 1]");
  }
  PopulationVector p = state.vector();
  const double g0 = p[kG0];
  const double g1 = p[kG1];
  p[kG0] = (1.0 - fidelity) * g0 + fidelity * g1;
  p[kG1] = (1.0 - fidelity) * g1 + fidelity * g0;
  return PopulationState(p);
}

PopulationState steady_state(const RateMatrix& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) throw DegeneracyError("zero generator has no unique steady state");

  const RateMatrix normalized = m / scale;
  Eigen::JacobiSVD<RateMatrix> svd(normalized);
  const auto& sv = svd.singularValues();  // descending
  if (sv[kNumLevels - 2] < 1e-13 * sv[0]) {
    throw DegeneracyError("generator kernel is not one-dimensional");
  }

  // Replace one balance equation by the normalization constraint sum(p) = 1.
  RateMatrix system = normalized;
  system.row(kNumLevels - 1).setOnes();
  PopulationVector rhs = PopulationVector::Zero();
  rhs[kNumLevels - 1] = 1.0;
  const Eigen::FullPivLU<RateMatrix> lu(system);
  PopulationVector p = lu.solve(rhs);
  p += lu.solve(rhs - system * p);  // one refinement sweep

  for (int i = 0; i < kNumLevels; ++i) {
    if (p[i] < -1e-10) {
      throw DegeneracyError("steady state has negative entries");
    }
    p[i] = std::max(p[i], 0.0);
  }
  return PopulationState(p / p.sum());
}

double fluorescence_rate(const PopulationState& state,
                         const PhotophysicsParams& params) {
  return params.radiative_rate * (state[kE0] + state[kE1]);
}

}  // namespace nvrelax
