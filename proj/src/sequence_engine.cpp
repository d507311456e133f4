#include "nvrelax/sequence_engine.hpp"

#include "nvrelax/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace nvrelax {

std::string_view to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::kLaser: return "Laser";
    case SegmentKind::kMwPi: return "MwPi";
    case SegmentKind::kWait: return "Wait";
    case SegmentKind::kReadout: return "Readout";
  }
  return "?";
}

PulseSequence& PulseSequence::laser(double duration) {
  segments_.push_back({SegmentKind::kLaser, cursor_, duration, 1.0});
  last_block_start_ = cursor_;
  cursor_ += duration;
  return *this;
}

PulseSequence& PulseSequence::wait(double duration) {
  segments_.push_back({SegmentKind::kWait, cursor_, duration, 1.0});
  last_block_start_ = cursor_;
  cursor_ += duration;
  return *this;
}

PulseSequence& PulseSequence::pi_pulse(double fidelity) {
  segments_.push_back({SegmentKind::kMwPi, cursor_, 0.0, fidelity});
  return *this;
}

PulseSequence& PulseSequence::readout(double offset, double length) {
  segments_.push_back({SegmentKind::kReadout, last_block_start_ + offset, length, 1.0});
  return *this;
}

int PulseSequence::count(SegmentKind kind) const {
  return static_cast<int>(std::count_if(segments_.begin(), segments_.end(),
                                        [kind](const PulseSegment& s) { return s.kind == kind; }));
}

namespace {

bool is_block(const PulseSegment& s) {
  return s.kind == SegmentKind::kLaser || s.kind == SegmentKind::kWait;
}

constexpr double kTimeTol = 1e-15;

}  // namespace

std::vector<Violation> validate(const PulseSequence& seq) {
  std::vector<Violation> out;
  const auto& segs = seq.segments();

  std::vector<bool> bad_duration(segs.size(), false);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& s = segs[i];
    if (!(s.duration >= 0.0)) {
      out.push_back({i, std::string(to_string(s.kind)) + " has negative duration"});
      bad_duration[i] = true;
    } else if (s.kind == SegmentKind::kMwPi && s.duration != 0.0) {
      out.push_back({i, "MwPi must have zero duration"});
      bad_duration[i] = true;
    }
    if (s.kind == SegmentKind::kMwPi && !(s.fidelity >= 0.0 && s.fidelity <= 1.0)) {
      out.push_back({i, "MwPi fidelity outside [0, 1]"});
    }
  }

  // Blocks must follow one another without overlap.
  std::size_t prev = segs.size();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (!is_block(segs[i])) continue;
    if (prev != segs.size() && !bad_duration[prev] && !bad_duration[i]) {
      const double prev_end = segs[prev].start + segs[prev].duration;
      if (segs[i].start + kTimeTol < prev_end) {
        out.push_back({i, "block starts before the previous block ends"});
      }
    }
    prev = i;
  }

  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& s = segs[i];
    if (s.kind == SegmentKind::kReadout) {
      if (bad_duration[i]) continue;
      const double lo = s.start;
      const double hi = s.start + s.duration;
      const bool inside = std::any_of(segs.begin(), segs.end(), [&](const PulseSegment& b) {
        return b.kind == SegmentKind::kLaser && b.duration >= 0.0 &&
               lo + kTimeTol >= b.start && hi <= b.start + b.duration + kTimeTol;
      });
      if (!inside) out.push_back({i, "Readout window is not contained in a Laser block"});
    } else if (s.kind == SegmentKind::kMwPi) {
      const bool in_laser = std::any_of(segs.begin(), segs.end(), [&](const PulseSegment& b) {
        return b.kind == SegmentKind::kLaser && s.start > b.start + kTimeTol &&
               s.start + kTimeTol < b.start + b.duration;
      });
      if (in_laser) out.push_back({i, "MwPi falls inside a Laser block"});
    }
  }
  return out;
}

void T1Protocol::validate() const {
  if (tau_grid.empty()) throw ValidationError("protocol tau grid is empty");
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    if (!(tau_grid[i] > 0.0)) throw ValidationError("tau grid values must be > 0");
    if (i > 0 && !(tau_grid[i] > tau_grid[i - 1])) {
      throw ValidationError("tau grid must be strictly increasing");
    }
  }
  if (!(shots_per_point >= 1.0)) throw ValidationError("shots_per_point must be >= 1");
  if (!(pi_fidelity >= 0.0 && pi_fidelity <= 1.0)) {
    throw ValidationError("pi_fidelity must lie in [0, 1]");
  }
  if (!(init_laser_duration > 0.0) || !(readout_laser_duration > 0.0)) {
    throw ValidationError("laser durations must be > 0");
  }
  if (!(readout_offset >= 0.0) || !(readout_length > 0.0) ||
      readout_offset + readout_length > readout_laser_duration * (1.0 + 1e-12)) {
    throw ValidationError("readout window must fit inside the readout laser pulse");
  }
}

std::vector<double> make_tau_grid(double tau_min, double tau_max, int n,
                                  bool log_spacing) {
  if (!(tau_min > 0.0) || !(tau_max > tau_min) || n < 2) {
    throw ValidationError("tau grid needs 0 < tau_min < tau_max and n >= 2");
  }
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / (n - 1);
    grid[static_cast<std::size_t>(i)] =
        log_spacing ? tau_min * std::pow(tau_max / tau_min, u)
                    : tau_min + (tau_max - tau_min) * u;
  }
  grid.front() = tau_min;
  grid.back() = tau_max;
  return grid;
}

T1SequencePair build_t1_pair(const T1Protocol& protocol, double tau) {
  T1SequencePair pair;
  pair.reference.laser(protocol.init_laser_duration)
      .wait(tau)
      .laser(protocol.readout_laser_duration)
      .readout(protocol.readout_offset, protocol.readout_length);
  pair.flipped.laser(protocol.init_laser_duration)
      .pi_pulse(protocol.pi_fidelity)
      .wait(tau)
      .laser(protocol.readout_laser_duration)
      .readout(protocol.readout_offset, protocol.readout_length);
  return pair;
}

namespace {

// Laser-on steady state relaxed through excited and singlet decay with the
// laser off. Leaves essentially only ground population.
PopulationState initialized_state(const PhotophysicsParams& phys, const RateMatrix& on,
                                  const RateMatrix& off) {
  if (!(phys.singlet_decay_rate > 0.0) || !(phys.radiative_rate + phys.isc_rate_ms0 > 0.0)) {
    throw ParameterError("singlet and excited levels must decay for initialization");
  }
  const double slowest = std::min({phys.singlet_decay_rate,
                                   phys.radiative_rate + phys.isc_rate_ms0,
                                   phys.radiative_rate + phys.isc_rate_ms1});
  return propagate(steady_state(on), off, 60.0 / slowest);
}

double readout_photons(const PopulationState& block_start, const RateMatrix& m,
                       const PulseSegment& block, const PulseSegment& window,
                       const PhotophysicsParams& phys) {
  const PopulationState at_open = propagate(block_start, m, window.start - block.start);
  const PopulationVector integral = integrate_populations(at_open, m, window.duration);
  return phys.radiative_rate * (integral[kE0] + integral[kE1]);
}

}  // namespace

std::vector<double> execute(const PulseSequence& seq, const PhotophysicsParams& phys,
                            double gamma1_per_ms, const DetectorParams& detector,
                            double shots, std::uint64_t rng_seed) {
  const auto violations = validate(seq);
  if (!violations.empty()) {
    throw ValidationError("invalid pulse sequence: " + violations.front().message);
  }
  detector.validate();
  const double gamma1 = gamma1_per_ms * 1e3;
  const RateMatrix on = build_rate_matrix(phys, true, gamma1);
  const RateMatrix off = build_rate_matrix(phys, false, gamma1);

  const auto& segs = seq.segments();
  std::vector<std::size_t> order(segs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return segs[a].start < segs[b].start;
  });

  // Readout windows by host block; photons are computed when the host runs.
  std::vector<double> photons(segs.size(), 0.0);
  PopulationState state({0.0, 1.0, 0.0, 0.0, 0.0});
  bool initialized = false;
  for (std::size_t idx : order) {
    const PulseSegment& s = segs[idx];
    switch (s.kind) {
      case SegmentKind::kLaser: {
        PopulationState start = state;
        if (!initialized) start = steady_state(on);
        for (std::size_t w = 0; w < segs.size(); ++w) {
          const auto& win = segs[w];
          if (win.kind != SegmentKind::kReadout) continue;
          if (win.start + kTimeTol < s.start || win.start + win.duration > s.start + s.duration + kTimeTol) {
            continue;
          }
          photons[w] = readout_photons(start, on, s, win, phys);
        }
        if (!initialized) {
          state = initialized_state(phys, on, off);
          initialized = true;
        } else {
          state = propagate(start, on, s.duration);
        }
        break;
      }
      case SegmentKind::kWait:
        state = propagate(state, off, s.duration);
        break;
      case SegmentKind::kMwPi:
        state = apply_pi_pulse(state, s.fidelity);
        break;
      case SegmentKind::kReadout:
        break;
    }
  }

  Rng rng = make_rng(rng_seed);
  std::vector<double> counts;
  for (std::size_t idx : order) {
    const PulseSegment& s = segs[idx];
    if (s.kind != SegmentKind::kReadout) continue;
    const double mean = expected_counts(photons[idx], detector, s.duration, shots);
    counts.push_back(sample_counts(mean, detector, rng));
  }
  return counts;
}

void Trace::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!(r.sig1 >= 0.0) || !(r.sig2 >= 0.0)) {
      throw ValidationError("trace row " + std::to_string(i) + ": negative counts");
    }
    if (!(r.signal >= -1.0 && r.signal <= 1.0)) {
      throw ValidationError("trace row " + std::to_string(i) + ": signal outside [-1, 1]");
    }
    if (!(r.signal_err >= 0.0)) {
      throw ValidationError("trace row " + std::to_string(i) + ": negative signal_err");
    }
    if (i > 0 && !(r.tau_s > rows[i - 1].tau_s)) {
      throw ValidationError("trace rows must be sorted by strictly increasing tau");
    }
  }
}

bool Trace::has_errors() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(),
                                      [](const TraceRow& r) { return r.signal_err > 0.0; });
}

Trace sweep(const T1Protocol& protocol, const PhotophysicsParams& phys,
            const RelaxationBudget& budget, const DetectorParams& detector,
            std::uint64_t rng_seed, unsigned threads) {
  protocol.validate();
  phys.validate();
  budget.validate();
  detector.validate();

  const std::size_t n = protocol.tau_grid.size();
  Trace trace;
  trace.rows.resize(n);
  const double gamma1 = budget.total();

  auto run_point = [&](std::size_t i) {
    const double tau = protocol.tau_grid[i];
    const auto pair = build_t1_pair(protocol, tau);
    const double sig1 = execute(pair.reference, phys, gamma1, detector,
                                protocol.shots_per_point, derive_seed(rng_seed, i, 0))
                            .front();
    const double sig2 = execute(pair.flipped, phys, gamma1, detector,
                                protocol.shots_per_point, derive_seed(rng_seed, i, 1))
                            .front();
    const auto d = differential_signal(sig1, sig2);
    trace.rows[i] = {tau, sig1, sig2, d.signal, d.signal_err};
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) run_point(i);
    return trace;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          run_point(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return trace;
}

}  // namespace nvrelax
