#pragma once

#include "nvrelax/detector_model.hpp"
#include "nvrelax/noise_model.hpp"
#include "nvrelax/spin_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nvrelax {

enum class SegmentKind { kLaser, kMwPi, kWait, kReadout };

std::string_view to_string(SegmentKind kind);

// One entry on the sequence timeline. Times are absolute seconds from the
// sequence start. Laser and Wait are timeline blocks; MwPi is an
// instantaneous event; Readout is a detection window that must sit inside a
// Laser block.
struct PulseSegment {
  SegmentKind kind = SegmentKind::kWait;
  double start = 0.0;
  double duration = 0.0;
  double fidelity = 1.0;  // MwPi only
};

class PulseSequence {
public:
  /// Appends a block after the current end of the timeline.
  PulseSequence& laser(double duration);
  PulseSequence& wait(double duration);
  PulseSequence& pi_pulse(double fidelity);
  /// Window relative to the start of the most recently appended block.
  PulseSequence& readout(double offset, double length);

  const std::vector<PulseSegment>& segments() const { return segments_; }
  std::vector<PulseSegment>& segments() { return segments_; }
  double total_duration() const { return cursor_; }
  int count(SegmentKind kind) const;

private:
  std::vector<PulseSegment> segments_;
  double cursor_ = 0.0;
  double last_block_start_ = 0.0;
};

struct Violation {
  std::size_t segment = 0;
  std::string message;
};

/// Structural problems in the sequence; empty means valid.
std::vector<Violation> validate(const PulseSequence& seq);

struct T1Protocol {
  double init_laser_duration = 5e-6;
  double readout_laser_duration = 5e-6;
  double readout_offset = 0.0;
  double readout_length = 300e-9;
  std::vector<double> tau_grid;  // seconds, strictly increasing
  double shots_per_point = 1e6;
  double pi_fidelity = 1.0;

  void validate() const;
};

/// n points over [tau_min, tau_max], log- or linearly spaced.
std::vector<double> make_tau_grid(double tau_min, double tau_max, int n,
                                  bool log_spacing);

struct T1SequencePair {
  PulseSequence reference;  // branch A, no pi pulse
  PulseSequence flipped;    // branch B, pi pulse after initialization
};

T1SequencePair build_t1_pair(const T1Protocol& protocol, double tau);

/// Runs the sequence and returns one count value per Readout segment, in
/// timeline order. The first Laser block initializes the spin: its output is
/// the laser-on steady state drained through the excited and singlet levels.
/// gamma1 in 1/ms. Throws ValidationError for invalid sequences.
std::vector<double> execute(const PulseSequence& seq,
                            const PhotophysicsParams& phys, double gamma1_per_ms,
                            const DetectorParams& detector, double shots,
                            std::uint64_t rng_seed);

struct TraceRow {
  double tau_s = 0.0;
  double sig1 = 0.0;
  double sig2 = 0.0;
  double signal = 0.0;
  double signal_err = 0.0;  // 0 means unknown
};

struct Trace {
  std::vector<TraceRow> rows;

  /// Throws ValidationError on unsorted tau, negative counts, or signals
  /// outside [-1, 1].
  void validate() const;
  bool has_errors() const;
};

/// Both branches at every tau of the protocol. Per-point seeds derive from
/// (rng_seed, tau index, branch), so any thread count gives the same Trace.
Trace sweep(const T1Protocol& protocol, const PhotophysicsParams& phys,
            const RelaxationBudget& budget, const DetectorParams& detector,
            std::uint64_t rng_seed, unsigned threads = 1);

}  // namespace nvrelax
