#pragma once

// Idealized control sequences: microwave pi/pi-half rotations are treated as
// instantaneous, delays and optical pulses carry duration. Used to describe
// echo and dynamical-decoupling experiments; coherence physics itself lives
// in the curve-fit models.

#include <vector>

namespace pl6 {

enum class PulseKind { pi_x, pi_y, pi_half_x, pi_half_y, delay, optical };

struct PulseElement {
  PulseKind kind = PulseKind::delay;
  double duration_ns = 0.0;  ///< only delay/optical carry duration
  double power_uw = 0.0;     ///< optical pulses only
};

struct PulseSequence {
  std::vector<PulseElement> elements;

  /// Non-empty, durations >= 0, rotations carry no duration. Throws input_error.
  void validate() const;
  /// Sum of all delay durations (free evolution time), ns.
  double free_evolution_ns() const;
  /// Number of pi rotations (any axis).
  int pi_pulse_count() const;
};

/// pi/2 - tau - pi - tau - pi/2 Hahn echo, total free evolution 2*tau.
PulseSequence hahn_sequence(double tau_ns);

/// XY8-N: pi/2, then `blocks` repeats of the phase-alternating eight-pulse
/// block X-Y-X-Y-Y-X-Y-X with tau between pulses (tau/2 at the block edges),
/// closing pi/2. Total pi count 8*blocks.
PulseSequence xy8_sequence(int blocks, double tau_ns);

}  // namespace pl6
