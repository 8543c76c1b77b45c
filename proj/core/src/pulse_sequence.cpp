#include "pl6/pulse_sequence.hpp"

#include <cmath>

#include "pl6/errors.hpp"

namespace pl6 {

namespace {

bool is_rotation(PulseKind k) {
  return k == PulseKind::pi_x || k == PulseKind::pi_y || k == PulseKind::pi_half_x ||
         k == PulseKind::pi_half_y;
}

PulseElement rot(PulseKind k) { return PulseElement{k, 0.0, 0.0}; }
PulseElement wait(double tau) { return PulseElement{PulseKind::delay, tau, 0.0}; }

}  // namespace

void PulseSequence::validate() const {
  if (elements.empty()) throw input_error("pulse sequence is empty");
  for (const auto& e : elements) {
    if (!std::isfinite(e.duration_ns) || e.duration_ns < 0.0)
      throw input_error("pulse durations must be finite and nonnegative");
    if (is_rotation(e.kind) && e.duration_ns != 0.0)
      throw input_error("rotations are instantaneous; durations belong to delays");
    if (e.kind == PulseKind::optical && (!std::isfinite(e.power_uw) || e.power_uw < 0.0))
      throw input_error("optical pulse power must be finite and nonnegative");
  }
}

double PulseSequence::free_evolution_ns() const {
  double sum = 0.0;
  for (const auto& e : elements)
    if (e.kind == PulseKind::delay) sum += e.duration_ns;
  return sum;
}

int PulseSequence::pi_pulse_count() const {
  int n = 0;
  for (const auto& e : elements)
    if (e.kind == PulseKind::pi_x || e.kind == PulseKind::pi_y) ++n;
  return n;
}

PulseSequence hahn_sequence(double tau_ns) {
  if (!(tau_ns >= 0.0) || !std::isfinite(tau_ns))
    throw input_error("tau must be finite and nonnegative");
  PulseSequence s;
  s.elements = {rot(PulseKind::pi_half_x), wait(tau_ns), rot(PulseKind::pi_x),
                wait(tau_ns), rot(PulseKind::pi_half_x)};
  return s;
}

PulseSequence xy8_sequence(int blocks, double tau_ns) {
  if (blocks < 1) throw input_error("XY8 needs at least one block");
  if (!(tau_ns >= 0.0) || !std::isfinite(tau_ns))
    throw input_error("tau must be finite and nonnegative");

  static const PulseKind pattern[8] = {PulseKind::pi_x, PulseKind::pi_y, PulseKind::pi_x,
                                       PulseKind::pi_y, PulseKind::pi_y, PulseKind::pi_x,
                                       PulseKind::pi_y, PulseKind::pi_x};
  PulseSequence s;
  s.elements.push_back(rot(PulseKind::pi_half_x));
  s.elements.push_back(wait(0.5 * tau_ns));
  const int total = 8 * blocks;
  for (int k = 0; k < total; ++k) {
    s.elements.push_back(rot(pattern[k % 8]));
    s.elements.push_back(wait(k + 1 == total ? 0.5 * tau_ns : tau_ns));
  }
  s.elements.push_back(rot(PulseKind::pi_half_x));
  return s;
}

}  // namespace pl6
