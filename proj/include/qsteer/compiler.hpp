// compiler.hpp — compiles pilot plans into lab-frame pulse schedules.
//
// Physics of the compilation, fixed here once for the whole file.  The lab
// frame evolves i psi' = (Lambda + u B) psi.  Inside a pulse block starting at
// lab time t_a, pass to the dressed frame phi(s) = e^{i(Lambda s + D A(s))}
// psi(t_a + s), with D = diag(B) and A(s) the running integral of u.  There
// i phi' = u(s) (W(s) - D) phi where W_ij = B_ij e^{i((li - lj) s + (Dii - Djj) A(s))}.
// A pulse u = u0 (1 + cos(w s + chi)) / 2 on pair (i, j) makes that phase
// advance at the mean rate Delta_eff = Delta + dB u0 / 2, with Delta = li - lj
// and dB = Bii - Bjj, so the carrier sits at w = |Delta_eff| (the dressed gap
// including the mean shift from the pulse itself).  One term of u W is then
// stationary; first-order averaging over the pulse gives exp(a T^theta) with
//   a     = u0 |B_ij| T / 4,
//   theta = arg(B_ij) + Delta t0 + dB A0 + s chi - pi/2,
// where (t0, A0) are the in-block elapsed time and control integral at the
// pulse start and s = +1 when Delta_eff < 0, -1 otherwise.  Inverting for chi
// realizes a requested rotation.
//
// A whole block therefore acts as e^{-i(Lambda T + D A_T)} R_p ... R_1.  The
// reverse block is compiled against the dressed target e^{i(Lambda T2 + D A2)}
// psi1, which has the same moduli as psi1: its rotations keep their pairs and
// angles, each theta shifts by (li - lj) T2 + (Bii - Bjj) A2, and the junction
// phase shifts by lambda_k T2 + B_kk A2.  The physical wait between the
// blocks then solves
//   lambda_k tau = phase_fwd - phase_rev - lambda_k (T1 + T2) - B_kk (A1 + A2)  (mod 2 pi).
//
// Control integrals are tracked at their per-pulse ideal value u0 T / 4 * 2;
// the sampled waveform deviates from that by at most one partial carrier
// period, which shows up only through the diagonal dressing and stays far
// below the verification tolerances (it vanishes when diag(B) acts uniformly
// on the populated levels).
//
// Sampling caveat: holding the carrier piecewise constant at s samples per
// period creates alias tones at (s n +- 1) w.  On spectra whose gaps form an
// integer comb over w (the centered delta box is one: every odd-odd gap is a
// multiple of 8 pi^2) an alias can land exactly on a transition and pump it
// at ~1/(s n) relative strength.  Pick s so that no (s n +- 1) w matches a
// gap reachable from a populated level inside the simulated truncation
// (s = 40 clears the delta-box comb through level 24; 32 and 64 do not, both
// exposing the 65 w alias on the (3, 23) gap).
#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include <qsteer/core.hpp>
#include <qsteer/planner.hpp>

namespace qsteer {

struct PulseSpec {
  double carrier_frequency = 0.0;  // |lambda_j - lambda_i|
  double carrier_phase = 0.0;      // chi in [0, 2pi)
  double amplitude = 0.0;          // u0
  int samples_per_period = 0;      // >= 8
  double pulse_duration = 0.0;     // 4 angle / (u0 |B_ij|)
};

struct BudgetCertificate {
  double l1 = 0.0;
  double budget = 0.0;
  bool ok = true;
  double min_coupling = 0.0;  // smallest |B_ij| among the edges the plan uses
};

struct CompiledPlan {
  ControlSchedule schedule;
  std::vector<PulseSpec> pulses;  // forward pulses, then reverse pulses
  BudgetCertificate certificate;
  double forward_duration = 0.0;
  double free_duration = 0.0;
  double reverse_duration = 0.0;
};

namespace detail {

// In-block elapsed time and ideal control integral.
struct BlockContext {
  double local_time = 0.0;
  double control_integral = 0.0;
};

inline PulseSpec pulse_spec(const Rotation& rot, const BilinearSystem& system, double u0,
                            int samples_per_period, const BlockContext& ctx, double theta_shift) {
  const complexd b = system.coupling.at(rot.i, rot.j);
  if (std::abs(b) <= kZeroCouplingTolerance)
    throw std::invalid_argument("cannot compile a rotation across a zero coupling");
  const double delta = system.spectrum.level(rot.i) - system.spectrum.level(rot.j);
  const double dB = system.coupling.at(rot.i, rot.i).real() - system.coupling.at(rot.j, rot.j).real();
  const double delta_eff = delta + 0.5 * dB * u0;
  if (delta_eff == 0.0 || delta == 0.0)
    throw std::invalid_argument(
        "cannot compile a rotation on a degenerate pair; certify nonresonance first");
  const double sign = (delta_eff < 0.0) ? 1.0 : -1.0;
  const double theta = rot.theta + theta_shift;

  PulseSpec spec;
  spec.carrier_frequency = std::abs(delta_eff);
  spec.carrier_phase = wrap_angle(
      sign * (theta + kPi / 2.0 - std::arg(b) - delta * ctx.local_time - dB * ctx.control_integral));
  spec.amplitude = u0;
  spec.samples_per_period = samples_per_period;
  spec.pulse_duration = 4.0 * rot.angle / (u0 * std::abs(b));
  return spec;
}

}  // namespace detail

// Midpoint-sampled piecewise-constant waveform of one pulse.  Sampling at
// midpoints keeps the integral over every full carrier period exactly
// u0 / 2 * period and makes the quantization error second order in the step.
// Midpoint phases are reduced modulo the carrier period up front, so segments
// one period apart carry bit-identical amplitudes.
inline ControlSchedule sample_pulse(const PulseSpec& spec) {
  if (spec.samples_per_period < 8)
    throw std::invalid_argument("samples_per_period must be at least 8");
  ControlSchedule out;
  const int spp = spec.samples_per_period;
  const double period = 2.0 * kPi / spec.carrier_frequency;
  const double h = period / spp;
  auto n_full = static_cast<long long>(std::floor(spec.pulse_duration / h));
  double remainder = spec.pulse_duration - static_cast<double>(n_full) * h;
  if (remainder < 1e-9 * h) {
    remainder = 0.0;
  } else if (h - remainder < 1e-9 * h) {
    ++n_full;
    remainder = 0.0;
  }
  for (long long q = 0; q < n_full; ++q) {
    const double phase =
        2.0 * kPi * (static_cast<double>(q % spp) + 0.5) / spp + spec.carrier_phase;
    const double u = spec.amplitude * 0.5 * (1.0 + std::cos(phase));
    out.segments.push_back({h, std::max(u, 0.0)});
  }
  if (remainder > 0.0) {
    const double phase = 2.0 * kPi * static_cast<double>(n_full % spp) / spp +
                         spec.carrier_frequency * 0.5 * remainder + spec.carrier_phase;
    const double u = spec.amplitude * 0.5 * (1.0 + std::cos(phase));
    out.segments.push_back({remainder, std::max(u, 0.0)});
  }
  return out;
}

// Lab-frame pulse for one rotation, anchored at the start of its own block.
inline ControlSchedule compile_rotation(const Rotation& rot, const BilinearSystem& system,
                                        double u0, int samples_per_period) {
  if (!(u0 > 0.0) || u0 >= system.r)
    throw std::invalid_argument("pulse amplitude u0 must lie in (0, r)");
  if (rot.angle <= 0.0) return {};
  return sample_pulse(detail::pulse_spec(rot, system, u0, samples_per_period, {}, 0.0));
}

// Single zero-amplitude segment; an empty schedule when the wait is zero.
inline ControlSchedule free_evolution_segment(double duration) {
  if (duration < 0.0) throw std::invalid_argument("free evolution duration must be >= 0");
  ControlSchedule out;
  if (duration > 0.0) out.segments.push_back({duration, 0.0});
  return out;
}

inline double default_pulse_amplitude(const BilinearSystem& system) {
  return std::min(0.1, system.r / 2.0);
}

inline CompiledPlan compile_plan(const PilotPlan& plan, const BilinearSystem& system,
                                 double u0, int samples_per_period) {
  if (!(u0 > 0.0) || u0 >= system.r)
    throw std::invalid_argument("pulse amplitude u0 must lie in (0, r)");
  const int m = system.size();
  const double lambda_k = system.spectrum.level(plan.target_vertex);
  const double d_kk = system.coupling.at(plan.target_vertex, plan.target_vertex).real();

  CompiledPlan out;
  double min_b = std::numeric_limits<double>::infinity();

  // Forward block, anchored at lab time zero.
  detail::BlockContext fwd;
  for (const Rotation& rot : plan.rotations) {
    const PulseSpec spec = detail::pulse_spec(rot, system, u0, samples_per_period, fwd, 0.0);
    out.schedule.append(sample_pulse(spec));
    out.pulses.push_back(spec);
    fwd.local_time += spec.pulse_duration;
    fwd.control_integral += 0.5 * u0 * spec.pulse_duration;
    min_b = std::min(min_b, std::abs(system.coupling.at(rot.i, rot.j)));
  }
  out.forward_duration = fwd.local_time;

  // Reverse block durations are known before its pulses are phased.
  double t2 = 0.0;
  for (const Rotation& rot : plan.reverse_rotations)
    t2 += 4.0 * rot.angle / (u0 * std::abs(system.coupling.at(rot.i, rot.j)));
  const double a2 = 0.5 * u0 * t2;

  // Physical wait matching the junction phase.
  const double mismatch = plan.final_phase - plan.reverse_phase -
                          lambda_k * (fwd.local_time + t2) -
                          d_kk * (fwd.control_integral + a2);
  double tau = 0.0;
  if (lambda_k > 0.0) {
    tau = wrap_angle(mismatch) / lambda_k;
  } else if (lambda_k < 0.0) {
    tau = wrap_angle(-mismatch) / -lambda_k;
  } else {
    const double wrapped = wrap_angle(mismatch);
    if (wrapped > 1e-9 && 2.0 * kPi - wrapped > 1e-9)
      throw std::invalid_argument(
          "phase unreachable by free evolution at this vertex; "
          "choose a target vertex k with lambda_k != 0");
  }
  out.free_duration = tau;
  out.schedule.append(free_evolution_segment(tau));

  // Reverse block, compiled against the dressed target.
  detail::BlockContext rev;
  for (const Rotation& rot : plan.reverse_rotations) {
    const double shift =
        (system.spectrum.level(rot.i) - system.spectrum.level(rot.j)) * t2 +
        (system.coupling.at(rot.i, rot.i).real() - system.coupling.at(rot.j, rot.j).real()) * a2;
    const PulseSpec spec = detail::pulse_spec(rot, system, u0, samples_per_period, rev, shift);
    out.schedule.append(sample_pulse(spec));
    out.pulses.push_back(spec);
    rev.local_time += spec.pulse_duration;
    rev.control_integral += 0.5 * u0 * spec.pulse_duration;
    min_b = std::min(min_b, std::abs(system.coupling.at(rot.i, rot.j)));
  }
  out.reverse_duration = rev.local_time;

  out.certificate.l1 = l1_norm(out.schedule);
  if (std::isfinite(min_b)) {
    out.certificate.min_coupling = min_b;
    out.certificate.budget = 5.0 * (m - 1) * kPi / (2.0 * min_b);
  }
  out.certificate.ok = out.certificate.l1 <= out.certificate.budget + 1e-12;
  return out;
}

}  // namespace qsteer
