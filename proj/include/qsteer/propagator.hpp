// propagator.hpp — exact piecewise-constant evolution and stability gaps.
#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <qsteer/core.hpp>

namespace qsteer {

namespace detail {

// Eigendecompositions of lambda + u * B, cached per amplitude.  Sampled pulse
// trains revisit the same few amplitudes every carrier period, so the cache
// turns thousands of segments into a handful of solves.
class SegmentPropagator {
 public:
  explicit SegmentPropagator(const BilinearSystem& system) : system_(system) {}

  // Applies exp(-i (lambda + u B) d) to psi.
  void advance(StateVector& psi, double u, double d) {
    const Decomposition& dec = decomposition(u);
    Eigen::VectorXcd coef = dec.vectors.adjoint() * psi;
    for (Eigen::Index j = 0; j < coef.size(); ++j)
      coef(j) *= std::polar(1.0, -dec.values(j) * d);
    psi = dec.vectors * coef;
  }

 private:
  struct Decomposition {
    Eigen::VectorXd values;
    Eigen::MatrixXcd vectors;
  };

  const Decomposition& decomposition(double u) {
    const uint64_t key = std::bit_cast<uint64_t>(u);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const int n = system_.size();
    Eigen::MatrixXcd h = u * system_.coupling.entries;
    for (int j = 0; j < n; ++j) h(j, j) += system_.spectrum.values[static_cast<size_t>(j)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("segment Hamiltonian eigendecomposition failed");
    return cache_.emplace(key, Decomposition{solver.eigenvalues(), solver.eigenvectors()}).first->second;
  }

  const BilinearSystem& system_;
  std::unordered_map<uint64_t, Decomposition> cache_;
};

}  // namespace detail

struct PropagationResult {
  StateVector final_state;
  double unitarity_defect = 0.0;
  std::vector<std::pair<double, StateVector>> trace;  // (time, state), when requested

  double fidelity_to(const StateVector& target) const {
    if (target.size() != final_state.size())
      throw std::invalid_argument("fidelity target dimension differs");
    return std::norm(complexd(target.adjoint() * final_state));
  }
};

// Evolves psi0 under the schedule, one exact Hermitian exponential per
// segment.  trace_stride > 0 records the state every that many segments
// (plus the initial and final states).
inline PropagationResult evolve(const BilinearSystem& system, const ControlSchedule& schedule,
                                const StateVector& psi0, int trace_stride = 0) {
  if (psi0.size() != system.size())
    throw std::invalid_argument("state and system dimensions differ");
  schedule.validate();
  require_amplitudes_within(schedule, system.r);

  PropagationResult result;
  StateVector psi = psi0;
  detail::SegmentPropagator prop(system);
  double t = 0.0;
  if (trace_stride > 0) result.trace.emplace_back(t, psi);
  int since_last = 0;
  for (const Segment& seg : schedule.segments) {
    prop.advance(psi, seg.amplitude, seg.duration);
    t += seg.duration;
    if (trace_stride > 0 && ++since_last == trace_stride) {
      result.trace.emplace_back(t, psi);
      since_last = 0;
    }
  }
  if (trace_stride > 0 && since_last != 0) result.trace.emplace_back(t, psi);
  result.final_state = std::move(psi);
  result.unitarity_defect = std::abs(result.final_state.norm() - psi0.norm());
  if (result.unitarity_defect > 1e-6)
    throw std::runtime_error("propagation lost unitarity");
  return result;
}

// Full propagation unitary of the schedule on the given system.
inline Eigen::MatrixXcd evolve_unitary(const BilinearSystem& system,
                                       const ControlSchedule& schedule) {
  schedule.validate();
  require_amplitudes_within(schedule, system.r);
  const int n = system.size();
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(n, n);
  detail::SegmentPropagator prop(system);
  for (const Segment& seg : schedule.segments) {
    for (int col = 0; col < n; ++col) {
      StateVector column = u.col(col);
      prop.advance(column, seg.amplitude, seg.duration);
      u.col(col) = column;
    }
  }
  return u;
}

struct Fidelity {
  double overlap_sq = 0.0;
  double distance = 0.0;
};

// Squared overlap and Euclidean distance between two normalized states.
inline Fidelity fidelity(const StateVector& a, const StateVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("state dimensions differ");
  if (std::abs(a.norm() - 1.0) > 1e-6 || std::abs(b.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("fidelity inputs must be normalized");
  return {std::norm(complexd(a.adjoint() * b)), (a - b).norm()};
}

struct StabilityGap {
  double gap = 0.0;        // op_norm_pm of U_a - U_b on the truncation
  double bound_rhs = 0.0;  // l1(schedule) * op_norm_pm(B_a - B_b)
};

// Distance between the evolutions two couplings generate under one schedule,
// next to the L1-scaled coupling distance that bounds it.
inline StabilityGap stability_gap(const BilinearSystem& system_a, const BilinearSystem& system_b,
                                  const ControlSchedule& schedule, int truncation) {
  if (truncation < 1 || truncation > system_a.size() || truncation > system_b.size())
    throw std::invalid_argument("stability truncation out of range");
  const BilinearSystem a = truncate_system(system_a, truncation);
  const BilinearSystem b = truncate_system(system_b, truncation);
  for (int j = 0; j < truncation; ++j)
    if (a.spectrum.values[static_cast<size_t>(j)] != b.spectrum.values[static_cast<size_t>(j)])
      throw std::invalid_argument("stability comparison requires a shared spectrum");

  StabilityGap out;
  const Eigen::MatrixXcd ua = evolve_unitary(a, schedule);
  const Eigen::MatrixXcd ub = evolve_unitary(b, schedule);
  out.gap = op_norm_pm(ua - ub, a.spectrum);
  out.bound_rhs = l1_norm(schedule) * op_norm_pm(a.coupling.entries - b.coupling.entries, a.spectrum);
  return out;
}

}  // namespace qsteer
