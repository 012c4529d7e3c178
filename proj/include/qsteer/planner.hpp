// planner.hpp — pilot rotations along a spanning tree and transfer planning.
#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <qsteer/core.hpp>
#include <qsteer/graph.hpp>

namespace qsteer {

// One pilot rotation exp(angle * T) on span{e_i, e_j}, where
// T = e^{i theta} E_ij - e^{-i theta} E_ji.  sigma_duration is the time this
// rotation costs in the pilot system at coupling speed nu * |B_ij|.
struct Rotation {
  int i = 0;
  int j = 0;
  double theta = 0.0;   // in [0, 2pi)
  double angle = 0.0;   // in (0, pi/2]
  double sigma_duration = 0.0;
};

// Embeds the rotation into an m x m unitary:
//   (R psi)_i = cos(a) psi_i + e^{i theta} sin(a) psi_j
//   (R psi)_j = -e^{-i theta} sin(a) psi_i + cos(a) psi_j
// and identity elsewhere.
inline Eigen::MatrixXcd rotation_matrix(const Rotation& rot, int m) {
  if (rot.i < 1 || rot.j < 1 || rot.i > m || rot.j > m || rot.i == rot.j)
    throw std::invalid_argument("rotation indices out of range");
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Identity(m, m);
  const double c = std::cos(rot.angle);
  const double s = std::sin(rot.angle);
  const complexd phase = std::polar(1.0, rot.theta);
  r(rot.i - 1, rot.i - 1) = c;
  r(rot.j - 1, rot.j - 1) = c;
  r(rot.i - 1, rot.j - 1) = phase * s;
  r(rot.j - 1, rot.i - 1) = -std::conj(phase) * s;
  return r;
}

// Applies the rotation to psi in place, touching only components i and j.
inline void apply_rotation(const Rotation& rot, StateVector& psi) {
  const double c = std::cos(rot.angle);
  const double s = std::sin(rot.angle);
  const complexd phase = std::polar(1.0, rot.theta);
  const complexd pi_ = psi(rot.i - 1);
  const complexd pj_ = psi(rot.j - 1);
  psi(rot.i - 1) = c * pi_ + phase * s * pj_;
  psi(rot.j - 1) = -std::conj(phase) * s * pi_ + c * pj_;
}

inline void apply_rotations(const std::vector<Rotation>& rotations, StateVector& psi) {
  for (const Rotation& rot : rotations) apply_rotation(rot, psi);
}

// Rotation parameters that zero component i against component j.  When
// psi_i = 0 there is nothing to do and t = 0 is returned as a skip marker
// (a Rotation's angle must be positive, so callers drop these).  When
// psi_j = 0 the transfer is a straight swap: t = pi/2 with theta = 0.
struct ZeroComponentChoice {
  double theta = 0.0;
  double t = 0.0;
};

inline ZeroComponentChoice zero_component(const StateVector& psi, int i, int j) {
  if (i < 1 || j < 1 || i > psi.size() || j > psi.size() || i == j)
    throw std::invalid_argument("zero_component indices out of range");
  const complexd pi_ = psi(i - 1);
  const complexd pj_ = psi(j - 1);
  if (pi_ == complexd(0.0, 0.0)) return {0.0, 0.0};
  if (pj_ == complexd(0.0, 0.0)) return {0.0, kPi / 2.0};
  return {wrap_angle(std::arg(-pi_) - std::arg(pj_)), std::atan(std::abs(pi_) / std::abs(pj_))};
}

// Largest sigma-time a transfer along the chain may spend per side:
// (m - 1) rotations of angle at most pi/2 at coupling speed nu * min|b|.
inline double transfer_time_budget(int m, double nu, double min_coupling) {
  return (m - 1) * kPi / (2.0 * nu * min_coupling);
}

struct BasisTransfer {
  std::vector<Rotation> rotations;
  double phase = 0.0;  // psi maps to e^{i phase} e_root
};

// Sweeps psi onto the tree root: repeatedly zeroes the deepest vertex that
// still carries weight against its parent (ties break toward the largest
// index), so each vertex is zeroed at most once and never repopulated.
// Components at or below zero_tolerance are treated as already zero.
inline BasisTransfer transfer_to_basis(const StateVector& psi, const SpanningTree& tree,
                                       const CouplingMatrix& coupling, double nu,
                                       double zero_tolerance = kZeroCouplingTolerance) {
  const int m = coupling.truncation_size;
  if (psi.size() != m || static_cast<int>(tree.parent.size()) != m + 1)
    throw std::invalid_argument("state, tree, and coupling sizes differ");
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");

  StateVector w = psi;
  BasisTransfer out;
  for (int iter = 0; iter < m; ++iter) {
    int pick = 0;
    for (int v = 1; v <= m; ++v) {
      if (v == tree.root || std::abs(w(v - 1)) <= zero_tolerance) continue;
      if (pick == 0 || tree.depth[static_cast<size_t>(v)] > tree.depth[static_cast<size_t>(pick)] ||
          (tree.depth[static_cast<size_t>(v)] == tree.depth[static_cast<size_t>(pick)] && v > pick))
        pick = v;
    }
    if (pick == 0) break;
    const int parent = tree.parent[static_cast<size_t>(pick)];
    const double b = std::abs(coupling.at(pick, parent));
    if (b <= zero_tolerance)
      throw std::invalid_argument("spanning tree edge has zero coupling");
    const ZeroComponentChoice choice = zero_component(w, pick, parent);
    if (choice.t == 0.0) continue;
    const Rotation rot{pick, parent, choice.theta, choice.t, choice.t / (nu * b)};
    apply_rotation(rot, w);
    out.rotations.push_back(rot);
  }
  out.phase = wrap_angle(std::arg(w(tree.root - 1)));
  return out;
}

// Full pilot itinerary: forward rotations take psi0 to e^{i final_phase} e_k,
// free evolution advances the phase by lambda_k * free_evolution_duration,
// and reverse_rotations take e^{i reverse_phase} e_k to psi1.
struct PilotPlan {
  std::vector<Rotation> rotations;
  int target_vertex = 0;
  double final_phase = 0.0;
  double reverse_phase = 0.0;
  double free_evolution_duration = 0.0;
  std::vector<Rotation> reverse_rotations;
  double nu = 0.5;
};

inline std::vector<Rotation> inverted_rotations(const std::vector<Rotation>& rotations) {
  std::vector<Rotation> out;
  out.reserve(rotations.size());
  for (auto it = rotations.rbegin(); it != rotations.rend(); ++it)
    out.push_back({it->i, it->j, wrap_angle(it->theta + kPi), it->angle, it->sigma_duration});
  return out;
}

inline PilotPlan plan_transfer(const StateVector& psi0, const StateVector& psi1,
                               const BilinearSystem& system, int k, double nu = 0.5,
                               double zero_tolerance = kZeroCouplingTolerance) {
  require_normalized(psi0);
  require_normalized(psi1);
  const CouplingGraph graph = build_graph(system.coupling, zero_tolerance);
  const SpanningTree tree = spanning_tree(graph, k);

  const BasisTransfer fwd = transfer_to_basis(psi0, tree, system.coupling, nu, zero_tolerance);
  const BasisTransfer rev = transfer_to_basis(psi1, tree, system.coupling, nu, zero_tolerance);

  PilotPlan plan;
  plan.rotations = fwd.rotations;
  plan.target_vertex = k;
  plan.final_phase = fwd.phase;
  plan.reverse_phase = rev.phase;
  plan.reverse_rotations = inverted_rotations(rev.rotations);
  plan.nu = nu;

  const double lambda_k = system.spectrum.level(k);
  const double delta = wrap_angle(rev.phase - fwd.phase);
  if (lambda_k > 0.0) {
    plan.free_evolution_duration = delta / lambda_k;
  } else if (lambda_k < 0.0) {
    plan.free_evolution_duration = wrap_angle(-(rev.phase - fwd.phase)) / -lambda_k;
  } else if (delta <= 1e-12 || 2.0 * kPi - delta <= 1e-12) {
    plan.free_evolution_duration = 0.0;
  } else {
    throw std::invalid_argument(
        "phase unreachable by free evolution at this vertex; "
        "choose a target vertex k with lambda_k != 0");
  }

  // Per-side time budget along the tree: (m-1) rotations of angle <= pi/2.
  double min_b = std::numeric_limits<double>::infinity();
  for (const auto& [i, j] : tree_edges(tree)) min_b = std::min(min_b, std::abs(system.coupling.at(i, j)));
  if (graph.vertex_count > 1) {
    const double budget = transfer_time_budget(graph.vertex_count, nu, min_b);
    for (const auto* side : {&plan.rotations, &plan.reverse_rotations}) {
      double total = 0.0;
      for (const Rotation& rot : *side) total += rot.sigma_duration;
      if (total > budget * (1.0 + 1e-12))
        throw std::logic_error("pilot plan exceeded its transfer time budget");
    }
  }
  return plan;
}

}  // namespace qsteer
