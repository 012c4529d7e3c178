// approximation.hpp — finite-rank families, uniform bounds, connectivity repair.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <qsteer/core.hpp>

namespace qsteer {

namespace detail {

inline Eigen::MatrixXcd rank_block(const CouplingMatrix& coupling, int n) {
  const int size = coupling.truncation_size;
  if (n < 1) throw std::invalid_argument("rank must be positive");
  if (n >= size)
    throw std::invalid_argument(
        "rank must stay below the truncation size; nothing is left to approximate");
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(size, size);
  out.topLeftCorner(n, n) = coupling.entries.topLeftCorner(n, n);
  return out;
}

}  // namespace detail

struct RankTruncation {
  CouplingMatrix matrix;
  double residual = 0.0;  // weighted norm of the discarded part
};

// Top-left n x n block of the coupling, zero elsewhere, with the weighted
// norm of what was cut.
inline RankTruncation finite_rank_truncation(const CouplingMatrix& coupling,
                                             const Spectrum& spectrum, int n) {
  Eigen::MatrixXcd block = detail::rank_block(coupling, n);
  const double residual = op_norm_pm(coupling.entries - block, spectrum);
  return {CouplingMatrix(std::move(block)), residual};
}

// A sequence of couplings approaching a target in the weighted norm.  Every
// member must differ from the target, and the residuals must not increase
// along the sequence.
struct ApproximatingFamily {
  std::vector<CouplingMatrix> members;  // member n lives at index n - 1
  CouplingMatrix target;
  Spectrum spectrum;
  std::vector<double> residuals;

  ApproximatingFamily(std::vector<CouplingMatrix> family_members, CouplingMatrix family_target,
                      Spectrum norm_spectrum)
      : members(std::move(family_members)),
        target(std::move(family_target)),
        spectrum(std::move(norm_spectrum)) {
    if (members.empty()) throw std::invalid_argument("family needs at least one member");
    if (spectrum.size() != target.truncation_size)
      throw std::invalid_argument("spectrum and target truncation sizes must match");
    residuals.reserve(members.size());
    for (const CouplingMatrix& member : members) {
      if (member.truncation_size != target.truncation_size)
        throw std::invalid_argument("family members must share the target's truncation");
      const Eigen::MatrixXcd diff = member.entries - target.entries;
      if (diff.cwiseAbs().maxCoeff() == 0.0)
        throw std::invalid_argument("family members must differ from the target");
      residuals.push_back(op_norm_pm(diff, spectrum));
    }
    for (std::size_t i = 1; i < residuals.size(); ++i) {
      if (residuals[i] > residuals[i - 1] + 1e-12)
        throw std::invalid_argument("family residuals must be nonincreasing");
    }
  }

  int size() const { return static_cast<int>(members.size()); }

  // Relative-bound constants member n certifies on top of the target's (a, b).
  std::pair<double, double> bound_constants(int n, double a, double b) const {
    if (n < 1 || n > size()) throw std::invalid_argument("family index out of range");
    return {a + residuals[n - 1], b + residuals[n - 1]};
  }
};

// Family of rank truncations of a coupling at ranks 1 .. max_n.
inline ApproximatingFamily rank_truncation_family(const CouplingMatrix& coupling,
                                                  const Spectrum& spectrum, int max_n) {
  if (max_n < 1) throw std::invalid_argument("family needs at least one member");
  std::vector<CouplingMatrix> members;
  members.reserve(max_n);
  for (int n = 1; n <= max_n; ++n)
    members.emplace_back(detail::rank_block(coupling, n));
  return {std::move(members), coupling, spectrum};
}

struct UniformBounds {
  double a_tilde = 0.0;
  double b_tilde = 0.0;
  int n0 = 0;  // first member index whose residual is at most mu
};

// Bound constants (a + mu, b + mu) valid uniformly past the first member that
// approximates the target within mu.
inline UniformBounds uniform_bounds(const ApproximatingFamily& family, double a, double b,
                                    double mu, double r) {
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  if (!(r * (a + mu) < 1.0))
    throw std::invalid_argument("r (a + mu) must stay below 1 for the shifted bounds to hold");
  for (std::size_t i = 0; i < family.residuals.size(); ++i) {
    if (family.residuals[i] <= mu)
      return {a + mu, b + mu, static_cast<int>(i) + 1};
  }
  throw std::runtime_error(
      "no family member approximates the target within mu; extend the family");
}

// Adds a small Hermitian correction that revives chain entries the coupling
// lost: each zero ordered pair (s, s') in the chain is enumerated
// lexicographically by b, and entry (s, s') gains
// (1/(8 n)) [2^{-b(s,s')} + 2^{-b(s',s)}], absent orientations contributing
// nothing.  The correction's total mass is below 1/(2 n).
inline CouplingMatrix connectivity_repair(const CouplingMatrix& coupling,
                                          const std::vector<std::pair<int, int>>& chain, int n,
                                          double zero_tolerance = kZeroCouplingTolerance) {
  if (n < 1) throw std::invalid_argument("repair index n must be positive");
  const int size = coupling.truncation_size;

  std::vector<std::pair<int, int>> zero_pairs;
  for (const auto& [s, t] : chain) {
    if (s < 1 || s > size || t < 1 || t > size)
      throw std::invalid_argument("chain pair out of range");
    if (s == t) throw std::invalid_argument("chain pairs must join distinct levels");
    if (std::abs(coupling.at(s, t)) <= zero_tolerance) zero_pairs.emplace_back(s, t);
  }
  std::sort(zero_pairs.begin(), zero_pairs.end());
  zero_pairs.erase(std::unique(zero_pairs.begin(), zero_pairs.end()), zero_pairs.end());
  if (zero_pairs.empty()) return coupling;

  Eigen::MatrixXcd entries = coupling.entries;
  const double scale = 1.0 / (8.0 * n);
  for (std::size_t b = 0; b < zero_pairs.size(); ++b) {
    const auto [s, t] = zero_pairs[b];
    const double weight = scale * std::pow(2.0, -static_cast<double>(b));
    entries(s - 1, t - 1) += weight;
    entries(t - 1, s - 1) += weight;
  }
  return CouplingMatrix(std::move(entries));
}

}  // namespace qsteer
