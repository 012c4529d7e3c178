// models.hpp — delta interaction in a box and a generic matrix model loader.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <qsteer/core.hpp>
#include <qsteer/graph.hpp>

namespace qsteer {

// Particle in a unit box with a point interaction of strength eta at a fixed
// position.  Unperturbed levels are E_k = k^2 pi^2 with eigenfunctions
// sqrt(2) sin(k pi x); the interaction couples levels through the form
// B_kl = 2 sin(k pi c) sin(l pi c), a rank-one pattern.
struct DeltaBoxModel {
  double interaction_position = 0.5;
  double eta = 0.0;
  int truncation = 2;

  void validate() const {
    if (!(interaction_position > 0.0) || !(interaction_position < 1.0))
      throw std::invalid_argument("interaction position must lie in (0, 1)");
    if (!(eta >= 0.0))
      throw std::invalid_argument(
          "attractive interactions (eta < 0) are out of scope: they can pull "
          "bound states below the box spectrum");
    if (truncation < 2) throw std::invalid_argument("truncation must be at least 2");
  }

  bool centered() const { return std::abs(interaction_position - 0.5) < 1e-12; }
};

namespace detail {

// Root of the even-parity secular equation 2 k cos(k/2) + eta sin(k/2) = 0
// in the bracket ((2l+1) pi, (2l+2) pi); the interaction is repulsive, so the
// level moves up from (2l+1) pi without crossing the next unperturbed root.
inline double even_secular_root(int l, double eta) {
  const double k0 = (2 * l + 1) * kPi;
  if (eta == 0.0) return k0;
  const auto f = [eta](double k) {
    return 2.0 * k * std::cos(0.5 * k) + eta * std::sin(0.5 * k);
  };
  double lo = k0;
  double hi = (2 * l + 2) * kPi;
  double flo = f(lo);
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  double k = 0.5 * (lo + hi);
  for (int it = 0; it < 3; ++it) {
    const double fp = (2.0 + 0.5 * eta) * std::cos(0.5 * k) - k * std::sin(0.5 * k);
    if (fp == 0.0) break;
    k -= f(k) / fp;
  }
  return std::min(std::max(k, k0), (2 * l + 2) * kPi);
}

// First count even-parity levels E = k^2 at interaction strength eta.
inline std::vector<double> even_parity_levels(double eta, int count) {
  std::vector<double> out(count);
  for (int l = 0; l < count; ++l) {
    const double k = even_secular_root(l, eta);
    out[l] = k * k;
  }
  return out;
}

}  // namespace detail

// Full spectrum of the centered model at interaction strength eta: even-parity
// levels from the secular equation interleaved with the unperturbed odd-parity
// levels (2j)^2 pi^2, whose eigenfunctions vanish at the interaction point.
inline Spectrum perturbed_spectrum(const DeltaBoxModel& model, double eta, int count) {
  model.validate();
  if (!model.centered())
    throw std::invalid_argument(
        "perturbed spectra are available for the centered interaction only");
  if (!(eta >= 0.0))
    throw std::invalid_argument(
        "attractive interactions (eta < 0) are out of scope: they can pull "
        "bound states below the box spectrum");
  if (count < 1) throw std::invalid_argument("level count must be positive");

  const int n_even = (count + 1) / 2;
  const std::vector<double> even = detail::even_parity_levels(eta, n_even);
  std::vector<double> values;
  values.reserve(count);
  for (int pos = 1; pos <= count; ++pos) {
    if (pos % 2 == 1) {
      values.push_back(even[(pos - 1) / 2]);
    } else {
      const double k = pos * kPi;
      values.push_back(k * k);
    }
  }
  return Spectrum(values);
}

// Bilinear system for the box model.  The coupling keeps the closed-form
// rank-one pattern of the unperturbed eigenfunctions; at eta > 0 only the
// spectrum moves (the basis rotation it ignores is itself of order eta).
// Relative-bound constants follow the Young-inequality estimate: a = epsilon,
// b = 1 / epsilon.
inline BilinearSystem delta_box_system(const DeltaBoxModel& model, double r = 1.0,
                                       double young_epsilon = 0.1) {
  model.validate();
  if (!(young_epsilon > 0.0))
    throw std::invalid_argument("young_epsilon must be positive");

  const int n = model.truncation;
  Spectrum spectrum = [&] {
    if (model.eta == 0.0) {
      std::vector<double> values(n);
      for (int k = 1; k <= n; ++k) values[k - 1] = k * k * kPi * kPi;
      return Spectrum(values);
    }
    return perturbed_spectrum(model, model.eta, n);
  }();

  Eigen::VectorXd v(n);
  for (int k = 1; k <= n; ++k)
    v(k - 1) = std::sqrt(2.0) * std::sin(k * kPi * model.interaction_position);
  Eigen::MatrixXcd entries = (v * v.transpose()).cast<complexd>();

  return {std::move(spectrum), CouplingMatrix(std::move(entries)), r, young_epsilon,
          1.0 / young_epsilon};
}

// Restriction to the levels at odd positions, valid when the coupling obeys
// the centered selection rule (every entry touching an even position vanishes).
inline BilinearSystem even_subspace(const BilinearSystem& system) {
  const int n = system.size();
  for (int k = 1; k <= n; ++k) {
    for (int l = 1; l <= n; ++l) {
      if (k % 2 == 1 && l % 2 == 1) continue;
      if (std::abs(system.coupling.at(k, l)) > 1e-9)
        throw std::invalid_argument(
            "selection rule does not hold: levels at even positions stay coupled, "
            "so the even-parity restriction is not invariant");
    }
  }
  const int m = (n + 1) / 2;
  std::vector<double> values(m);
  Eigen::MatrixXcd entries(m, m);
  for (int i = 0; i < m; ++i) {
    values[i] = system.spectrum.level(2 * i + 1);
    for (int j = 0; j < m; ++j) entries(i, j) = system.coupling.at(2 * i + 1, 2 * j + 1);
  }
  return {Spectrum(values, system.spectrum.lower_bound), CouplingMatrix(std::move(entries)),
          system.r, system.relative_bound_a, system.relative_bound_b};
}

struct PerturbationCoefficients {
  double first_order = 0.0;
  double second_order = 0.0;
};

// Quadratic response of the centered odd level k = 2l + 1: first order 2 from
// the diagonal coupling, second order of magnitude 1 / (pi^2 (2l+1)^2).
inline PerturbationCoefficients perturbation_coefficients(int level) {
  if (level < 1 || level % 2 == 0)
    throw std::invalid_argument("perturbation coefficients are defined for odd levels");
  return {2.0, 1.0 / (kPi * kPi * level * level)};
}

// Partial sum of sum_{j >= 0, j != l} (1/(j-l) - 1/(j+l+1)), which telescopes
// to 1 / (2l+1); the tail after J terms decays like (2l+1)/J.
inline double telescoping_partial_sum(int l, long long terms) {
  if (l < 0) throw std::invalid_argument("level index must be nonnegative");
  if (terms <= l) throw std::invalid_argument("need more terms than the level index");
  double sum = 0.0;
  for (long long j = 0; j < terms; ++j) {
    if (j == l) continue;
    sum += 1.0 / static_cast<double>(j - l) - 1.0 / static_cast<double>(j + l + 1);
  }
  return sum;
}

struct LiftResult {
  double eta = 0.0;
  NonresonanceReport report;
};

// Smallest interaction strength on a 32-point geometric grid inside
// (0, eta_max) whose perturbed even-parity spectrum passes the nonresonance
// check on the first m levels, with their complete coupling graph's spanning
// tree as the chain.
inline LiftResult lift_resonances(const DeltaBoxModel& model, int m, double eta_max) {
  model.validate();
  if (!model.centered())
    throw std::invalid_argument("resonance lifting uses the centered secular solver");
  if (m < 2) throw std::invalid_argument("need at least two levels to lift");
  if (!(eta_max > 0.0)) throw std::invalid_argument("eta_max must be positive");

  Eigen::VectorXd v(m);
  for (int i = 0; i < m; ++i)
    v(i) = std::sqrt(2.0) * std::sin((2 * i + 1) * kPi * model.interaction_position);
  const CouplingMatrix coupling((v * v.transpose()).cast<complexd>());
  const CouplingGraph graph = build_graph(coupling);
  const std::vector<std::pair<int, int>> chain = tree_edges(spanning_tree(graph));

  for (int i = 0; i < 32; ++i) {
    const double eta = eta_max * std::pow(10.0, -4.0 * (32 - i) / 32.0);
    const Spectrum spectrum{detail::even_parity_levels(eta, m)};
    const NonresonanceReport report = check_nonresonance(spectrum, coupling, chain);
    if (report.ok()) return {eta, report};
  }
  throw std::runtime_error(
      "no interaction strength in (0, eta_max) certifies nonresonance on this "
      "grid; enlarge eta_max or refine the grid");
}

// Validated system from explicit spectrum and coupling data.
inline BilinearSystem user_matrix_model(const std::vector<double>& spectrum,
                                        const Eigen::MatrixXcd& coupling, double r, double a,
                                        double b) {
  return {Spectrum(spectrum), CouplingMatrix(coupling), r, a, b};
}

}  // namespace qsteer
