#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <qsteer/core.hpp>
#include <qsteer/propagator.hpp>

#include "oracles.hpp"

using namespace qsteer;

namespace {

StateVector random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  StateVector v(n);
  for (int j = 0; j < n; ++j) v(j) = complexd(gauss(rng), gauss(rng));
  v /= v.norm();
  return v;
}

BilinearSystem two_level(double gap, double b) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
  m(0, 1) = m(1, 0) = b;
  return BilinearSystem(Spectrum({0.0, gap}), CouplingMatrix(m), 1.0, 0.1, 10.0);
}

BilinearSystem random_system(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> lam(0.0, 20.0);
  Eigen::MatrixXcd b(n, n);
  for (int i = 0; i < n; ++i) {
    b(i, i) = gauss(rng);
    for (int j = i + 1; j < n; ++j) {
      b(i, j) = complexd(gauss(rng), gauss(rng));
      b(j, i) = std::conj(b(i, j));
    }
  }
  std::vector<double> levels;
  for (int j = 0; j < n; ++j) levels.push_back(lam(rng));
  std::sort(levels.begin(), levels.end());
  return BilinearSystem(Spectrum(levels), CouplingMatrix(b), 1.0, 0.1, 10.0);
}

ControlSchedule random_schedule(int segments, double r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dur(0.01, 0.5);
  std::uniform_real_distribution<double> amp(0.0, r * 0.999);
  ControlSchedule s;
  for (int q = 0; q < segments; ++q) s.segments.push_back({dur(rng), amp(rng)});
  return s;
}

}  // namespace

TEST_CASE("evolve reproduces free evolution phases") {
  std::mt19937_64 rng(59);
  const BilinearSystem system = random_system(3, rng);
  ControlSchedule free_run;
  free_run.segments = {{0.7, 0.0}, {1.1, 0.0}};
  StateVector psi(3);
  psi << 0.5, complexd(0.5, 0.5), 0.5;
  const PropagationResult result = evolve(system, free_run, psi);
  for (int j = 0; j < 3; ++j) {
    const complexd expected =
        psi(j) * std::polar(1.0, -system.spectrum.values[static_cast<size_t>(j)] * 1.8);
    CHECK(std::abs(result.final_state(j) - expected) < 1e-13);
  }
}

TEST_CASE("evolve matches the Rabi closed form") {
  // Resonant pair: full-depth oscillation.
  {
    const BilinearSystem system = two_level(0.0, 1.0);
    StateVector e1(2);
    e1 << 1.0, 0.0;
    for (double t : {0.3, 1.0, 2.5}) {
      ControlSchedule s;
      s.segments = {{t, 0.25}};
      const PropagationResult r = evolve(system, s, e1);
      CHECK_THAT(std::norm(r.final_state(1)),
                 Catch::Matchers::WithinAbs(oracle::rabi_flip_probability(0.25, 0.0, t), 1e-12));
    }
  }
  // Detuned pair: partial oscillation at the generalized Rabi frequency.
  {
    const BilinearSystem system = two_level(1.5, 0.8);
    StateVector e1(2);
    e1 << 1.0, 0.0;
    ControlSchedule s;
    s.segments = {{2.0, 0.5}};
    const PropagationResult r = evolve(system, s, e1);
    CHECK_THAT(std::norm(r.final_state(1)),
               Catch::Matchers::WithinAbs(oracle::rabi_flip_probability(0.5 * 0.8, 1.5, 2.0), 1e-12));
  }
}

TEST_CASE("evolve matches the Taylor exponential on random segments") {
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const BilinearSystem system = random_system(n, rng);
    const double u = 0.3;
    const double d = 0.2 + 0.1 * static_cast<double>(rng() % 10);
    ControlSchedule s;
    s.segments = {{d, u}};
    const StateVector psi = random_state(n, rng);

    Eigen::MatrixXcd h = u * system.coupling.entries;
    for (int j = 0; j < n; ++j) h(j, j) += system.spectrum.values[static_cast<size_t>(j)];
    const StateVector expected =
        oracle::expm_taylor(complexd(0.0, -1.0) * d * h) * psi;
    CHECK((evolve(system, s, psi).final_state - expected).norm() < 1e-12);
  }
}

TEST_CASE("evolve keeps unitarity and composes") {
  std::mt19937_64 rng(67);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 6);
    const BilinearSystem system = random_system(n, rng);
    const ControlSchedule first = random_schedule(5, system.r, rng);
    const ControlSchedule second = random_schedule(4, system.r, rng);
    const StateVector psi = random_state(n, rng);

    ControlSchedule whole = first;
    whole.append(second);
    const PropagationResult direct = evolve(system, whole, psi);
    CHECK(direct.unitarity_defect < 1e-10);
    const PropagationResult staged = evolve(system, second, evolve(system, first, psi).final_state);
    CHECK((direct.final_state - staged.final_state).norm() < 1e-10);
  }
}

TEST_CASE("evolve respects block structure without leakage") {
  // Coupling only within {1,3} and {2,4}: starting in the first block stays there.
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(4, 4);
  b(0, 2) = b(2, 0) = 1.0;
  b(1, 3) = b(3, 1) = 1.5;
  const BilinearSystem system(Spectrum({0.0, 1.0, 4.0, 9.0}), CouplingMatrix(b), 1.0, 0.1, 10.0);
  std::mt19937_64 rng(71);
  StateVector psi = StateVector::Zero(4);
  psi(0) = std::sqrt(0.5);
  psi(2) = complexd(0.0, std::sqrt(0.5));
  const ControlSchedule s = random_schedule(40, system.r, rng);
  const PropagationResult r = evolve(system, s, psi);
  CHECK(std::norm(r.final_state(1)) + std::norm(r.final_state(3)) < 1e-12);
}

TEST_CASE("evolve trace recording and input validation") {
  const BilinearSystem system = two_level(1.0, 1.0);
  StateVector e1(2);
  e1 << 1.0, 0.0;
  ControlSchedule s;
  for (int q = 0; q < 10; ++q) s.segments.push_back({0.1, 0.2});

  const PropagationResult result = evolve(system, s, e1, 4);
  REQUIRE(result.trace.size() == 4);  // t = 0, 0.4, 0.8, 1.0
  CHECK(result.trace.front().first == 0.0);
  CHECK_THAT(result.trace[1].first, Catch::Matchers::WithinAbs(0.4, 1e-12));
  CHECK_THAT(result.trace.back().first, Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK((result.trace.back().second - result.final_state).norm() == 0.0);

  CHECK(evolve(system, ControlSchedule{}, e1).final_state == e1);

  ControlSchedule hot;
  hot.segments = {{1.0, 1.0}};  // amplitude == r is out of range
  CHECK_THROWS_AS(evolve(system, hot, e1), std::invalid_argument);
  StateVector wrong(3);
  wrong << 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(evolve(system, s, wrong), std::invalid_argument);
}

TEST_CASE("fidelity values and flags") {
  StateVector a(2), b(2);
  a << 1.0, 0.0;
  b << std::sqrt(0.5), std::sqrt(0.5);
  const Fidelity same = fidelity(a, a);
  CHECK(same.overlap_sq == 1.0);
  CHECK(same.distance == 0.0);

  const Fidelity half = fidelity(a, b);
  CHECK_THAT(half.overlap_sq, Catch::Matchers::WithinAbs(0.5, 1e-14));
  CHECK_THAT(half.distance, Catch::Matchers::WithinAbs(std::sqrt(2.0 - std::sqrt(2.0)), 1e-14));

  StateVector c(2);
  c << 0.0, 1.0;
  CHECK(fidelity(a, c).overlap_sq == 0.0);
  CHECK_THAT(fidelity(a, c).distance, Catch::Matchers::WithinAbs(std::sqrt(2.0), 1e-14));

  StateVector big(2);
  big << 1.1, 0.0;
  CHECK_THROWS_AS(fidelity(a, big), std::invalid_argument);
  StateVector odd(3);
  odd << 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(fidelity(a, odd), std::invalid_argument);

  const BilinearSystem system = two_level(1.0, 1.0);
  ControlSchedule s;
  s.segments = {{0.5, 0.3}};
  const PropagationResult r = evolve(system, s, a);
  CHECK_THAT(r.fidelity_to(r.final_state), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("stability_gap degenerate cases") {
  std::mt19937_64 rng(73);
  const BilinearSystem system = random_system(4, rng);
  const ControlSchedule s = random_schedule(10, system.r, rng);

  const StabilityGap zero = stability_gap(system, system, s, 4);
  CHECK(zero.gap < 1e-12);
  CHECK(zero.bound_rhs < 1e-12);

  // Different couplings under a silent schedule evolve identically.
  BilinearSystem other = random_system(4, rng);
  other.spectrum = system.spectrum;
  ControlSchedule silent;
  silent.segments = {{2.0, 0.0}};
  const StabilityGap quiet = stability_gap(system, other, silent, 4);
  CHECK(quiet.gap < 1e-12);
  CHECK(quiet.bound_rhs == 0.0);

  BilinearSystem shifted = other;
  shifted.spectrum.values[0] += 0.5;
  std::sort(shifted.spectrum.values.begin(), shifted.spectrum.values.end());
  CHECK_THROWS_AS(stability_gap(system, shifted, s, 4), std::invalid_argument);
  CHECK_THROWS_AS(stability_gap(system, other, s, 9), std::invalid_argument);
}

TEST_CASE("stability_gap ratio is stable across durations") {
  // Full coupling versus its rank-2 corner; the difference carries diagonal
  // weight, so the gap grows linearly while phases stay small.
  Eigen::MatrixXcd full = Eigen::MatrixXcd::Constant(4, 4, 2.0);
  Eigen::MatrixXcd corner = Eigen::MatrixXcd::Zero(4, 4);
  corner.topLeftCorner(2, 2).setConstant(2.0);
  const Spectrum spec({1.0, 9.0, 25.0, 49.0});
  const BilinearSystem sysFull(spec, CouplingMatrix(full), 1.0, 0.1, 10.0);
  const BilinearSystem sysCorner(spec, CouplingMatrix(corner), 1.0, 0.1, 10.0);

  std::vector<double> ratios;
  for (double t : {3.0, 6.0, 9.5, 19.0, 30.0}) {
    ControlSchedule s;
    s.segments = {{t, 0.05}};
    const StabilityGap g = stability_gap(sysFull, sysCorner, s, 4);
    CHECK(g.gap > 0.0);
    CHECK(g.bound_rhs > 0.0);
    ratios.push_back(g.gap / g.bound_rhs);
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  // Doubling the duration moves the ratio by far less than the factor-3 slack.
  CHECK(*hi / *lo < 3.0);
  // The implied stability constant stays within one order of magnitude.
  CHECK(*hi / *lo < 10.0);
}
