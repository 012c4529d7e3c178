// core.hpp — system types, Hilbert-scale norms, and control-schedule bookkeeping.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace qsteer {

using complexd = std::complex<double>;
using StateVector = Eigen::VectorXcd;

// Couplings with modulus at or below this are treated as absent everywhere
// (graph edges, planner skips, repair site detection).
inline constexpr double kZeroCouplingTolerance = 1e-12;

// Default tolerance for comparing spectral gaps, in units of the gaps compared.
inline constexpr double kGapTolerance = 1e-9;

inline constexpr double kPi = 3.14159265358979323846;

// Wraps x into [0, 2*pi).
inline double wrap_angle(double x) {
  double w = std::fmod(x, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  // fmod of a value just below a multiple of 2*pi can round up to the period.
  if (w >= 2.0 * kPi) w = 0.0;
  return w;
}

// Energy levels lambda_1 <= lambda_2 <= ..., indexed from 1, with a stored
// bound m >= 0 such that every level is >= -m.  The weighted norms below
// additionally need lambda_j + 1 > 0; model builders shift spectra so that
// levels are nonnegative before handing them to the control stack.
struct Spectrum {
  std::vector<double> values;
  double lower_bound = 0.0;

  Spectrum() = default;
  explicit Spectrum(std::vector<double> vals, double bound = 0.0)
      : values(std::move(vals)), lower_bound(bound) {
    validate();
  }

  int size() const { return static_cast<int>(values.size()); }

  double level(int k) const {
    if (k < 1 || k > size()) throw std::out_of_range("spectrum level index out of range");
    return values[static_cast<size_t>(k - 1)];
  }

  void validate() const {
    if (!(lower_bound >= 0.0)) throw std::invalid_argument("spectrum lower bound must be >= 0");
    for (size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) throw std::invalid_argument("spectrum values must be finite");
      if (values[i] < -lower_bound)
        throw std::invalid_argument("spectrum value below the stored lower bound");
      if (i > 0 && values[i] < values[i - 1])
        throw std::invalid_argument("spectrum values must be nondecreasing");
    }
  }
};

// Truncated coupling operator.  Entries are Hermitian exactly as stored:
// construction rejects any pair (i, j) where entries(i,j) != conj(entries(j,i)).
struct CouplingMatrix {
  Eigen::MatrixXcd entries;
  int truncation_size = 0;

  CouplingMatrix() = default;
  explicit CouplingMatrix(Eigen::MatrixXcd m) : entries(std::move(m)) {
    if (entries.rows() != entries.cols())
      throw std::invalid_argument("coupling matrix must be square");
    truncation_size = static_cast<int>(entries.rows());
    for (int i = 0; i < truncation_size; ++i)
      for (int j = 0; j <= i; ++j) {
        const complexd a = entries(i, j);
        const complexd b = entries(j, i);
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
          throw std::invalid_argument("coupling entries must be finite");
        if (a != std::conj(b))
          throw std::invalid_argument("coupling matrix entries must be Hermitian as stored");
      }
  }

  // 1-based accessor matching the level indexing.
  complexd at(int i, int j) const {
    if (i < 1 || j < 1 || i > truncation_size || j > truncation_size)
      throw std::out_of_range("coupling index out of range");
    return entries(i - 1, j - 1);
  }
};

// Bilinear control system: drift spectrum, coupling, amplitude cap r, and the
// relative bound constants (a, b) of the coupling with respect to the drift.
// Admissibility requires r * a < 1.
struct BilinearSystem {
  Spectrum spectrum;
  CouplingMatrix coupling;
  double r = 0.0;
  double relative_bound_a = 0.0;
  double relative_bound_b = 0.0;

  BilinearSystem() = default;
  BilinearSystem(Spectrum spec, CouplingMatrix coup, double r_, double a_, double b_)
      : spectrum(std::move(spec)), coupling(std::move(coup)),
        r(r_), relative_bound_a(a_), relative_bound_b(b_) {
    validate();
  }

  int size() const { return spectrum.size(); }

  void validate() const {
    spectrum.validate();
    if (spectrum.size() != coupling.truncation_size)
      throw std::invalid_argument("spectrum and coupling truncation sizes differ");
    if (!(r > 0.0) || !std::isfinite(r))
      throw std::invalid_argument("amplitude cap r must be positive and finite");
    if (!(relative_bound_a >= 0.0) || !(relative_bound_b >= 0.0))
      throw std::invalid_argument("relative bound constants must be nonnegative");
    if (r * relative_bound_a >= 1.0)
      throw std::invalid_argument(
          "inadmissible system: r * a = " + std::to_string(r * relative_bound_a) +
          " >= 1; admissible amplitude caps lie in (0, 1/a)");
  }
};

// One piecewise-constant control segment.
struct Segment {
  double duration = 0.0;
  double amplitude = 0.0;
};

// Piecewise-constant control, in segment order.
struct ControlSchedule {
  std::vector<Segment> segments;

  double total_duration() const {
    double t = 0.0;
    for (const Segment& s : segments) t += s.duration;
    return t;
  }

  void append(const ControlSchedule& other) {
    segments.insert(segments.end(), other.segments.begin(), other.segments.end());
  }

  void validate() const {
    for (const Segment& s : segments) {
      if (!(s.duration > 0.0) || !std::isfinite(s.duration))
        throw std::invalid_argument("schedule segment durations must be positive and finite");
      if (!std::isfinite(s.amplitude))
        throw std::invalid_argument("schedule amplitudes must be finite");
    }
  }
};

// L1 norm of the control: sum of duration * |amplitude| over segments.
inline double l1_norm(const ControlSchedule& schedule) {
  double acc = 0.0;
  for (const Segment& s : schedule.segments) acc += s.duration * std::abs(s.amplitude);
  return acc;
}

// Checks every amplitude lies in [0, r).
inline void require_amplitudes_within(const ControlSchedule& schedule, double r) {
  for (const Segment& s : schedule.segments)
    if (s.amplitude < 0.0 || s.amplitude >= r)
      throw std::invalid_argument("schedule amplitude " + std::to_string(s.amplitude) +
                                  " outside [0, r) with r = " + std::to_string(r));
}

inline double squared_norm(const StateVector& psi) { return psi.squaredNorm(); }

inline bool is_normalized(const StateVector& psi, double tol = 1e-12) {
  return std::abs(psi.squaredNorm() - 1.0) <= tol;
}

inline void require_normalized(const StateVector& psi, double tol = 1e-12) {
  if (!is_normalized(psi, tol))
    throw std::invalid_argument("state vector is not normalized: |psi|^2 = " +
                                std::to_string(psi.squaredNorm()));
}

namespace detail {

inline void require_weights_valid(const Spectrum& spectrum) {
  for (double v : spectrum.values)
    if (v + 1.0 <= 0.0)
      throw std::invalid_argument(
          "weighted norm undefined: spectrum has a level with lambda + 1 <= 0; "
          "shift the spectrum to nonnegative levels first");
}

}  // namespace detail

// Scale norm |psi|_{+1} (sign = +1) or |psi|_{-1} (sign = -1):
// sqrt(sum_j (lambda_j + 1)^{sign} |psi_j|^2).
inline double norm_scale(const StateVector& psi, const Spectrum& spectrum, int sign) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("norm_scale sign must be +1 or -1");
  if (psi.size() != spectrum.size())
    throw std::invalid_argument("state and spectrum dimensions differ");
  detail::require_weights_valid(spectrum);
  double acc = 0.0;
  for (int j = 0; j < psi.size(); ++j) {
    const double w = spectrum.values[static_cast<size_t>(j)] + 1.0;
    const double p = std::norm(psi(j));
    acc += (sign == 1) ? w * p : p / w;
  }
  return std::sqrt(acc);
}

// Restriction of the system to its first m levels.  The amplitude cap and
// relative bound constants carry over: a bound for the full form bounds its
// restriction.
inline BilinearSystem truncate_system(const BilinearSystem& system, int m) {
  if (m < 1 || m > system.size())
    throw std::invalid_argument("truncation size out of range");
  Spectrum spec(std::vector<double>(system.spectrum.values.begin(),
                                    system.spectrum.values.begin() + m),
                system.spectrum.lower_bound);
  CouplingMatrix coup(system.coupling.entries.topLeftCorner(m, m));
  return BilinearSystem(std::move(spec), std::move(coup), system.r,
                        system.relative_bound_a, system.relative_bound_b);
}

// Operator norm from the +1 scale to the -1 scale: the largest singular value
// of D^{-1/2} A D^{-1/2} with D = diag(lambda_j + 1).
inline double op_norm_pm(const Eigen::MatrixXcd& a, const Spectrum& spectrum) {
  if (a.rows() != a.cols()) throw std::invalid_argument("op_norm_pm needs a square matrix");
  if (a.rows() != spectrum.size())
    throw std::invalid_argument("matrix and spectrum dimensions differ");
  if (a.rows() == 0) return 0.0;
  detail::require_weights_valid(spectrum);
  Eigen::VectorXd dinv(a.rows());
  for (int j = 0; j < a.rows(); ++j)
    dinv(j) = 1.0 / std::sqrt(spectrum.values[static_cast<size_t>(j)] + 1.0);
  const Eigen::MatrixXcd weighted = dinv.asDiagonal() * a * dinv.asDiagonal();
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(weighted);
  return svd.singularValues()(0);
}

}  // namespace qsteer
