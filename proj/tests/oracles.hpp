// oracles.hpp — independent reference implementations used only by tests.
//
// Everything here deliberately avoids the code paths it is used to check:
// the matrix exponential is Taylor scaling-and-squaring (no eigensolver), the
// weighted operator norm is a randomized sup with alternating ascent (no SVD),
// connectivity is union-find (no BFS), and the interaction eigenvalues come
// from a finite-difference grid (no secular equation).
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include <qsteer/core.hpp>

namespace oracle {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using qsteer::complexd;

// Matrix exponential by Taylor series with scaling and squaring.
inline MatrixXcd expm_taylor(const MatrixXcd& a) {
  const auto n = a.rows();
  double nrm = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) nrm = std::max(nrm, a.row(i).cwiseAbs().sum());
  int s = 0;
  while (nrm > 0.5) {
    nrm *= 0.5;
    ++s;
  }
  const MatrixXcd x = a / std::pow(2.0, s);
  MatrixXcd term = MatrixXcd::Identity(n, n);
  MatrixXcd acc = MatrixXcd::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = term * x / static_cast<double>(k);
    acc += term;
    if (term.cwiseAbs().maxCoeff() < 1e-20) break;
  }
  for (int i = 0; i < s; ++i) acc = acc * acc;
  return acc;
}

// Sup of |<psi, A phi>| / (|psi|_+ |phi|_+) over random pairs, refined by
// alternating ascent from the best sample (the ascent step is the exact
// maximizer over one argument with the other fixed, so the refined value
// converges to the true sup instead of the undershoot raw sampling gives).
inline double weighted_opnorm_sup(const MatrixXcd& a, const qsteer::Spectrum& spectrum,
                                  int pairs, unsigned seed) {
  const auto n = a.rows();
  VectorXd dinv(n);
  for (Eigen::Index j = 0; j < n; ++j) dinv(j) = 1.0 / std::sqrt(spectrum.values[j] + 1.0);
  const MatrixXcd m = dinv.asDiagonal() * a * dinv.asDiagonal();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_unit = [&]() {
    VectorXcd v(n);
    for (Eigen::Index j = 0; j < n; ++j) v(j) = complexd(gauss(rng), gauss(rng));
    return VectorXcd(v / v.norm());
  };

  VectorXcd best = random_unit();
  double best_val = (m * best).norm();
  for (int p = 1; p < pairs; ++p) {
    const VectorXcd x = random_unit();
    const VectorXcd y = random_unit();
    if (std::abs(complexd(y.adjoint() * (m * x))) > best_val * 1e-2) {
      const double v = (m * x).norm();
      if (v > best_val) {
        best_val = v;
        best = x;
      }
    }
  }
  VectorXcd x = best;
  for (int it = 0; it < 500; ++it) {
    VectorXcd y = m * x;
    const double ny = y.norm();
    if (ny == 0.0) return 0.0;
    y /= ny;
    x = m.adjoint() * y;
    const double nx = x.norm();
    if (nx == 0.0) return 0.0;
    x /= nx;
  }
  return (m * x).norm();
}

// Union-find over 1-based vertices.
struct UnionFind {
  std::vector<int> parent;

  explicit UnionFind(int n) : parent(static_cast<size_t>(n) + 1) {
    for (int i = 0; i <= n; ++i) parent[static_cast<size_t>(i)] = i;
  }

  int find(int v) {
    while (parent[static_cast<size_t>(v)] != v) {
      parent[static_cast<size_t>(v)] = parent[static_cast<size_t>(parent[static_cast<size_t>(v)])];
      v = parent[static_cast<size_t>(v)];
    }
    return v;
  }

  void unite(int u, int v) { parent[static_cast<size_t>(find(u))] = find(v); }

  bool connected(int n) {
    if (n <= 1) return true;
    const int root = find(1);
    for (int v = 2; v <= n; ++v)
      if (find(v) != root) return false;
    return true;
  }
};

// Number of eigenvalues of the symmetric tridiagonal (diag, off) strictly
// below x, by the Sturm sequence.
inline int sturm_count_below(const std::vector<double>& diag, const std::vector<double>& off,
                             double x) {
  int count = 0;
  double q = 1.0;
  for (size_t k = 0; k < diag.size(); ++k) {
    const double e2 = (k == 0) ? 0.0 : off[k - 1] * off[k - 1];
    q = diag[k] - x - e2 / q;
    if (q == 0.0) q = 1e-300;
    if (q < 0.0) ++count;
  }
  return count;
}

// Lowest `count` eigenvalues of a symmetric tridiagonal matrix by bisection.
inline std::vector<double> tridiag_lowest_eigs(const std::vector<double>& diag,
                                               const std::vector<double>& off, int count) {
  double lo = diag[0], hi = diag[0];
  for (size_t k = 0; k < diag.size(); ++k) {
    const double radius = ((k > 0) ? std::abs(off[k - 1]) : 0.0) +
                          ((k + 1 < diag.size()) ? std::abs(off[k]) : 0.0);
    lo = std::min(lo, diag[k] - radius);
    hi = std::max(hi, diag[k] + radius);
  }
  std::vector<double> eigs;
  for (int idx = 1; idx <= count; ++idx) {
    double a = lo, b = hi;
    for (int it = 0; it < 200 && (b - a) > 1e-12 * std::max(1.0, std::abs(b)); ++it) {
      const double mid = 0.5 * (a + b);
      if (sturm_count_below(diag, off, mid) >= idx)
        b = mid;
      else
        a = mid;
    }
    eigs.push_back(0.5 * (a + b));
  }
  return eigs;
}

// Finite-difference eigenvalues of -psi'' + eta * delta(x - c) * psi on (0, 1)
// with Dirichlet ends.  The grid is chosen so that c falls on a node; the
// delta becomes a single diagonal spike of weight eta / h.
inline std::vector<double> fd_delta_box_levels(double eta, double c, int nodes, int count) {
  const double h = 1.0 / (nodes + 1);
  const double ic_real = c * (nodes + 1);
  const int ic = static_cast<int>(std::lround(ic_real));
  if (std::abs(ic_real - ic) > 1e-9)
    throw std::invalid_argument("interaction position must fall on a grid node");
  std::vector<double> diag(static_cast<size_t>(nodes), 2.0 / (h * h));
  std::vector<double> off(static_cast<size_t>(nodes) - 1, -1.0 / (h * h));
  diag[static_cast<size_t>(ic) - 1] += eta / h;
  return tridiag_lowest_eigs(diag, off, count);
}

// Closed-form flip probability for a constant two-level drive:
// H = [[0, v], [conj(v), delta]] sends e_1 to e_2 with probability
// (4|v|^2 / (4|v|^2 + delta^2)) sin^2(sqrt(4|v|^2 + delta^2) t / 2).
inline double rabi_flip_probability(double v_abs, double delta, double t) {
  const double omega = std::sqrt(4.0 * v_abs * v_abs + delta * delta);
  if (omega == 0.0) return 0.0;
  const double s = std::sin(0.5 * omega * t);
  return (4.0 * v_abs * v_abs / (omega * omega)) * s * s;
}

// Exact 2x2 unitary exp(-i H t) for Hermitian H, via the Pauli decomposition.
inline Eigen::Matrix2cd two_level_exponential(const Eigen::Matrix2cd& h, double t) {
  const complexd iunit(0.0, 1.0);
  const double a = 0.5 * (h(0, 0).real() + h(1, 1).real());
  const double vx = h(0, 1).real();
  const double vy = -h(0, 1).imag();
  const double vz = 0.5 * (h(0, 0).real() - h(1, 1).real());
  const double vn = std::sqrt(vx * vx + vy * vy + vz * vz);
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity() * std::cos(vn * t);
  if (vn > 0.0) {
    Eigen::Matrix2cd pauli;
    pauli << complexd(vz, 0.0), complexd(vx, -vy), complexd(vx, vy), complexd(-vz, 0.0);
    u -= iunit * (std::sin(vn * t) / vn) * pauli;
  }
  return std::exp(-iunit * a * t) * u;
}

// Coefficients (c0, c1, c2) of the quadratic through three points, solved in a
// rescaled variable to keep the Vandermonde system well conditioned.
inline std::array<double, 3> fit_quadratic(const std::array<double, 3>& xs,
                                           const std::array<double, 3>& ys) {
  const double s = std::max({std::abs(xs[0]), std::abs(xs[1]), std::abs(xs[2])});
  Eigen::Matrix3d v;
  Eigen::Vector3d rhs;
  for (int i = 0; i < 3; ++i) {
    const double u = xs[static_cast<size_t>(i)] / s;
    v(i, 0) = 1.0;
    v(i, 1) = u;
    v(i, 2) = u * u;
    rhs(i) = ys[static_cast<size_t>(i)];
  }
  const Eigen::Vector3d sol = v.fullPivLu().solve(rhs);
  return {sol(0), sol(1) / s, sol(2) / (s * s)};
}

}  // namespace oracle
