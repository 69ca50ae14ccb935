// Copyright 2026 The ojump Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

#include "ojump/error.hpp"
#include "ojump/fft.hpp"

namespace ojump {

/// Dense density matrices are limited to this many grid points per axis.
inline constexpr std::size_t kMaxDensityPoints = 512;

struct PhysicalConstants {
  double hbar = 1.0;
  double mass = 1.0;

  void validate() const {
    if (!(std::isfinite(hbar) && hbar > 0.0) || !(std::isfinite(mass) && mass > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "hbar and mass must be finite and positive");
    }
  }
};

/// Uniform periodic grid: x_i = x_min + i dx, dx = (x_max - x_min) / n. Node n wraps to node 0.
class SpatialGrid {
 public:
  SpatialGrid(std::size_t n_points, double x_min, double x_max)
      : n_(n_points), x_min_(x_min), x_max_(x_max) {
    if (n_points == 0 || (n_points & (n_points - 1)) != 0) {
      throw Error(ErrorKind::NonPowerOfTwo,
                  "grid size " + std::to_string(n_points) + " is not a power of two");
    }
    if (n_points < 8) {
      throw Error(ErrorKind::InvalidGrid, "grid needs at least 8 points");
    }
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min)) {
      throw Error(ErrorKind::InvalidGrid, "grid requires finite x_min < x_max");
    }
    dx_ = (x_max - x_min) / static_cast<double>(n_points);
  }

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] Eigen::Index ssize() const noexcept { return static_cast<Eigen::Index>(n_); }
  [[nodiscard]] double x_min() const noexcept { return x_min_; }
  [[nodiscard]] double x_max() const noexcept { return x_max_; }
  [[nodiscard]] double length() const noexcept { return x_max_ - x_min_; }
  [[nodiscard]] double spacing() const noexcept { return dx_; }
  [[nodiscard]] double node(Eigen::Index i) const noexcept {
    return x_min_ + static_cast<double>(i) * dx_;
  }

  [[nodiscard]] Eigen::VectorXd nodes() const {
    Eigen::VectorXd x(ssize());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = node(i);
    return x;
  }

  /// Angular wavenumbers in FFT order; the Nyquist entry is negative.
  [[nodiscard]] Eigen::VectorXd wavenumbers() const {
    const double dk = 2.0 * std::numbers::pi / length();
    const auto n = ssize();
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      k[i] = dk * static_cast<double>(i < n / 2 ? i : i - n);
    }
    return k;
  }

  /// Maps a displacement onto its principal periodic image in [-L/2, L/2).
  [[nodiscard]] double fold(double r) const noexcept {
    const double len = length();
    return r - len * std::floor(r / len + 0.5);
  }

  [[nodiscard]] bool same_box(const SpatialGrid& other) const noexcept {
    return x_min_ == other.x_min_ && x_max_ == other.x_max_;
  }

  friend bool operator==(const SpatialGrid&, const SpatialGrid&) = default;

 private:
  std::size_t n_;
  double x_min_;
  double x_max_;
  double dx_ = 0.0;
};

inline SpatialGrid build_grid(std::size_t n_points, double x_min, double x_max) {
  return SpatialGrid(n_points, x_min, x_max);
}

struct WaveFunction {
  SpatialGrid grid;
  Eigen::VectorXcd amplitudes;

  explicit WaveFunction(const SpatialGrid& g) : grid(g), amplitudes(Eigen::VectorXcd::Zero(g.ssize())) {}
  WaveFunction(const SpatialGrid& g, Eigen::VectorXcd values) : grid(g), amplitudes(std::move(values)) {
    if (amplitudes.size() != grid.ssize()) {
      throw Error(ErrorKind::GridMismatch, "amplitude count differs from grid size");
    }
  }
};

struct DensityMatrix {
  SpatialGrid grid;
  /// kernel(i, j) = rho(x_i, y_j)
  Eigen::MatrixXcd kernel;

  explicit DensityMatrix(const SpatialGrid& g) : DensityMatrix(g, Eigen::MatrixXcd::Zero(g.ssize(), g.ssize())) {}
  DensityMatrix(const SpatialGrid& g, Eigen::MatrixXcd values) : grid(g), kernel(std::move(values)) {
    if (grid.size() > kMaxDensityPoints) {
      throw Error(ErrorKind::GridTooLarge, "dense density matrices are limited to " +
                                               std::to_string(kMaxDensityPoints) + " points");
    }
    if (kernel.rows() != grid.ssize() || kernel.cols() != grid.ssize()) {
      throw Error(ErrorKind::GridMismatch, "kernel shape differs from grid size");
    }
  }
};

struct MomentSet {
  double x_mean = 0.0;
  double variance = 0.0;
  double third_central = 0.0;
};

namespace detail {

inline void require_same_grid(const SpatialGrid& a, const SpatialGrid& b) {
  if (!(a == b)) throw Error(ErrorKind::GridMismatch, "operands live on different grids");
}

}  // namespace detail

inline double norm_squared(const WaveFunction& psi) {
  return psi.amplitudes.squaredNorm() * psi.grid.spacing();
}

inline double norm(const WaveFunction& psi) { return std::sqrt(norm_squared(psi)); }

inline WaveFunction normalize(const WaveFunction& psi) {
  const double n = norm(psi);
  if (!(n >= 1e-300)) throw Error(ErrorKind::ZeroNorm, "cannot normalize a state of zero norm");
  return WaveFunction(psi.grid, psi.amplitudes / n);
}

inline complex inner_product(const WaveFunction& a, const WaveFunction& b) {
  detail::require_same_grid(a.grid, b.grid);
  return a.amplitudes.dot(b.amplitudes) * a.grid.spacing();
}

/// Position moments of |psi|^2. The weights are divided by the norm so that the
/// first central moment vanishes to roundoff even for slightly unnormalized input.
inline MomentSet moments(const WaveFunction& psi) {
  const double dx = psi.grid.spacing();
  const auto n = psi.grid.ssize();
  double total = 0.0;
  double first = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = std::norm(psi.amplitudes[i]);
    total += w;
    first += w * psi.grid.node(i);
  }
  if (!(total * dx > 0.0)) throw Error(ErrorKind::ZeroNorm, "moments of a zero state");
  MomentSet m;
  m.x_mean = first / total;
  double second = 0.0;
  double third = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = std::norm(psi.amplitudes[i]);
    const double d = psi.grid.node(i) - m.x_mean;
    second += w * d * d;
    third += w * d * d * d;
  }
  m.variance = second / total;
  m.third_central = third / total;
  if (!(m.variance >= 1e-12)) {
    throw Error(ErrorKind::DegenerateState, "position variance below 1e-12");
  }
  return m;
}

/// Minimum-uncertainty packet with |psi|^2 of variance sigma2 and mean momentum hbar*k0.
inline WaveFunction gaussian_packet(const SpatialGrid& grid, double center, double sigma2, double k0 = 0.0) {
  if (!(sigma2 > 0.0)) throw Error(ErrorKind::InvalidArgument, "packet variance must be positive");
  Eigen::VectorXcd a(grid.ssize());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = grid.node(i) - center;
    a[i] = std::exp(complex(-d * d / (4.0 * sigma2), k0 * d));
  }
  return normalize(WaveFunction(grid, std::move(a)));
}

/// Harmonic-oscillator eigenfunction of the given order whose ground state has
/// position variance sigma2. Orders form an orthonormal family on wide grids.
inline WaveFunction hermite_function(const SpatialGrid& grid, int order, double center, double sigma2) {
  if (order < 0) throw Error(ErrorKind::InvalidArgument, "negative Hermite order");
  if (!(sigma2 > 0.0)) throw Error(ErrorKind::InvalidArgument, "Hermite width must be positive");
  Eigen::VectorXcd a(grid.ssize());
  const double scale = 1.0 / std::sqrt(2.0 * sigma2);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double xi = (grid.node(i) - center) * scale;
    double prev = 0.0;
    double cur = std::exp(-0.5 * xi * xi);
    for (int k = 0; k < order; ++k) {
      const double next = std::sqrt(2.0 / (k + 1)) * xi * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
      prev = cur;
      cur = next;
    }
    a[i] = cur;
  }
  return normalize(WaveFunction(grid, std::move(a)));
}

/// Band-limited interpolation of psi onto another power-of-two grid over the same box.
/// Nyquist modes are dropped.
inline WaveFunction resample(const WaveFunction& psi, const SpatialGrid& target) {
  if (psi.grid == target) return psi;
  if (!psi.grid.same_box(target)) throw Error(ErrorKind::GridMismatch, "resampling needs the same box");
  const auto ns = psi.grid.ssize();
  const auto nt = target.ssize();
  Fft fft;
  Eigen::VectorXcd spec(ns);
  fft.forward(psi.amplitudes.data(), spec.data(), ns);
  Eigen::VectorXcd out_spec = Eigen::VectorXcd::Zero(nt);
  const Eigen::Index keep = std::min(ns, nt) / 2;
  const double scale = static_cast<double>(nt) / static_cast<double>(ns);
  for (Eigen::Index q = 0; q < keep; ++q) out_spec[q] = spec[q] * scale;
  for (Eigen::Index q = 1; q < keep; ++q) out_spec[nt - q] = spec[ns - q] * scale;
  Eigen::VectorXcd out(nt);
  fft.inverse(out_spec.data(), out.data(), nt);
  return WaveFunction(target, std::move(out));
}

inline DensityMatrix pure_density(const WaveFunction& psi) {
  return DensityMatrix(psi.grid, psi.amplitudes * psi.amplitudes.adjoint());
}

inline double trace(const DensityMatrix& rho) {
  return rho.kernel.diagonal().real().sum() * rho.grid.spacing();
}

inline double purity(const DensityMatrix& rho) {
  const double dx = rho.grid.spacing();
  return rho.kernel.squaredNorm() * dx * dx;
}

inline double hs_distance(const DensityMatrix& a, const DensityMatrix& b) {
  detail::require_same_grid(a.grid, b.grid);
  return (a.kernel - b.kernel).norm() * a.grid.spacing();
}

/// Largest elementwise |rho(x,y) - conj(rho(y,x))|.
inline double hermiticity_error(const DensityMatrix& rho) {
  return (rho.kernel - rho.kernel.adjoint()).cwiseAbs().maxCoeff();
}

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};

/// Extreme eigenvalues of the operator represented by the kernel (kernel * dx), hermitian part.
inline EigenRange eigenvalue_range(const DensityMatrix& rho) {
  const Eigen::MatrixXcd op = 0.5 * (rho.kernel + rho.kernel.adjoint()) * rho.grid.spacing();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(op, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

enum class Observable { position, position_squared, momentum, momentum_squared };

inline std::string_view to_string(Observable o) {
  switch (o) {
    case Observable::position: return "x";
    case Observable::position_squared: return "x2";
    case Observable::momentum: return "p";
    case Observable::momentum_squared: return "p2";
  }
  return "?";
}

inline Observable parse_observable(std::string_view name) {
  if (name == "x" || name == "position") return Observable::position;
  if (name == "x2" || name == "position2") return Observable::position_squared;
  if (name == "p" || name == "momentum") return Observable::momentum;
  if (name == "p2" || name == "momentum2") return Observable::momentum_squared;
  throw Error(ErrorKind::UnknownObservable, "no observable named '" + std::string(name) + "'");
}

/// Expectation value read off the kernel. Position moments use the diagonal;
/// momentum moments differentiate rho(x, y) spectrally in x and evaluate at y = x.
inline double expectation(const DensityMatrix& rho, Observable observable,
                          const PhysicalConstants& constants = {}) {
  const double dx = rho.grid.spacing();
  const auto n = rho.grid.ssize();
  switch (observable) {
    case Observable::position:
    case Observable::position_squared: {
      const int power = observable == Observable::position ? 1 : 2;
      double sum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        sum += std::pow(rho.grid.node(i), power) * rho.kernel(i, i).real();
      }
      return sum * dx;
    }
    case Observable::momentum:
    case Observable::momentum_squared: {
      const Eigen::VectorXd k = rho.grid.wavenumbers();
      Eigen::VectorXcd multiplier(n);
      const double hbar = constants.hbar;
      for (Eigen::Index q = 0; q < n; ++q) {
        if (observable == Observable::momentum) {
          // -i hbar d/dx -> hbar k; odd derivative drops the Nyquist mode
          multiplier[q] = q == n / 2 ? 0.0 : hbar * k[q];
        } else {
          multiplier[q] = hbar * hbar * k[q] * k[q];
        }
      }
      Fft fft;
      Eigen::MatrixXcd derived = rho.kernel;
      fft.apply_spectral_columns(derived, multiplier);
      return derived.diagonal().sum().real() * dx;
    }
  }
  throw Error(ErrorKind::UnknownObservable, "unsupported observable");
}

inline double position_variance(const DensityMatrix& rho) {
  const double dx = rho.grid.spacing();
  const double tr = trace(rho);
  const double mean = expectation(rho, Observable::position) / tr;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < rho.grid.ssize(); ++i) {
    const double d = rho.grid.node(i) - mean;
    sum += d * d * rho.kernel(i, i).real();
  }
  return sum * dx / tr;
}

}  // namespace ojump
