// Copyright 2026 The ojump Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ojump/error.hpp"
#include "ojump/fft.hpp"
#include "ojump/grid.hpp"
#include "ojump/rng.hpp"

namespace ojump {

/// f(r) = amplitude * exp(-r^2 / (2 correlation_length^2))
struct GaussianKernel {
  double amplitude = 1.0;
  double correlation_length = 1.0;
};

/// f sampled at non-negative displacements starting at 0, linearly interpolated,
/// zero beyond the last displacement.
struct TabulatedKernel {
  std::vector<double> displacements;
  std::vector<double> values;
};

/// Spatial covariance f of the white-noise potential. Always even in r.
class CorrelationKernel {
 public:
  static CorrelationKernel gaussian(double amplitude, double correlation_length) {
    if (!std::isfinite(amplitude) || amplitude < 0.0) {
      throw Error(ErrorKind::InvalidKernel, "gaussian amplitude must be finite and non-negative");
    }
    if (!std::isfinite(correlation_length) || correlation_length <= 0.0) {
      throw Error(ErrorKind::InvalidKernel, "correlation length must be finite and positive");
    }
    return CorrelationKernel(GaussianKernel{amplitude, correlation_length});
  }

  static CorrelationKernel tabulated(std::vector<double> displacements, std::vector<double> values) {
    if (displacements.size() != values.size() || displacements.size() < 2) {
      throw Error(ErrorKind::InvalidKernel, "table needs at least two (displacement, f) rows");
    }
    if (displacements.front() != 0.0) {
      throw Error(ErrorKind::InvalidKernel, "table must start at displacement 0");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(displacements[i]) || !std::isfinite(values[i])) {
        throw Error(ErrorKind::InvalidKernel, "table holds a non-finite entry");
      }
      if (i > 0 && !(displacements[i] > displacements[i - 1])) {
        throw Error(ErrorKind::InvalidKernel, "table displacements must increase strictly");
      }
      if (values[i] > values.front()) {
        throw Error(ErrorKind::InvalidKernel, "f(0) must dominate every other table value");
      }
    }
    if (values.front() < 0.0) throw Error(ErrorKind::InvalidKernel, "f(0) must be non-negative");
    return CorrelationKernel(TabulatedKernel{std::move(displacements), std::move(values)});
  }

  double operator()(double r) const {
    r = std::abs(r);
    if (const auto* g = std::get_if<GaussianKernel>(&form_)) {
      const double s = r / g->correlation_length;
      return g->amplitude * std::exp(-0.5 * s * s);
    }
    const auto& t = std::get<TabulatedKernel>(form_);
    if (r > t.displacements.back()) return 0.0;
    const auto it = std::upper_bound(t.displacements.begin(), t.displacements.end(), r);
    if (it == t.displacements.end()) return t.values.back();
    const auto hi = static_cast<std::size_t>(it - t.displacements.begin());
    const auto lo = hi - 1;
    const double u = (r - t.displacements[lo]) / (t.displacements[hi] - t.displacements[lo]);
    return t.values[lo] + u * (t.values[hi] - t.values[lo]);
  }

  /// Displacement beyond which f vanishes identically (infinite for the gaussian form).
  [[nodiscard]] double support() const {
    if (std::holds_alternative<GaussianKernel>(form_)) return std::numeric_limits<double>::infinity();
    return std::get<TabulatedKernel>(form_).displacements.back();
  }

  [[nodiscard]] const std::variant<GaussianKernel, TabulatedKernel>& form() const noexcept { return form_; }

 private:
  explicit CorrelationKernel(std::variant<GaussianKernel, TabulatedKernel> form) : form_(std::move(form)) {}
  std::variant<GaussianKernel, TabulatedKernel> form_;
};

/// Reads a two-column CSV (displacement, f). Blank lines, '#' comments and a
/// non-numeric header row are skipped.
inline CorrelationKernel load_tabulated_kernel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open kernel table " + path.string());
  std::vector<double> r;
  std::vector<double> f;
  std::string line;
  int line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const bool first_row = std::exchange(header_allowed, false);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double a = 0.0;
    double b = 0.0;
    if (!(fields >> a >> b)) {
      if (first_row) continue;
      throw Error(ErrorKind::Io, path.string() + ":" + std::to_string(line_no) + ": expected two numbers");
    }
    r.push_back(a);
    f.push_back(b);
  }
  return CorrelationKernel::tabulated(std::move(r), std::move(f));
}

/// Noise statistics: correlation f, decoherence kernel g(r) = f(0) - f(r), and
/// the small-displacement curvature A^2 = g''(0).
class NoiseModel {
 public:
  NoiseModel(CorrelationKernel f, double a_squared) : f_(std::move(f)), a_squared_(a_squared) {}

  [[nodiscard]] const CorrelationKernel& correlation() const noexcept { return f_; }
  [[nodiscard]] double a_squared() const noexcept { return a_squared_; }
  [[nodiscard]] double f(double r) const { return f_(r); }
  [[nodiscard]] double g(double r) const { return f_(0.0) - f_(r); }

  /// Sum of f over all periodic images r + mL, truncated once image terms drop below 1e-15.
  [[nodiscard]] double f_periodic(double r, double box_length) const {
    double sum = f_(r);
    const double support = f_.support();
    const double tiny = 1e-15 * std::max(1.0, std::abs(f_(0.0)));
    for (int m = 1; m < 100000; ++m) {
      const double shift = m * box_length;
      const double up = f_(r + shift);
      const double down = f_(r - shift);
      sum += up + down;
      const bool beyond_support = std::abs(r + shift) > support && std::abs(r - shift) > support;
      const bool negligible = std::abs(up) < tiny && std::abs(down) < tiny && shift > std::abs(r);
      if (beyond_support || negligible) break;
    }
    return sum;
  }

  [[nodiscard]] double g_periodic(double r, double box_length) const {
    return f_periodic(0.0, box_length) - f_periodic(r, box_length);
  }

 private:
  CorrelationKernel f_;
  double a_squared_;
};

namespace detail {

inline double curvature_from_table(const TabulatedKernel& t) {
  const double f0 = t.values[0];
  const double r1 = t.displacements[1];
  const double g1 = f0 - t.values[1];
  if (t.displacements.size() < 3) return 2.0 * g1 / (r1 * r1);
  // g(r) = a r^2 + c r^4 through the first two off-origin rows; A^2 = 2a.
  const double r2 = t.displacements[2];
  const double g2 = f0 - t.values[2];
  const double det = r1 * r1 * r2 * r2 * (r2 * r2 - r1 * r1);
  const double a = (g1 * std::pow(r2, 4) - g2 * std::pow(r1, 4)) / det;
  return 2.0 * a;
}

}  // namespace detail

/// Derives g and A^2 from f. A^2 = C / l^2 for the gaussian form; tabulated
/// kernels take the curvature from a quadratic-quartic fit at the origin.
inline NoiseModel make_noise_model(const CorrelationKernel& f) {
  double a_squared = 0.0;
  if (const auto* g = std::get_if<GaussianKernel>(&f.form())) {
    a_squared = g->amplitude / (g->correlation_length * g->correlation_length);
  } else {
    a_squared = detail::curvature_from_table(std::get<TabulatedKernel>(f.form()));
  }
  if (!std::isfinite(a_squared) || a_squared < 0.0) {
    throw Error(ErrorKind::InvalidKernel, "kernel curvature at the origin must be non-negative");
  }
  return NoiseModel(f, a_squared);
}

/// f_periodic at the grid displacements k dx, k = 0..n-1.
inline Eigen::VectorXd periodic_kernel_on_grid(const NoiseModel& model, const SpatialGrid& grid) {
  Eigen::VectorXd c(grid.ssize());
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    c[k] = model.f_periodic(static_cast<double>(k) * grid.spacing(), grid.length());
  }
  return c;
}

/// Eigenvalues of the circulant covariance f_periodic(x_i - x_j). Throws
/// NotPositiveDefinite when any is below -1e-6 of the largest; smaller negatives are clamped.
inline Eigen::VectorXd kernel_spectrum(const NoiseModel& model, const SpatialGrid& grid) {
  const Eigen::VectorXd c = periodic_kernel_on_grid(model, grid);
  const Eigen::VectorXcd cc = c.cast<complex>();
  Eigen::VectorXcd spec(cc.size());
  Fft fft;
  fft.forward(cc.data(), spec.data(), cc.size());
  Eigen::VectorXd lambda = spec.real();
  const double top = lambda.maxCoeff();
  const double bottom = lambda.minCoeff();
  if (bottom < -1e-6 * std::max(top, 0.0) || (top <= 0.0 && bottom < 0.0)) {
    throw Error(ErrorKind::NotPositiveDefinite,
                "kernel spectrum on the " + std::to_string(grid.size()) + "-point grid has minimum " +
                    std::to_string(bottom) + " against maximum " + std::to_string(top));
  }
  return lambda.cwiseMax(0.0);
}

inline NoiseModel make_noise_model(const CorrelationKernel& f, const SpatialGrid& grid) {
  NoiseModel model = make_noise_model(f);
  (void)kernel_spectrum(model, grid);
  return model;
}

/// One realization of V(x_i) held constant over a step of width dt.
struct PotentialSample {
  Eigen::VectorXd values;
};

/// Circulant sampler for the stationary Gaussian field with
/// Cov[V(x_i) V(x_j)] = f_periodic(x_i - x_j) / dt.
class PotentialSampler {
 public:
  PotentialSampler(const NoiseModel& model, const SpatialGrid& grid, double dt) : grid_(grid), dt_(dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    const Eigen::VectorXd lambda = kernel_spectrum(model, grid);
    weights_ = (lambda * static_cast<double>(grid.size())).cwiseSqrt();
  }

  [[nodiscard]] const SpatialGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }

  /// Writes one sample into out. Consumes 2n normals from the stream.
  void sample(RandomStream& rng, Fft& fft, Eigen::VectorXd& out) const {
    const auto n = grid_.ssize();
    buffer_.resize(n);
    for (Eigen::Index q = 0; q < n; ++q) {
      const double re = rng.normal();
      const double im = rng.normal();
      buffer_[q] = weights_[q] * complex(re, im);
    }
    fft.inverse_inplace(buffer_);
    out.resize(n);
    const double scale = 1.0 / std::sqrt(dt_);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = buffer_[i].real() * scale;
  }

  [[nodiscard]] PotentialSample sample(RandomStream& rng) const {
    Fft fft;
    PotentialSample s;
    sample(rng, fft, s.values);
    return s;
  }

 private:
  SpatialGrid grid_;
  double dt_;
  Eigen::VectorXd weights_;
  mutable Eigen::VectorXcd buffer_;
};

inline PotentialSample sample_potential(const NoiseModel& model, const SpatialGrid& grid, double dt,
                                        RandomStream& rng) {
  return PotentialSampler(model, grid, dt).sample(rng);
}

struct GeneratorCheck {
  complex empirical;
  double closed_form = 0.0;
  double std_error = 0.0;
  /// |empirical - closed_form| <= 4 std_error
  bool agrees = false;
};

/// Monte Carlo estimate of <exp(i sum V h dx dt)> against the Gaussian closed form
/// exp(-1/2 sum_t sum_ij h_i h_j f_periodic(x_i - x_j) dx^2 dt).
/// Rows of h are time steps, columns are grid nodes.
inline GeneratorCheck check_generator_functional(const NoiseModel& model, const SpatialGrid& grid, double dt,
                                                 const Eigen::MatrixXd& h, std::size_t n_samples,
                                                 RandomStream& rng) {
  if (h.cols() != grid.ssize()) throw Error(ErrorKind::GridMismatch, "test function width differs from grid");
  if (n_samples < 2) throw Error(ErrorKind::InvalidArgument, "need at least two samples");
  if (!h.allFinite()) throw Error(ErrorKind::InvalidArgument, "test function must be finite");
  const double dx = grid.spacing();
  const auto n = grid.ssize();

  const Eigen::VectorXd c = periodic_kernel_on_grid(model, grid);
  double exponent = 0.0;
  for (Eigen::Index t = 0; t < h.rows(); ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (h(t, i) == 0.0) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        exponent += h(t, i) * h(t, j) * c[(i - j + n) % n];
      }
    }
  }
  GeneratorCheck report;
  report.closed_form = std::exp(-0.5 * exponent * dx * dx * dt);

  const PotentialSampler sampler(model, grid, dt);
  Fft fft;
  Eigen::VectorXd v;
  double sum_c = 0.0, sum_s = 0.0, sum_c2 = 0.0, sum_s2 = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    double phase = 0.0;
    for (Eigen::Index t = 0; t < h.rows(); ++t) {
      sampler.sample(rng, fft, v);
      phase += h.row(t).dot(v) * dx * dt;
    }
    const double cs = std::cos(phase);
    const double sn = std::sin(phase);
    sum_c += cs;
    sum_s += sn;
    sum_c2 += cs * cs;
    sum_s2 += sn * sn;
  }
  const double ns = static_cast<double>(n_samples);
  const double mean_c = sum_c / ns;
  const double mean_s = sum_s / ns;
  const double var_c = std::max(0.0, (sum_c2 - ns * mean_c * mean_c) / (ns - 1.0));
  const double var_s = std::max(0.0, (sum_s2 - ns * mean_s * mean_s) / (ns - 1.0));
  report.empirical = complex(mean_c, mean_s);
  report.std_error = std::sqrt((var_c + var_s) / ns);
  report.agrees = std::abs(report.empirical - report.closed_form) <= 4.0 * report.std_error;
  return report;
}

}  // namespace ojump
