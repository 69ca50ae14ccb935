// Copyright 2026 The ojump Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ojump/error.hpp"
#include "ojump/fft.hpp"
#include "ojump/grid.hpp"
#include "ojump/noise.hpp"

namespace ojump {

/// Which decoherence kernel the master equation uses.
enum class DecoherenceForm {
  /// g_periodic(x - y) built from the full correlation kernel
  general_kernel,
  /// A^2 (x - y)^2 / 2 with the displacement folded to the principal image
  quadratic,
};

/// Strang stepper for
///   d rho/dt = (i hbar / 2m)(d_x^2 - d_y^2) rho - g(x - y) rho / hbar^2.
/// Immutable after construction: the decoherence factor table and kinetic
/// phases are precomputed once.
class MasterStepper {
 public:
  MasterStepper(const PhysicalConstants& constants, const NoiseModel& model, const SpatialGrid& grid, double dt,
                DecoherenceForm form, bool freeze_kinetic = false)
      : constants_(constants), model_(model), grid_(grid), dt_(dt), form_(form), freeze_kinetic_(freeze_kinetic) {
    constants.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    if (grid.size() > kMaxDensityPoints) throw Error(ErrorKind::GridTooLarge, "master grid exceeds dense limit");

    const auto n = grid.ssize();
    // g depends only on (i - j) mod n on the periodic grid
    Eigen::VectorXd g_lag(n);
    for (Eigen::Index k = 0; k < n; ++k) g_lag[k] = decoherence_kernel(static_cast<double>(k) * grid.spacing());
    const double rate = 0.5 * dt / (constants.hbar * constants.hbar);
    half_factor_.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) half_factor_(i, j) = std::exp(-g_lag[(i - j + n) % n] * rate);
    }

    const Eigen::VectorXd k = grid.wavenumbers();
    kinetic_phase_.resize(n);
    for (Eigen::Index q = 0; q < n; ++q) {
      kinetic_phase_[q] = std::exp(complex(0.0, -constants.hbar * k[q] * k[q] * dt / (2.0 * constants.mass)));
    }
  }

  /// The g actually applied at displacement r.
  [[nodiscard]] double decoherence_kernel(double r) const {
    if (form_ == DecoherenceForm::quadratic) {
      const double d = grid_.fold(r);
      return 0.5 * model_.a_squared() * d * d;
    }
    return model_.g_periodic(r, grid_.length());
  }

  [[nodiscard]] const PhysicalConstants& constants() const noexcept { return constants_; }
  [[nodiscard]] const NoiseModel& model() const noexcept { return model_; }
  [[nodiscard]] const SpatialGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] DecoherenceForm form() const noexcept { return form_; }
  [[nodiscard]] bool kinetic_frozen() const noexcept { return freeze_kinetic_; }
  /// exp(-g(x_i - y_j) dt / (2 hbar^2))
  [[nodiscard]] const Eigen::MatrixXd& half_step_factor() const noexcept { return half_factor_; }
  /// exp(-i hbar k^2 dt / 2m) in FFT order
  [[nodiscard]] const Eigen::VectorXcd& kinetic_phase() const noexcept { return kinetic_phase_; }

  void apply_decoherence_half(Eigen::MatrixXcd& kernel) const { kernel.array() *= half_factor_.array().cast<complex>(); }

  /// rho <- U rho U^dagger with U the free propagator over dt.
  void apply_kinetic(Eigen::MatrixXcd& kernel, Fft& fft) const {
    if (freeze_kinetic_) return;
    fft.apply_spectral_columns(kernel, kinetic_phase_);
    kernel.adjointInPlace();
    fft.apply_spectral_columns(kernel, kinetic_phase_);
    kernel.adjointInPlace();
  }

  void advance(Eigen::MatrixXcd& kernel, Fft& fft) const {
    apply_decoherence_half(kernel);
    apply_kinetic(kernel, fft);
    apply_decoherence_half(kernel);
  }

 private:
  PhysicalConstants constants_;
  NoiseModel model_;
  SpatialGrid grid_;
  double dt_;
  DecoherenceForm form_;
  bool freeze_kinetic_;
  Eigen::MatrixXd half_factor_;
  Eigen::VectorXcd kinetic_phase_;
};

namespace detail {

inline void require_stepper_grid(const DensityMatrix& rho, const MasterStepper& stepper) {
  require_same_grid(rho.grid, stepper.grid());
}

}  // namespace detail

inline DensityMatrix decoherence_half_step(const DensityMatrix& rho, const MasterStepper& stepper) {
  detail::require_stepper_grid(rho, stepper);
  DensityMatrix out = rho;
  stepper.apply_decoherence_half(out.kernel);
  return out;
}

inline DensityMatrix kinetic_step_rho(const DensityMatrix& rho, const MasterStepper& stepper) {
  detail::require_stepper_grid(rho, stepper);
  DensityMatrix out = rho;
  Fft fft;
  stepper.apply_kinetic(out.kernel, fft);
  return out;
}

inline DensityMatrix step_master(const DensityMatrix& rho, const MasterStepper& stepper) {
  detail::require_stepper_grid(rho, stepper);
  DensityMatrix out = rho;
  Fft fft;
  stepper.advance(out.kernel, fft);
  return out;
}

struct MasterSample {
  double t = 0.0;
  double trace = 0.0;
  double purity = 0.0;
  double x_mean = 0.0;
  double p_mean = 0.0;
  double x_var = 0.0;
  double p2 = 0.0;
};

inline MasterSample observe(const DensityMatrix& rho, double t, const PhysicalConstants& constants) {
  MasterSample s;
  s.t = t;
  s.trace = trace(rho);
  s.purity = purity(rho);
  s.x_mean = expectation(rho, Observable::position, constants);
  s.p_mean = expectation(rho, Observable::momentum, constants);
  s.x_var = position_variance(rho);
  s.p2 = expectation(rho, Observable::momentum_squared, constants);
  return s;
}

struct MasterRun {
  std::vector<MasterSample> series;
  DensityMatrix final_rho;
};

struct EvolveOptions {
  /// Samples at steps 0, record_every, 2 record_every, ... and always the last step.
  std::size_t record_every = 1;
  /// Eigenvalue solve at every recorded step; min eig must stay >= -1e-8 max eig.
  bool check_positivity = true;
};

/// Applies step_master n_steps times. Throws DivergenceDetected if the trace
/// drifts by more than 1e-4, a NaN appears, or positivity is lost.
inline MasterRun evolve_master(const DensityMatrix& rho0, const MasterStepper& stepper, std::size_t n_steps,
                               const EvolveOptions& options = {}) {
  detail::require_stepper_grid(rho0, stepper);
  if (options.record_every == 0) throw Error(ErrorKind::InvalidArgument, "record_every must be positive");
  const auto& constants = stepper.constants();
  MasterRun run{{}, rho0};
  const double trace0 = trace(rho0);
  Fft fft;

  auto record = [&](std::size_t step) {
    const double t = static_cast<double>(step) * stepper.dt();
    if (!run.final_rho.kernel.allFinite()) {
      throw Error(ErrorKind::DivergenceDetected, "non-finite density matrix at t = " + std::to_string(t));
    }
    if (options.check_positivity) {
      const auto range = eigenvalue_range(run.final_rho);
      if (range.min < -1e-8 * range.max) {
        throw Error(ErrorKind::DivergenceDetected,
                    "density matrix lost positivity at t = " + std::to_string(t) + " (min eigenvalue " +
                        std::to_string(range.min) + ")");
      }
    }
    run.series.push_back(observe(run.final_rho, t, constants));
  };

  record(0);
  for (std::size_t step = 1; step <= n_steps; ++step) {
    stepper.advance(run.final_rho.kernel, fft);
    const double tr = trace(run.final_rho);
    if (!std::isfinite(tr) || std::abs(tr - trace0) > 1e-4) {
      throw Error(ErrorKind::DivergenceDetected, "trace drifted to " + std::to_string(tr) + " at step " +
                                                     std::to_string(step));
    }
    if (step % options.record_every == 0 || step == n_steps) record(step);
  }
  return run;
}

}  // namespace ojump
