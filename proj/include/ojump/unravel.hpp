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
#include "ojump/master.hpp"
#include "ojump/noise.hpp"
#include "ojump/rng.hpp"

namespace ojump {

/// Largest admissible w dt (and A^2 sigma^2 dt / hbar^2) for a single step.
inline constexpr double kMaxStepRate = 0.1;

struct JumpEvent {
  double time = 0.0;
  MomentSet pre_moments;
  double rate_at_jump = 0.0;
};

struct TrajectorySample {
  double t = 0.0;
  double norm = 0.0;
  double x_mean = 0.0;
  double x_var = 0.0;
  double rate = 0.0;
};

struct TrajectoryRecord {
  WaveFunction final_state;
  std::vector<JumpEvent> jumps{};
  std::vector<TrajectorySample> series{};
  /// sum over steps of w_k dt
  double integrated_rate = 0.0;
};

/// Mixing rate w = A^2 sigma^2 / hbar^2.
inline double jump_rate(const MomentSet& m, double a_squared, const PhysicalConstants& constants) {
  return a_squared * m.variance / (constants.hbar * constants.hbar);
}

inline double jump_rate(const WaveFunction& psi, const NoiseModel& model, const PhysicalConstants& constants) {
  if (model.a_squared() == 0.0) return 0.0;
  return jump_rate(moments(psi), model.a_squared(), constants);
}

/// psi -> ((x - x_psi) / sigma_psi) psi. Orthogonal to psi and unit-norm for normalized input.
inline WaveFunction apply_jump(const WaveFunction& psi) {
  const MomentSet m = moments(psi);
  const double inv_sigma = 1.0 / std::sqrt(m.variance);
  WaveFunction out(psi.grid);
  for (Eigen::Index i = 0; i < out.amplitudes.size(); ++i) {
    out.amplitudes[i] = (psi.grid.node(i) - m.x_mean) * inv_sigma * psi.amplitudes[i];
  }
  return out;
}

/// Propagates single wavefunctions under the nonlinear drift
///   d psi/dt = (i hbar / 2m) psi'' - (A^2 / 2 hbar^2)[(x - x_psi)^2 - sigma_psi^2] psi
/// interrupted by orthogonal jumps at rate w. Owns FFT scratch, so one per thread.
class TrajectoryStepper {
 public:
  TrajectoryStepper(const SpatialGrid& grid, const PhysicalConstants& constants, double a_squared, double dt,
                    bool jumps_enabled = true)
      : grid_(grid), constants_(constants), a_squared_(a_squared), dt_(dt), jumps_enabled_(jumps_enabled) {
    constants.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    if (!(a_squared >= 0.0) || !std::isfinite(a_squared)) {
      throw Error(ErrorKind::InvalidArgument, "A^2 must be finite and non-negative");
    }
    const Eigen::VectorXd k = grid.wavenumbers();
    kinetic_phase_.resize(grid.ssize());
    for (Eigen::Index q = 0; q < k.size(); ++q) {
      kinetic_phase_[q] = std::exp(complex(0.0, -constants.hbar * k[q] * k[q] * dt / (2.0 * constants.mass)));
    }
    x_ = grid.nodes();
  }

  [[nodiscard]] const SpatialGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] double a_squared() const noexcept { return a_squared_; }
  [[nodiscard]] bool jumps_enabled() const noexcept { return jumps_enabled_; }
  [[nodiscard]] const PhysicalConstants& constants() const noexcept { return constants_; }

  [[nodiscard]] double rate(const MomentSet& m) const { return jump_rate(m, a_squared_, constants_); }

  /// One Strang drift step in place, followed by renormalization. Returns the
  /// norm deviation |‖psi‖ - 1| seen before renormalizing.
  double drift(Eigen::VectorXcd& psi) {
    if (a_squared_ == 0.0) {
      fft_.apply_spectral(psi, kinetic_phase_);
      return renormalize(psi);
    }
    return drift_from(psi, moments_of(psi));
  }

  /// Same as drift() with the moments of psi already known.
  double drift_from(Eigen::VectorXcd& psi, const MomentSet& start) {
    if (a_squared_ == 0.0) return drift(psi);
    half_drift(psi, start);
    fft_.apply_spectral(psi, kinetic_phase_);
    half_drift(psi, moments_of(psi));
    return renormalize(psi);
  }

  /// Bernoulli jump with probability w dt (jump first), then drift. Returns the rate used.
  struct StepResult {
    bool jumped = false;
    double rate = 0.0;
    MomentSet pre_moments;
  };

  StepResult step(Eigen::VectorXcd& psi, RandomStream& rng) {
    StepResult result;
    const double u = rng.uniform();
    if (a_squared_ == 0.0) {
      drift(psi);
      return result;
    }
    result.pre_moments = moments_of(psi);
    result.rate = rate(result.pre_moments);
    if (result.rate * dt_ > kMaxStepRate) {
      throw Error(ErrorKind::StepTooCoarse, "w dt = " + std::to_string(result.rate * dt_) + " exceeds " +
                                                std::to_string(kMaxStepRate));
    }
    if (jumps_enabled_ && u < result.rate * dt_) {
      result.jumped = true;
      const double inv_sigma = 1.0 / std::sqrt(result.pre_moments.variance);
      for (Eigen::Index i = 0; i < psi.size(); ++i) psi[i] *= (x_[i] - result.pre_moments.x_mean) * inv_sigma;
      drift(psi);
    } else {
      drift_from(psi, result.pre_moments);
    }
    return result;
  }

  /// Runs round(T / dt) steps. record_every == 0 disables the observable series.
  TrajectoryRecord run(const WaveFunction& psi0, double total_time, RandomStream& rng, std::size_t record_every = 0) {
    detail::require_same_grid(psi0.grid, grid_);
    const auto n_steps = static_cast<std::size_t>(std::llround(total_time / dt_));
    TrajectoryRecord record{psi0, {}, {}, 0.0};
    Eigen::VectorXcd& psi = record.final_state.amplitudes;
    auto sample = [&](std::size_t step) {
      const double t = static_cast<double>(step) * dt_;
      const MomentSet m = moments_of(psi);
      record.series.push_back({t, std::sqrt(psi.squaredNorm() * grid_.spacing()), m.x_mean, m.variance, rate(m)});
    };
    if (record_every > 0) sample(0);
    for (std::size_t step = 1; step <= n_steps; ++step) {
      const StepResult r = step_and_check(psi, rng);
      record.integrated_rate += r.rate * dt_;
      if (r.jumped) record.jumps.push_back({static_cast<double>(step - 1) * dt_, r.pre_moments, r.rate});
      if (record_every > 0 && (step % record_every == 0 || step == n_steps)) sample(step);
    }
    return record;
  }

 private:
  StepResult step_and_check(Eigen::VectorXcd& psi, RandomStream& rng) {
    StepResult r = step(psi, rng);
    if (!psi.allFinite()) throw Error(ErrorKind::DivergenceDetected, "non-finite wavefunction");
    return r;
  }

  MomentSet moments_of(const Eigen::VectorXcd& psi) const {
    return moments(WaveFunction(grid_, psi));
  }

  void half_drift(Eigen::VectorXcd& psi, const MomentSet& m) const {
    const double c = -0.25 * a_squared_ * dt_ / (constants_.hbar * constants_.hbar);
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      const double d = x_[i] - m.x_mean;
      psi[i] *= std::exp(c * (d * d - m.variance));
    }
  }

  double renormalize(Eigen::VectorXcd& psi) const {
    const double n = std::sqrt(psi.squaredNorm() * grid_.spacing());
    if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorKind::DivergenceDetected, "wavefunction norm collapsed");
    psi /= n;
    return std::abs(n - 1.0);
  }

  SpatialGrid grid_;
  PhysicalConstants constants_;
  double a_squared_;
  double dt_;
  bool jumps_enabled_;
  Eigen::VectorXcd kinetic_phase_;
  Eigen::VectorXd x_;
  Fft fft_;
};

/// Drift-only step of a single state; see TrajectoryStepper::drift.
inline WaveFunction nonlinear_drift_step(const WaveFunction& psi, const PhysicalConstants& constants,
                                         const NoiseModel& model, double dt) {
  TrajectoryStepper stepper(psi.grid, constants, model.a_squared(), dt, false);
  WaveFunction out = psi;
  stepper.drift(out.amplitudes);
  return out;
}

struct StepOutcome {
  WaveFunction state;
  bool jumped = false;
  double rate = 0.0;
};

inline StepOutcome step_trajectory(const WaveFunction& psi, const PhysicalConstants& constants,
                                   const NoiseModel& model, double dt, RandomStream& rng) {
  TrajectoryStepper stepper(psi.grid, constants, model.a_squared(), dt);
  StepOutcome out{psi, false, 0.0};
  const auto r = stepper.step(out.state.amplitudes, rng);
  out.jumped = r.jumped;
  out.rate = r.rate;
  return out;
}

inline TrajectoryRecord run_trajectory(const WaveFunction& psi0, const PhysicalConstants& constants,
                                       const NoiseModel& model, double total_time, double dt, RandomStream& rng,
                                       std::size_t record_every = 0, bool jumps_enabled = true) {
  TrajectoryStepper stepper(psi0.grid, constants, model.a_squared(), dt, jumps_enabled);
  return stepper.run(psi0, total_time, rng, record_every);
}

/// One-step split of the pure state into a dominant and a contaminating branch.
struct DecompositionReport {
  double epsilon = 0.0;
  double mixing_rate = 0.0;
  WaveFunction dominant;
  WaveFunction contaminating;
  double dominant_norm = 0.0;
  double contaminating_norm = 0.0;
  /// |<dominant, contaminating>|
  double overlap = 0.0;
  /// HS distance between the two-branch reconstruction and one quadratic master step
  double reconstruction_error = 0.0;
};

/// Builds the first-order branches
///   dominant      = {1 - (eps A^2 / 2 hbar^2)[(x - x_psi)^2 - sigma^2] + i (eps hbar / 2m) d_x^2} psi
///   contaminating = ((x - x_psi) / sigma + eps A^2 a^3 / (2 hbar^2 sigma)) psi
/// and compares (1 - eps w) dom dom^* + eps w cont cont^* with step_master at dt = eps.
inline DecompositionReport decompose_step(const WaveFunction& psi, double epsilon, const NoiseModel& model,
                                          const PhysicalConstants& constants) {
  constants.validate();
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  const MomentSet m = moments(psi);
  const double hbar2 = constants.hbar * constants.hbar;
  const double a2 = model.a_squared();
  const double w = a2 * m.variance / hbar2;
  if (epsilon * w > 0.01) {
    throw Error(ErrorKind::StepTooCoarse, "eps w = " + std::to_string(epsilon * w) + " exceeds 0.01");
  }
  const double sigma = std::sqrt(m.variance);
  const auto& grid = psi.grid;
  const auto n = grid.ssize();

  Eigen::VectorXcd laplacian = psi.amplitudes;
  {
    const Eigen::VectorXd k = grid.wavenumbers();
    Eigen::VectorXcd mult(n);
    for (Eigen::Index q = 0; q < n; ++q) mult[q] = -k[q] * k[q];
    Fft fft;
    fft.apply_spectral(laplacian, mult);
  }

  DecompositionReport report{epsilon, w, WaveFunction(grid), WaveFunction(grid)};
  const double damp = epsilon * a2 / (2.0 * hbar2);
  const complex kin(0.0, epsilon * constants.hbar / (2.0 * constants.mass));
  const double shift = damp * m.third_central / sigma;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = grid.node(i) - m.x_mean;
    report.dominant.amplitudes[i] = (1.0 - damp * (d * d - m.variance)) * psi.amplitudes[i] + kin * laplacian[i];
    report.contaminating.amplitudes[i] = (d / sigma + shift) * psi.amplitudes[i];
  }
  report.dominant_norm = norm(report.dominant);
  report.contaminating_norm = norm(report.contaminating);
  report.overlap = std::abs(inner_product(report.dominant, report.contaminating));

  const Eigen::VectorXcd& dom = report.dominant.amplitudes;
  const Eigen::VectorXcd& con = report.contaminating.amplitudes;
  const DensityMatrix rebuilt(grid, (1.0 - epsilon * w) * (dom * dom.adjoint()) + epsilon * w * (con * con.adjoint()));
  const MasterStepper stepper(constants, model, grid, epsilon, DecoherenceForm::quadratic);
  report.reconstruction_error = hs_distance(rebuilt, step_master(pure_density(psi), stepper));
  return report;
}

}  // namespace ojump
