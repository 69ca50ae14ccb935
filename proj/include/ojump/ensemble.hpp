// Copyright 2026 The ojump Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ojump/error.hpp"
#include "ojump/fft.hpp"
#include "ojump/grid.hpp"
#include "ojump/noise.hpp"
#include "ojump/rng.hpp"
#include "ojump/unravel.hpp"

namespace ojump {

struct MixtureComponent {
  double weight = 1.0;
  WaveFunction state;
};

/// rho_0 = sum_r p_r psi_r psi_r^*, with orthonormal psi_r and positive weights summing to one.
class MixedInitialState {
 public:
  explicit MixedInitialState(std::vector<MixtureComponent> components) : components_(std::move(components)) {
    if (components_.empty()) throw Error(ErrorKind::InvalidArgument, "mixture needs at least one component");
    double total = 0.0;
    for (const auto& c : components_) {
      if (!(c.weight > 0.0)) throw Error(ErrorKind::InvalidArgument, "mixture weights must be positive");
      detail::require_same_grid(c.state.grid, components_.front().state.grid);
      if (std::abs(norm(c.state) - 1.0) > 1e-8) {
        throw Error(ErrorKind::InvalidArgument, "mixture states must be normalized");
      }
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-10) throw Error(ErrorKind::InvalidArgument, "mixture weights must sum to 1");
    for (std::size_t a = 0; a < components_.size(); ++a) {
      for (std::size_t b = a + 1; b < components_.size(); ++b) {
        if (std::abs(inner_product(components_[a].state, components_[b].state)) > 1e-8) {
          throw Error(ErrorKind::InvalidArgument, "mixture states must be pairwise orthogonal");
        }
      }
    }
  }

  static MixedInitialState pure(const WaveFunction& psi) { return MixedInitialState({{1.0, normalize(psi)}}); }

  [[nodiscard]] const std::vector<MixtureComponent>& components() const noexcept { return components_; }
  [[nodiscard]] const SpatialGrid& grid() const noexcept { return components_.front().state.grid; }

  [[nodiscard]] DensityMatrix density() const {
    DensityMatrix rho(grid());
    for (const auto& c : components_) rho.kernel += c.weight * (c.state.amplitudes * c.state.amplitudes.adjoint());
    return rho;
  }

 private:
  std::vector<MixtureComponent> components_;
};

/// Largest-remainder apportionment of n trajectories to the given weights.
inline std::vector<std::size_t> allocate_trajectories(std::span<const double> weights, std::size_t n) {
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t r = 0; r < weights.size(); ++r) {
    const double exact = weights[r] * static_cast<double>(n);
    counts[r] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[r];
    remainders.emplace_back(exact - std::floor(exact), r);
  }
  // ties go to the earlier component
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n && i < remainders.size(); ++i, ++assigned) ++counts[remainders[i].second];
  return counts;
}

struct EnsembleOptions {
  std::size_t n_trajectories = 1;
  std::uint64_t base_seed = 0;
  /// Global index of the first trajectory; stream seeds derive from (base_seed, index).
  std::uint64_t first_index = 0;
  /// Worker count hint; results do not depend on it.
  unsigned threads = 1;
  /// Grid for the averaged density matrix (same box). Defaults to the trajectory grid.
  std::optional<SpatialGrid> output_grid;
  /// Full trajectory records are kept for this many leading trajectories.
  std::size_t keep_records = 0;
  std::size_t record_every = 0;
};

struct EnsembleResult {
  DensityMatrix averaged_rho;
  std::size_t n_trajectories = 0;
  double mean_jump_count = 0.0;
  double mean_integrated_rate = 0.0;
  /// FNV-1a over the averaged kernel bytes; equal digests mean bit-identical results.
  std::uint64_t digest = 0;
  std::vector<std::size_t> jump_counts{};
  std::vector<double> integrated_rates{};
  std::vector<TrajectoryRecord> records{};
};

inline std::uint64_t digest_of(const DensityMatrix& rho) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(rho.kernel.data());
  const auto count = static_cast<std::size_t>(rho.kernel.size()) * sizeof(complex);
  for (std::size_t i = 0; i < count; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

struct TrajectoryOutcome {
  Eigen::VectorXcd final_state;
  std::size_t jumps = 0;
  double integrated_rate = 0.0;
  std::optional<TrajectoryRecord> record;
};

/// Runs body(worker_state, i) for i in [0, n) on up to `threads` workers, then
/// folds the outcomes in index order so that the result is independent of scheduling.
template <class MakeWorker, class Body>
std::vector<TrajectoryOutcome> run_indexed(std::size_t n, unsigned threads, MakeWorker make_worker, Body body) {
  std::vector<TrajectoryOutcome> outcomes(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    try {
      auto worker = make_worker();
      for (std::size_t i = next++; i < n; i = next++) outcomes[i] = body(worker, i);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = n;
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (count == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return outcomes;
}

inline EnsembleResult reduce(std::vector<TrajectoryOutcome>& outcomes, const SpatialGrid& grid) {
  EnsembleResult result{DensityMatrix(grid)};
  const std::size_t n = outcomes.size();
  result.n_trajectories = n;
  double jumps = 0.0;
  double rates = 0.0;
  for (auto& o : outcomes) {
    result.averaged_rho.kernel.noalias() += o.final_state * o.final_state.adjoint();
    jumps += static_cast<double>(o.jumps);
    rates += o.integrated_rate;
    result.jump_counts.push_back(o.jumps);
    result.integrated_rates.push_back(o.integrated_rate);
    if (o.record) result.records.push_back(std::move(*o.record));
  }
  result.averaged_rho.kernel /= static_cast<double>(n);
  result.mean_jump_count = jumps / static_cast<double>(n);
  result.mean_integrated_rate = rates / static_cast<double>(n);
  result.digest = digest_of(result.averaged_rho);
  return result;
}

/// Component index of every trajectory, by largest-remainder allocation.
inline std::vector<std::size_t> component_of_trajectory(const MixedInitialState& init, std::size_t n) {
  std::vector<double> weights;
  for (const auto& c : init.components()) weights.push_back(c.weight);
  const auto counts = allocate_trajectories(weights, n);
  std::vector<std::size_t> owner;
  owner.reserve(n);
  for (std::size_t r = 0; r < counts.size(); ++r) owner.insert(owner.end(), counts[r], r);
  return owner;
}

inline SpatialGrid output_grid_for(const MixedInitialState& init, const EnsembleOptions& options) {
  const SpatialGrid grid = options.output_grid.value_or(init.grid());
  if (!grid.same_box(init.grid())) throw Error(ErrorKind::GridMismatch, "output grid must share the trajectory box");
  if (grid.size() > kMaxDensityPoints) throw Error(ErrorKind::GridTooLarge, "output grid exceeds dense limit");
  return grid;
}

}  // namespace detail

/// Monte Carlo average of the orthogonal-jump process over the mixture.
inline EnsembleResult run_jump_ensemble(const MixedInitialState& init, const PhysicalConstants& constants,
                                        const NoiseModel& model, double total_time, double dt,
                                        const EnsembleOptions& options, bool jumps_enabled = true) {
  if (options.n_trajectories == 0) throw Error(ErrorKind::InvalidArgument, "n_traj must be at least 1");
  const SpatialGrid out_grid = detail::output_grid_for(init, options);
  const auto owner = detail::component_of_trajectory(init, options.n_trajectories);
  auto make_worker = [&] { return TrajectoryStepper(init.grid(), constants, model.a_squared(), dt, jumps_enabled); };
  auto body = [&](TrajectoryStepper& stepper, std::size_t i) {
    RandomStream rng = RandomStream::for_index(options.base_seed, options.first_index + i);
    const bool keep = i < options.keep_records;
    TrajectoryRecord rec = stepper.run(init.components()[owner[i]].state, total_time, rng,
                                       keep ? options.record_every : 0);
    detail::TrajectoryOutcome o;
    o.jumps = rec.jumps.size();
    o.integrated_rate = rec.integrated_rate;
    o.final_state = resample(rec.final_state, out_grid).amplitudes;
    if (keep) o.record = std::move(rec);
    return o;
  };
  auto outcomes = detail::run_indexed(options.n_trajectories, options.threads, make_worker, body);
  return detail::reduce(outcomes, out_grid);
}

/// Integrates i hbar psi_t = -(hbar^2 / 2m) psi'' + V psi with V resampled every step:
/// half kinetic, potential phase exp(-i V dt / hbar), half kinetic.
class WhiteNoiseStepper {
 public:
  WhiteNoiseStepper(const SpatialGrid& grid, const PhysicalConstants& constants, const NoiseModel& model, double dt)
      : sampler_(model, grid, dt), hbar_(constants.hbar), dt_(dt) {
    constants.validate();
    const Eigen::VectorXd k = grid.wavenumbers();
    half_kinetic_.resize(grid.ssize());
    for (Eigen::Index q = 0; q < k.size(); ++q) {
      half_kinetic_[q] = std::exp(complex(0.0, -constants.hbar * k[q] * k[q] * 0.5 * dt / (2.0 * constants.mass)));
    }
  }

  void step(Eigen::VectorXcd& psi, RandomStream& rng) {
    fft_.apply_spectral(psi, half_kinetic_);
    sampler_.sample(rng, fft_, potential_);
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi[i] *= std::polar(1.0, -potential_[i] * dt_ / hbar_);
    fft_.apply_spectral(psi, half_kinetic_);
  }

  Eigen::VectorXcd run(const WaveFunction& psi0, double total_time, RandomStream& rng) {
    detail::require_same_grid(psi0.grid, sampler_.grid());
    const auto n_steps = static_cast<std::size_t>(std::llround(total_time / dt_));
    Eigen::VectorXcd psi = psi0.amplitudes;
    for (std::size_t s = 0; s < n_steps; ++s) step(psi, rng);
    if (!psi.allFinite()) throw Error(ErrorKind::DivergenceDetected, "non-finite wavefunction");
    return psi;
  }

 private:
  PotentialSampler sampler_;
  double hbar_;
  double dt_;
  Eigen::VectorXcd half_kinetic_;
  Eigen::VectorXd potential_;
  Fft fft_;
};

/// Monte Carlo average of pure states evolved in explicitly sampled white-noise potentials.
inline EnsembleResult run_whitenoise_ensemble(const MixedInitialState& init, const PhysicalConstants& constants,
                                              const NoiseModel& model, double total_time, double dt,
                                              const EnsembleOptions& options) {
  if (options.n_trajectories == 0) throw Error(ErrorKind::InvalidArgument, "n_traj must be at least 1");
  const SpatialGrid out_grid = detail::output_grid_for(init, options);
  const auto owner = detail::component_of_trajectory(init, options.n_trajectories);
  auto make_worker = [&] { return WhiteNoiseStepper(init.grid(), constants, model, dt); };
  auto body = [&](WhiteNoiseStepper& stepper, std::size_t i) {
    RandomStream rng = RandomStream::for_index(options.base_seed, options.first_index + i);
    detail::TrajectoryOutcome o;
    const WaveFunction final_state(init.grid(), stepper.run(init.components()[owner[i]].state, total_time, rng));
    o.final_state = resample(final_state, out_grid).amplitudes;
    return o;
  };
  auto outcomes = detail::run_indexed(options.n_trajectories, options.threads, make_worker, body);
  return detail::reduce(outcomes, out_grid);
}

struct RouteComparison {
  double hs_distance = 0.0;
  std::vector<std::pair<Observable, double>> deltas;
  double purity_delta = 0.0;
};

inline RouteComparison compare_routes(const DensityMatrix& a, const DensityMatrix& b,
                                      std::span<const Observable> observables, const PhysicalConstants& constants = {}) {
  RouteComparison report;
  report.hs_distance = hs_distance(a, b);
  for (const Observable o : observables) {
    report.deltas.emplace_back(o, std::abs(expectation(a, o, constants) - expectation(b, o, constants)));
  }
  report.purity_delta = std::abs(purity(a) - purity(b));
  return report;
}

inline RouteComparison compare_routes(const EnsembleResult& a, const DensityMatrix& b,
                                      std::span<const Observable> observables, const PhysicalConstants& constants = {}) {
  return compare_routes(a.averaged_rho, b, observables, constants);
}

inline RouteComparison compare_routes(const EnsembleResult& a, const EnsembleResult& b,
                                      std::span<const Observable> observables, const PhysicalConstants& constants = {}) {
  return compare_routes(a.averaged_rho, b.averaged_rho, observables, constants);
}

}  // namespace ojump
