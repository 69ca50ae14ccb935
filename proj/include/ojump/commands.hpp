// Copyright 2026 The ojump Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ojump/config.hpp"
#include "ojump/ensemble.hpp"
#include "ojump/io.hpp"
#include "ojump/master.hpp"
#include "ojump/noise.hpp"
#include "ojump/unravel.hpp"

namespace ojump::cli {

enum ExitCode : int {
  kSuccess = 0,
  kValidationError = 1,
  kToleranceFailure = 2,
  kNumericalDivergence = 3,
};

struct RunContext {
  SimConfig config;
  std::filesystem::path out_dir;
  unsigned threads = 1;
  std::ostream* log = nullptr;
};

/// Files written by a subcommand, in creation order.
class Manifest {
 public:
  std::filesystem::path add(const RunContext& ctx, const std::string& name) {
    files_.push_back(name);
    return ctx.out_dir / name;
  }

  void write(const RunContext& ctx, const std::string& command) const {
    std::ofstream out(ctx.out_dir / "manifest.txt", std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write manifest.txt");
    out << "command = " << command << "\n\n# files\n";
    for (const auto& f : files_) out << f << "\n";
    out << "\n# resolved config\n" << describe(ctx.config);
  }

 private:
  std::vector<std::string> files_;
};

namespace detail {

inline void note(const RunContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << '\n';
}

inline std::string fmt(double v) { return ojump::detail::format_double(v); }

inline MasterRun run_master_reference(const RunContext& ctx, DecoherenceForm form, bool check_positivity = true) {
  const SimConfig& c = ctx.config;
  const SpatialGrid grid = c.density_grid();
  const MasterStepper stepper(c.constants, c.noise_model(), grid, c.dt, form, c.frozen_kinetic);
  return evolve_master(c.initial_state(grid).density(), stepper, c.n_steps(), {c.record_every, check_positivity});
}

inline EnsembleOptions ensemble_options(const RunContext& ctx, std::uint64_t seed) {
  EnsembleOptions o;
  o.n_trajectories = ctx.config.n_traj;
  o.base_seed = seed;
  o.threads = ctx.threads;
  o.output_grid = ctx.config.density_grid();
  return o;
}

inline void write_trajectory_logs(const RunContext& ctx, Manifest& manifest, const EnsembleResult& result) {
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    std::ostringstream stem;
    stem << "trajectory_" << std::setw(3) << std::setfill('0') << i;
    CsvWriter series(manifest.add(ctx, stem.str() + "_observables.csv"), {"t", "norm", "x_mean", "x_var", "rate"});
    for (const auto& s : result.records[i].series) series.row({s.t, s.norm, s.x_mean, s.x_var, s.rate});
    CsvWriter jumps(manifest.add(ctx, stem.str() + "_jumps.csv"), {"t_jump", "rate_at_jump"});
    for (const auto& j : result.records[i].jumps) jumps.row({j.time, j.rate_at_jump});
  }
}

}  // namespace detail

/// Master-equation evolution with the recorded observable series.
inline int command_master(const RunContext& ctx) {
  const SimConfig& c = ctx.config;
  Manifest manifest;
  const MasterRun run = detail::run_master_reference(ctx, c.master_kernel);
  CsvWriter series(manifest.add(ctx, "master_observables.csv"),
                   {"t", "trace", "purity", "x_mean", "p_mean", "x_var", "p2"});
  for (const auto& s : run.series) series.row({s.t, s.trace, s.purity, s.x_mean, s.p_mean, s.x_var, s.p2});
  write_density_binary(manifest.add(ctx, "rho_initial.bin"), c.initial_state(c.density_grid()).density());
  write_density_binary(manifest.add(ctx, "rho_final.bin"), run.final_rho);
  write_density_abs_csv(manifest.add(ctx, "rho_final_abs.csv"), run.final_rho);
  manifest.write(ctx, "master");
  detail::note(ctx, "master: final purity " + detail::fmt(run.series.back().purity));
  return kSuccess;
}

/// Orthogonal-jump ensemble, compared against the quadratic-kernel master equation.
inline int command_jumps(const RunContext& ctx) {
  const SimConfig& c = ctx.config;
  Manifest manifest;
  EnsembleOptions options = detail::ensemble_options(ctx, c.base_seed);
  options.keep_records = 10;
  options.record_every = c.record_every;
  const NoiseModel model = c.noise_model();
  const EnsembleResult result = run_jump_ensemble(c.initial_state(c.trajectory_grid()), c.constants, model,
                                                  c.total_time, c.dt, options, !c.drift_only);
  const MasterRun reference = detail::run_master_reference(ctx, DecoherenceForm::quadratic, false);
  const double hs = hs_distance(result.averaged_rho, reference.final_rho);

  write_density_binary(manifest.add(ctx, "ensemble_rho.bin"), result.averaged_rho);
  CsvWriter stats(manifest.add(ctx, "jump_stats.csv"),
                  {"n_traj", "mean_jump_count", "mean_integrated_rate", "hs_to_reference"});
  stats.row({static_cast<double>(result.n_trajectories), result.mean_jump_count, result.mean_integrated_rate, hs});
  CsvWriter per_traj(manifest.add(ctx, "trajectory_stats.csv"), {"trajectory", "jump_count", "integrated_rate"});
  for (std::size_t i = 0; i < result.n_trajectories; ++i) {
    per_traj.row({static_cast<double>(i), static_cast<double>(result.jump_counts[i]), result.integrated_rates[i]});
  }
  detail::write_trajectory_logs(ctx, manifest, result);
  manifest.write(ctx, "jumps");
  detail::note(ctx, "jumps: mean jump count " + detail::fmt(result.mean_jump_count) + ", mean integrated rate " +
                        detail::fmt(result.mean_integrated_rate) + ", hs to master " + detail::fmt(hs));
  return kSuccess;
}

struct NamedTestFunction {
  std::string name;
  Eigen::MatrixXd h;
};

/// Built-in probes for the generator functional: zero, a delta-like spike of
/// weight w0 at the packet center, and a two-node pair one correlation length apart.
inline std::vector<NamedTestFunction> builtin_test_functions(const SimConfig& c, const SpatialGrid& grid) {
  const double dx = grid.spacing();
  const auto n = grid.ssize();
  const auto center = static_cast<Eigen::Index>(std::llround((c.center - grid.x_min()) / dx)) % n;
  const auto lag = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::llround(c.correlation_length / dx)));
  std::vector<NamedTestFunction> out;
  out.push_back({"zero", Eigen::MatrixXd::Zero(1, n)});
  Eigen::MatrixXd spike = Eigen::MatrixXd::Zero(1, n);
  spike(0, center) = c.spike_weight / dx;
  out.push_back({"spike", spike});
  Eigen::MatrixXd pair = Eigen::MatrixXd::Zero(1, n);
  pair(0, center) = 0.5 * c.spike_weight / dx;
  pair(0, (center + lag) % n) = 0.5 * c.spike_weight / dx;
  out.push_back({"two_node", pair});
  return out;
}

inline int command_noise_check(const RunContext& ctx) {
  const SimConfig& c = ctx.config;
  Manifest manifest;
  const SpatialGrid grid = c.density_grid();
  const NoiseModel model = make_noise_model(c.kernel(), grid);
  CsvWriter out(manifest.add(ctx, "generator_check.csv"),
                {"test", "empirical", "closed_form", "std_error", "empirical_imag", "agrees"});
  const auto tests = builtin_test_functions(c, grid);
  for (std::size_t t = 0; t < tests.size(); ++t) {
    RandomStream rng = RandomStream::for_index(c.base_seed, t);
    const GeneratorCheck r = check_generator_functional(model, grid, c.noise_dt, tests[t].h, c.noise_samples, rng);
    out.row_text({tests[t].name, detail::fmt(r.empirical.real()), detail::fmt(r.closed_form), detail::fmt(r.std_error),
                  detail::fmt(r.empirical.imag()), r.agrees ? "1" : "0"});
    detail::note(ctx, "noise-check " + tests[t].name + ": empirical " + detail::fmt(r.empirical.real()) +
                          " closed form " + detail::fmt(r.closed_form));
  }
  manifest.write(ctx, "noise-check");
  return kSuccess;
}

/// Runs the master equation, the jump ensemble and the white-noise ensemble on
/// one config. Jumps are checked against the quadratic kernel, white-noise
/// trajectories against the full periodized kernel they sample.
inline int command_compare(const RunContext& ctx) {
  const SimConfig& c = ctx.config;
  Manifest manifest;
  const NoiseModel model = c.noise_model();
  const bool noiseless = model.a_squared() == 0.0;
  const double free_tolerance = 1e-6;

  const MasterRun quadratic = detail::run_master_reference(ctx, DecoherenceForm::quadratic, false);
  const MasterRun general = detail::run_master_reference(ctx, DecoherenceForm::general_kernel, false);
  const auto init = c.initial_state(c.trajectory_grid());
  const EnsembleResult jumps = run_jump_ensemble(init, c.constants, model, c.total_time, c.dt,
                                                 detail::ensemble_options(ctx, c.base_seed), !c.drift_only);
  const EnsembleResult noise = run_whitenoise_ensemble(init, c.constants, model, c.total_time, c.dt,
                                                       detail::ensemble_options(ctx, mix64(c.base_seed ^ 0x5eedULL)));

  write_density_binary(manifest.add(ctx, "master_quadratic_rho.bin"), quadratic.final_rho);
  write_density_binary(manifest.add(ctx, "master_general_rho.bin"), general.final_rho);
  write_density_binary(manifest.add(ctx, "jump_rho.bin"), jumps.averaged_rho);
  write_density_binary(manifest.add(ctx, "whitenoise_rho.bin"), noise.averaged_rho);

  const std::array<Observable, 2> observables{Observable::position, Observable::momentum_squared};
  CsvWriter report(manifest.add(ctx, "compare_report.csv"),
                   {"pair", "hs_distance", "d_x_mean", "d_p2", "d_purity", "tolerance", "pass"});
  bool all_pass = true;
  auto emit = [&](const std::string& name, const DensityMatrix& a, const DensityMatrix& b, double tolerance) {
    const RouteComparison r = compare_routes(a, b, observables, c.constants);
    const bool pass = r.hs_distance <= tolerance;
    all_pass = all_pass && pass;
    report.row_text({name, detail::fmt(r.hs_distance), detail::fmt(r.deltas[0].second), detail::fmt(r.deltas[1].second),
                     detail::fmt(r.purity_delta), detail::fmt(tolerance), pass ? "1" : "0"});
    detail::note(ctx, "compare " + name + ": hs " + detail::fmt(r.hs_distance) + (pass ? " ok" : " FAILED"));
  };
  emit("jumps_vs_master", jumps.averaged_rho, quadratic.final_rho, noiseless ? free_tolerance : c.jump_tolerance);
  emit("whitenoise_vs_master", noise.averaged_rho, general.final_rho,
       noiseless ? free_tolerance : c.whitenoise_tolerance);
  if (noiseless) emit("jumps_vs_whitenoise", jumps.averaged_rho, noise.averaged_rho, free_tolerance);
  manifest.write(ctx, "compare");
  return all_pass ? kSuccess : kToleranceFailure;
}

inline constexpr std::array<double, 3> kDecomposeEpsilons{1e-3, 5e-4, 2.5e-4};

inline int command_decompose_check(const RunContext& ctx) {
  const SimConfig& c = ctx.config;
  Manifest manifest;
  const SpatialGrid grid = c.density_grid();
  const auto init = c.initial_state(grid);
  if (init.components().size() != 1) {
    throw Error(ErrorKind::Config, "decompose-check needs a pure initial state (initial.form = gaussian)");
  }
  const WaveFunction& psi = init.components().front().state;
  const NoiseModel model = c.noise_model();
  CsvWriter out(manifest.add(ctx, "decompose_check.csv"),
                {"epsilon", "mixing_rate", "dominant_norm", "contaminating_norm", "overlap", "reconstruction_error",
                 "observed_order"});
  bool pass = true;
  double previous_error = 0.0;
  for (std::size_t i = 0; i < kDecomposeEpsilons.size(); ++i) {
    const double eps = kDecomposeEpsilons[i];
    const DecompositionReport r = decompose_step(psi, eps, model, c.constants);
    double order = std::nan("");
    if (i > 0) {
      order = std::log(previous_error / r.reconstruction_error) / std::log(kDecomposeEpsilons[i - 1] / eps);
      pass = pass && std::abs(order - 2.0) <= 0.5;
    } else {
      pass = pass && std::abs(r.dominant_norm - 1.0) <= 1e-5 && std::abs(r.contaminating_norm - 1.0) <= 1e-5 &&
             r.overlap <= 1e-5;
    }
    previous_error = r.reconstruction_error;
    out.row({eps, r.mixing_rate, r.dominant_norm, r.contaminating_norm, r.overlap, r.reconstruction_error, order});
    detail::note(ctx, "decompose eps " + detail::fmt(eps) + ": error " + detail::fmt(r.reconstruction_error));
  }
  manifest.write(ctx, "decompose-check");
  return pass ? kSuccess : kToleranceFailure;
}

/// Maps library failures onto the CLI exit codes.
inline int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::DivergenceDetected:
    case ErrorKind::StepTooCoarse:
    case ErrorKind::DegenerateState:
      return kNumericalDivergence;
    default:
      return kValidationError;
  }
}

}  // namespace ojump::cli
