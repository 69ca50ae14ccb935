// Copyright 2026 The ojump Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "ojump/unravel.hpp"
#include "oracles.hpp"

namespace ojump {
namespace {

const PhysicalConstants kUnits;
const SpatialGrid kGrid = build_grid(256, -10.0, 10.0);
const NoiseModel kReference = make_noise_model(CorrelationKernel::gaussian(1.0, 2.0));
const NoiseModel kUnitA = make_noise_model(CorrelationKernel::gaussian(1.0, 1.0));
const NoiseModel kSilent = make_noise_model(CorrelationKernel::gaussian(0.0, 2.0));

/// Random superposition of a few packets plus node-level noise, normalized.
WaveFunction random_state(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> center(-3.0, 3.0), width(0.2, 2.0), k(-3.0, 3.0), unit(-1.0, 1.0);
  WaveFunction psi(kGrid);
  for (int p = 0; p < 3; ++p) {
    const WaveFunction g = gaussian_packet(kGrid, center(gen), width(gen), k(gen));
    psi.amplitudes += complex(unit(gen), unit(gen)) * g.amplitudes;
  }
  for (Eigen::Index i = 0; i < psi.amplitudes.size(); ++i) {
    const double envelope = std::exp(-0.1 * kGrid.node(i) * kGrid.node(i));
    psi.amplitudes[i] += 0.05 * envelope * complex(unit(gen), unit(gen));
  }
  return normalize(psi);
}

TEST(JumpRate, DirectSubstitution) {
  MomentSet m;
  m.variance = 0.5;
  EXPECT_DOUBLE_EQ(jump_rate(m, 1.0, kUnits), 0.5);
  EXPECT_DOUBLE_EQ(jump_rate(m, 0.25, kUnits), 0.125);
  EXPECT_DOUBLE_EQ(jump_rate(m, 0.0, kUnits), 0.0);
  const WaveFunction psi = gaussian_packet(kGrid, 0.0, 0.5);
  EXPECT_NEAR(jump_rate(psi, kUnitA, kUnits), 0.5, 1e-6);
  EXPECT_NEAR(jump_rate(psi, kReference, kUnits), 0.125, 1e-6);
  EXPECT_EQ(jump_rate(psi, kSilent, kUnits), 0.0);
}

TEST(JumpRate, PhaseAndTranslationInvariant) {
  const WaveFunction psi = gaussian_packet(kGrid, -1.0, 0.6, 0.8);
  const double w = jump_rate(psi, kReference, kUnits);
  WaveFunction rotated = psi;
  rotated.amplitudes *= std::polar(1.0, 2.0);
  EXPECT_NEAR(jump_rate(rotated, kReference, kUnits), w, 1e-10);
  WaveFunction shifted(kGrid);
  const Eigen::Index n = kGrid.ssize();
  for (Eigen::Index i = 0; i < n; ++i) shifted.amplitudes[(i + 37) % n] = psi.amplitudes[i];
  EXPECT_NEAR(jump_rate(shifted, kReference, kUnits), w, 1e-10);
}

TEST(ApplyJump, OddPartnerOfGaussian) {
  const WaveFunction psi = gaussian_packet(kGrid, 0.0, 0.5);
  const WaveFunction once = apply_jump(psi);
  EXPECT_LE(std::abs(inner_product(once, psi)), 1e-10);
  EXPECT_NEAR(norm(once), 1.0, 1e-10);
  const WaveFunction twice = apply_jump(once);
  EXPECT_NEAR(norm(twice), 1.0, 1e-10);
  EXPECT_LE(std::abs(inner_product(twice, once)), 1e-10);
}

TEST(ApplyJump, RandomizedStates) {
  std::mt19937_64 gen(2026);
  for (int trial = 0; trial < 100; ++trial) {
    const WaveFunction psi = random_state(gen);
    const WaveFunction out = apply_jump(psi);
    EXPECT_LE(std::abs(inner_product(out, psi)), 1e-10) << "trial " << trial;
    EXPECT_LE(std::abs(norm(out) - 1.0), 1e-10) << "trial " << trial;
  }
}

TEST(NonlinearDrift, FreeSpreading) {
  const double dt = 0.005;
  WaveFunction psi = gaussian_packet(kGrid, 0.0, 0.5);
  for (int step = 1; step <= 400; ++step) {
    psi = nonlinear_drift_step(psi, kUnits, kSilent, dt);
    if (step % 40 == 0) {
      const double expected = oracle::free_spreading(0.5, dt * step);
      EXPECT_NEAR(moments(psi).variance, expected, 0.005 * expected) << "step " << step;
    }
  }
}

TEST(NonlinearDrift, ParityAndNorm) {
  WaveFunction psi = gaussian_packet(kGrid, 0.0, 0.5);
  // the grid has no node at +10, so mirror symmetry is about node 128 (x = 0)
  for (int step = 0; step < 100; ++step) {
    psi = nonlinear_drift_step(psi, kUnits, kUnitA, 0.01);
    EXPECT_LE(std::abs(moments(psi).x_mean), 1e-8) << "step " << step;
    EXPECT_NEAR(norm(psi), 1.0, 1e-12);
  }
}

TEST(NonlinearDrift, MeanFollowsMomentum) {
  const double dt = 0.005;
  TrajectoryStepper stepper(kGrid, kUnits, kReference.a_squared(), dt, false);
  Eigen::VectorXcd psi = gaussian_packet(kGrid, -1.0, 0.5, 1.5).amplitudes;
  std::vector<double> x;
  std::vector<double> p;
  for (int step = 0; step <= 200; ++step) {
    const WaveFunction w(kGrid, psi);
    x.push_back(moments(w).x_mean);
    p.push_back(expectation(pure_density(w), Observable::momentum, kUnits));
    stepper.drift(psi);
  }
  for (std::size_t k = 1; k + 1 < x.size(); k += 25) {
    const double dxdt = (x[k + 1] - x[k - 1]) / (2.0 * dt);
    EXPECT_NEAR(dxdt, p[k] / kUnits.mass, 0.01 * std::abs(p[k])) << "step " << k;
  }
}

TEST(NonlinearDrift, StationaryWidthMatchesGaussianAnsatz) {
  const double dt = 0.005, total = 20.0;
  TrajectoryStepper stepper(kGrid, kUnits, kReference.a_squared(), dt, false);
  Eigen::VectorXcd psi = gaussian_packet(kGrid, 0.0, 0.5).amplitudes;
  const auto steps = static_cast<int>(std::llround(total / dt));
  for (int s = 0; s < steps; ++s) stepper.drift(psi);
  const double width = moments(WaveFunction(kGrid, psi)).variance;
  const double ansatz = oracle::drift_only_width(0.5, kReference.a_squared(), total);
  // stationary point of the ansatz: Re a = sqrt(A^2 m / 8 hbar^3)
  EXPECT_NEAR(ansatz, 1.0 / (4.0 * std::sqrt(0.25 / 8.0)), 1e-3);
  EXPECT_NEAR(width, ansatz, 0.05 * ansatz);
  EXPECT_LT(width, 5.0);
}

TEST(StepTrajectory, SilentNoiseNeverJumps) {
  RandomStream rng(1);
  WaveFunction psi = gaussian_packet(kGrid, 0.0, 0.5);
  for (int s = 0; s < 200; ++s) {
    const StepOutcome out = step_trajectory(psi, kUnits, kSilent, 0.01, rng);
    EXPECT_FALSE(out.jumped);
    psi = out.state;
  }
}

TEST(StepTrajectory, SameSeedSameBits) {
  const WaveFunction psi0 = gaussian_packet(kGrid, 0.0, 0.5);
  auto run = [&] {
    RandomStream rng(77);
    return run_trajectory(psi0, kUnits, kUnitA, 1.0, 0.01, rng).final_state.amplitudes;
  };
  const Eigen::VectorXcd a = run();
  const Eigen::VectorXcd b = run();
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(complex) * static_cast<std::size_t>(a.size())));
}

TEST(StepTrajectory, BernoulliJumpFraction) {
  // A = 1, sigma^2 = 0.5, dt = 0.1 gives w dt = 0.05
  const WaveFunction psi = gaussian_packet(kGrid, 0.0, 0.5);
  const double p = jump_rate(psi, kUnitA, kUnits) * 0.1;
  ASSERT_NEAR(p, 0.05, 1e-6);
  const std::size_t trials = 2000;
  std::size_t jumps = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    RandomStream rng = RandomStream::for_index(5, i);
    if (step_trajectory(psi, kUnits, kUnitA, 0.1, rng).jumped) ++jumps;
  }
  const double fraction = static_cast<double>(jumps) / static_cast<double>(trials);
  EXPECT_NEAR(fraction, 0.05, oracle::bernoulli_band(0.05, trials));
}

TEST(StepTrajectory, DriftAfterJumpIsNotGuarded) {
  // a jump triples the variance, so w dt after the jump may exceed the pre-jump bound
  const WaveFunction psi = apply_jump(gaussian_packet(kGrid, 0.0, 0.5));
  EXPECT_NEAR(jump_rate(psi, kUnitA, kUnits) * 0.1, 0.15, 1e-6);
  const WaveFunction out = nonlinear_drift_step(psi, kUnits, kUnitA, 0.1);
  EXPECT_NEAR(norm(out), 1.0, 1e-12);
}

TEST(StepTrajectory, CoarseStepRejected) {
  const WaveFunction psi = gaussian_packet(kGrid, 0.0, 0.5);
  RandomStream rng(1);
  try {
    (void)step_trajectory(psi, kUnits, kUnitA, 0.5, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StepTooCoarse);
  }
}

TEST(RunTrajectory, SilentNoiseIsFreeEvolution) {
  RandomStream rng(3);
  const TrajectoryRecord rec = run_trajectory(gaussian_packet(kGrid, 0.0, 0.5), kUnits, kSilent, 2.0, 0.005, rng, 40);
  EXPECT_TRUE(rec.jumps.empty());
  EXPECT_EQ(rec.integrated_rate, 0.0);
  for (const auto& s : rec.series) {
    const double expected = oracle::free_spreading(0.5, s.t);
    EXPECT_NEAR(s.x_var, expected, 0.005 * expected) << "t = " << s.t;
    EXPECT_NEAR(s.norm, 1.0, 1e-12);
  }
  EXPECT_DOUBLE_EQ(rec.series.back().t, 2.0);
}

TEST(RunTrajectory, JumpRecordsCarryPreJumpRate) {
  RandomStream rng(12);
  const TrajectoryRecord rec = run_trajectory(gaussian_packet(kGrid, 0.0, 0.5), kUnits, kUnitA, 2.0, 0.01, rng, 10);
  EXPECT_GT(rec.integrated_rate, 0.0);
  for (const auto& j : rec.jumps) {
    EXPECT_DOUBLE_EQ(j.rate_at_jump, jump_rate(j.pre_moments, 1.0, kUnits));
    EXPECT_GE(j.time, 0.0);
    EXPECT_LT(j.time, 2.0);
  }
}

TEST(DecomposeStep, BranchesAreNormalizedAndOrthogonal) {
  const WaveFunction psi = gaussian_packet(kGrid, 0.0, 0.5);
  const DecompositionReport r = decompose_step(psi, 1e-3, kReference, kUnits);
  EXPECT_DOUBLE_EQ(r.mixing_rate, jump_rate(psi, kReference, kUnits));
  EXPECT_LE(std::abs(r.dominant_norm - 1.0), 1e-5);
  EXPECT_LE(std::abs(r.contaminating_norm - 1.0), 1e-5);
  EXPECT_LE(r.overlap, 1e-5);
}

TEST(DecomposeStep, MovingPacketOverlapIsFirstOrder) {
  // the kinetic part of the dominant branch leaves <dom, cont> = eps <p> / (2 m sigma)
  const double k0 = 0.5, eps = 1e-3;
  const DecompositionReport r = decompose_step(gaussian_packet(kGrid, 0.0, 0.5, k0), eps, kReference, kUnits);
  const double expected = eps * kUnits.hbar * k0 / (2.0 * kUnits.mass * std::sqrt(0.5));
  EXPECT_NEAR(r.overlap, expected, 1e-3 * expected);
  EXPECT_LE(std::abs(r.dominant_norm - 1.0), 1e-5);
}

TEST(DecomposeStep, ReconstructionIsSecondOrder) {
  const WaveFunction psi = gaussian_packet(build_grid(128, -10.0, 10.0), 0.3, 0.5, 0.5);
  const double coarse = decompose_step(psi, 1e-3, kReference, kUnits).reconstruction_error;
  const double fine = decompose_step(psi, 5e-4, kReference, kUnits).reconstruction_error;
  const double ratio = coarse / fine;
  EXPECT_GE(ratio, 3.0);
  EXPECT_LE(ratio, 5.0);
}

TEST(DecomposeStep, RejectsLargeEpsilon) {
  const WaveFunction psi = gaussian_packet(kGrid, 0.0, 0.5);
  EXPECT_THROW((void)decompose_step(psi, 1.0, kUnitA, kUnits), Error);
}

}  // namespace
}  // namespace ojump
