// Copyright 2026 The ojump Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "ojump/noise.hpp"
#include "ojump/rng.hpp"

namespace ojump {
namespace {

const NoiseModel kReference = make_noise_model(CorrelationKernel::gaussian(1.0, 2.0));

struct SampleStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd cov_with_origin;
  double var_origin = 0.0;
};

SampleStats collect(const NoiseModel& model, const SpatialGrid& grid, double dt, std::size_t n, std::uint64_t seed) {
  const PotentialSampler sampler(model, grid, dt);
  RandomStream rng(seed);
  Fft fft;
  Eigen::VectorXd v;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(grid.ssize());
  Eigen::VectorXd cross = Eigen::VectorXd::Zero(grid.ssize());
  for (std::size_t s = 0; s < n; ++s) {
    sampler.sample(rng, fft, v);
    sum += v;
    cross += v[0] * v;
  }
  const double ns = static_cast<double>(n);
  SampleStats st;
  st.mean = sum / ns;
  st.cov_with_origin = (cross - ns * st.mean[0] * st.mean) / (ns - 1.0);
  st.var_origin = st.cov_with_origin[0];
  return st;
}

TEST(CorrelationKernel, GaussianShape) {
  const CorrelationKernel f = CorrelationKernel::gaussian(1.0, 2.0);
  EXPECT_DOUBLE_EQ(f(0.0), 1.0);
  EXPECT_DOUBLE_EQ(f(1.5), f(-1.5));
  EXPECT_NEAR(f(2.0), std::exp(-0.5), 1e-15);
  EXPECT_THROW((void)CorrelationKernel::gaussian(1.0, 0.0), Error);
  EXPECT_THROW((void)CorrelationKernel::gaussian(-1.0, 1.0), Error);
}

TEST(NoiseModel, ReferenceCurvature) {
  EXPECT_DOUBLE_EQ(kReference.a_squared(), 0.25);
  EXPECT_DOUBLE_EQ(kReference.g(0.0), 0.0);
  EXPECT_NEAR(kReference.g(0.1), 1.0 - std::exp(-0.01 / 8.0), 1e-6);
}

TEST(NoiseModel, SmallDisplacementLimit) {
  const double half_a2 = 0.5 * kReference.a_squared();
  for (double r = 0.01; r <= 0.2 + 1e-12; r += 0.01) {
    EXPECT_LE(std::abs(kReference.g(r) - half_a2 * r * r), 0.01 * half_a2 * r * r) << "r = " << r;
  }
}

TEST(TabulatedKernel, RejectsPeakAwayFromOrigin) {
  try {
    (void)CorrelationKernel::tabulated({0.0, 1.0, 2.0}, {0.5, 1.0, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.kind() == ErrorKind::InvalidKernel || e.kind() == ErrorKind::NotPositiveDefinite);
  }
  EXPECT_THROW((void)CorrelationKernel::tabulated({0.5, 1.0}, {1.0, 0.0}), Error);
  EXPECT_THROW((void)CorrelationKernel::tabulated({0.0, 1.0, 1.0}, {1.0, 0.5, 0.0}), Error);
}

TEST(TabulatedKernel, RejectsNonPositiveDefiniteSpectrum) {
  // a flat top with a sharp edge has a sinc-like spectrum with negative lobes
  const CorrelationKernel box = CorrelationKernel::tabulated({0.0, 1.0, 2.0, 2.05}, {1.0, 1.0, 1.0, 0.0});
  try {
    (void)make_noise_model(box, build_grid(128, -10.0, 10.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotPositiveDefinite);
  }
}

TEST(TabulatedKernel, GaussianTableRecoversCurvature) {
  std::vector<double> r, v;
  for (int i = 0; i <= 400; ++i) {
    r.push_back(0.02 * i);
    v.push_back(std::exp(-r.back() * r.back() / 8.0));
  }
  const NoiseModel model = make_noise_model(CorrelationKernel::tabulated(r, v));
  EXPECT_NEAR(model.a_squared(), 0.25, 0.0025);
  for (const double x : r) EXPECT_GE(model.g(x), 0.0);
  EXPECT_DOUBLE_EQ(model.g(0.0), 0.0);
  EXPECT_NEAR(model.f(0.01), std::exp(-0.0001 / 8.0), 2e-5);
  EXPECT_DOUBLE_EQ(model.f(100.0), 0.0);
}

TEST(TabulatedKernel, LoadsCsv) {
  const auto path = std::filesystem::temp_directory_path() / "ojump_kernel_test.csv";
  {
    std::ofstream out(path);
    out << "# gaussian C=1 ell=2\nr,f\n";
    for (int i = 0; i <= 400; ++i) out << 0.02 * i << ',' << std::exp(-(0.02 * i) * (0.02 * i) / 8.0) << '\n';
  }
  const CorrelationKernel f = load_tabulated_kernel(path);
  EXPECT_NEAR(f(1.0), std::exp(-1.0 / 8.0), 1e-4);
  std::filesystem::remove(path);
  EXPECT_THROW((void)load_tabulated_kernel(path), Error);
}

TEST(KernelSpectrum, NonNegative) {
  const Eigen::VectorXd lambda = kernel_spectrum(kReference, build_grid(128, -10.0, 10.0));
  EXPECT_GE(lambda.minCoeff(), 0.0);
}

TEST(PotentialSampler, ZeroMeanAndVariance) {
  const SpatialGrid grid = build_grid(128, -16.0, 16.0);
  const double dt = 0.01;
  const std::size_t n = 5000;
  const SampleStats st = collect(kReference, grid, dt, n, 7);
  const double var = kReference.f_periodic(0.0, grid.length()) / dt;
  const double mean_se = std::sqrt(var / static_cast<double>(n));
  for (Eigen::Index i = 0; i < grid.ssize(); ++i) EXPECT_LE(std::abs(st.mean[i]), 4.0 * mean_se) << "node " << i;
  EXPECT_NEAR(var, 100.0, 1e-9);
  EXPECT_NEAR(st.var_origin, 100.0, 4.0 * 100.0 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST(PotentialSampler, CovarianceAtEveryLag) {
  const SpatialGrid grid = build_grid(128, -16.0, 16.0);
  const double dt = 0.01;
  const std::size_t n = 5000;
  const SampleStats st = collect(kReference, grid, dt, n, 11);
  const double var = kReference.f_periodic(0.0, grid.length()) / dt;
  for (Eigen::Index k = 0; k < grid.ssize(); ++k) {
    const double expected = kReference.f_periodic(static_cast<double>(k) * grid.spacing(), grid.length()) / dt;
    const double se = std::sqrt((var * var + expected * expected) / static_cast<double>(n));
    EXPECT_LE(std::abs(st.cov_with_origin[k] - expected), 5.0 * se) << "lag " << k;
  }
  // one correlation length is 8 nodes here
  const double at_ell = 100.0 * std::exp(-0.5);
  EXPECT_NEAR(at_ell, 60.65, 0.01);
  EXPECT_NEAR(st.cov_with_origin[8], at_ell, 4.0 * std::sqrt((1e4 + at_ell * at_ell) / static_cast<double>(n)));
}

TEST(PotentialSampler, SameSeedSameSample) {
  const SpatialGrid grid = build_grid(64, -10.0, 10.0);
  RandomStream a(42), b(42);
  const PotentialSample sa = sample_potential(kReference, grid, 0.01, a);
  const PotentialSample sb = sample_potential(kReference, grid, 0.01, b);
  ASSERT_EQ(sa.values.size(), sb.values.size());
  EXPECT_EQ(0, std::memcmp(sa.values.data(), sb.values.data(), sizeof(double) * sa.values.size()));
}

TEST(RandomStream, IndexedStreamsDiffer) {
  RandomStream a = RandomStream::for_index(1, 0);
  RandomStream b = RandomStream::for_index(1, 1);
  RandomStream c = RandomStream::for_index(2, 0);
  const double ua = a.uniform(), ub = b.uniform(), uc = c.uniform();
  EXPECT_NE(ua, ub);
  EXPECT_NE(ua, uc);
  EXPECT_GE(ua, 0.0);
  EXPECT_LT(ua, 1.0);
}

TEST(GeneratorFunctional, ZeroTestFunction) {
  const SpatialGrid grid = build_grid(128, -10.0, 10.0);
  RandomStream rng(3);
  const GeneratorCheck r =
      check_generator_functional(kReference, grid, 0.01, Eigen::MatrixXd::Zero(1, grid.ssize()), 100, rng);
  EXPECT_EQ(r.empirical, complex(1.0, 0.0));
  EXPECT_EQ(r.closed_form, 1.0);
  EXPECT_EQ(r.std_error, 0.0);
  EXPECT_TRUE(r.agrees);
}

TEST(GeneratorFunctional, SpikeClosedForm) {
  const SpatialGrid grid = build_grid(128, -10.0, 10.0);
  const double w0 = 10.0, dt = 0.01;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(1, grid.ssize());
  h(0, 64) = w0 / grid.spacing();
  RandomStream rng(5);
  const GeneratorCheck r = check_generator_functional(kReference, grid, dt, h, 5000, rng);
  EXPECT_NEAR(r.closed_form, std::exp(-0.5 * w0 * w0 * kReference.f(0.0) * dt), 1e-12);
  EXPECT_TRUE(r.agrees) << r.empirical << " vs " << r.closed_form;
}

TEST(GeneratorFunctional, SmoothMultiStepFunction) {
  const SpatialGrid grid = build_grid(128, -10.0, 10.0);
  Eigen::MatrixXd h(3, grid.ssize());
  for (Eigen::Index t = 0; t < 3; ++t) {
    for (Eigen::Index i = 0; i < grid.ssize(); ++i) {
      const double x = grid.node(i);
      h(t, i) = (1.0 + 0.5 * static_cast<double>(t)) * std::exp(-x * x / 2.0);
    }
  }
  RandomStream rng(9);
  const GeneratorCheck r = check_generator_functional(kReference, grid, 0.01, h, 5000, rng);
  EXPECT_LE(std::abs(r.empirical - complex(r.closed_form, 0.0)), 4.0 * r.std_error);
  EXPECT_LT(r.closed_form, 1.0);
  EXPECT_GT(r.closed_form, 0.0);
}

TEST(GeneratorFunctional, WidthMismatch) {
  const SpatialGrid grid = build_grid(64, -10.0, 10.0);
  RandomStream rng(1);
  EXPECT_THROW((void)check_generator_functional(kReference, grid, 0.01, Eigen::MatrixXd::Zero(1, 32), 10, rng), Error);
}

}  // namespace
}  // namespace ojump
