// Copyright 2026 The ojump Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace ojump {

using complex = std::complex<double>;

/// Thin stateful wrapper over Eigen's kissfft backend.
///
/// Forward transform is unscaled, inverse carries the 1/N factor. An instance
/// caches twiddle tables and owns a scratch buffer, so it must not be shared
/// between threads; construct one per worker.
class Fft {
 public:
  void forward(const complex* in, complex* out, Eigen::Index n) { engine_.fwd(out, in, n); }
  void inverse(const complex* in, complex* out, Eigen::Index n) { engine_.inv(out, in, n); }

  void forward_inplace(complex* data, Eigen::Index n) {
    scratch_.assign(data, data + n);
    engine_.fwd(data, scratch_.data(), n);
  }
  void inverse_inplace(complex* data, Eigen::Index n) {
    scratch_.assign(data, data + n);
    engine_.inv(data, scratch_.data(), n);
  }

  void forward_inplace(Eigen::VectorXcd& v) { forward_inplace(v.data(), v.size()); }
  void inverse_inplace(Eigen::VectorXcd& v) { inverse_inplace(v.data(), v.size()); }

  /// v <- IFFT(multiplier .* FFT(v)).
  void apply_spectral(Eigen::VectorXcd& v, const Eigen::VectorXcd& multiplier) {
    apply_spectral(v.data(), multiplier);
  }

  void apply_spectral(complex* data, const Eigen::VectorXcd& multiplier) {
    const Eigen::Index n = multiplier.size();
    scratch_.assign(data, data + n);
    engine_.fwd(data, scratch_.data(), n);
    for (Eigen::Index i = 0; i < n; ++i) data[i] *= multiplier[i];
    scratch_.assign(data, data + n);
    engine_.inv(data, scratch_.data(), n);
  }

  /// Applies the spectral multiplier to every column of a column-major matrix.
  void apply_spectral_columns(Eigen::MatrixXcd& m, const Eigen::VectorXcd& multiplier) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) apply_spectral(m.col(j).data(), multiplier);
  }

 private:
  Eigen::FFT<double> engine_;
  std::vector<complex> scratch_;
};

}  // namespace ojump
