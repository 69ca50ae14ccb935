// Copyright 2026 The ojump Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ojump {

enum class ErrorKind {
  NonPowerOfTwo,
  InvalidGrid,
  GridTooLarge,
  GridMismatch,
  ZeroNorm,
  DegenerateState,
  UnknownObservable,
  InvalidKernel,
  NotPositiveDefinite,
  StepTooCoarse,
  DivergenceDetected,
  InvalidArgument,
  Config,
  Io,
};

constexpr const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NonPowerOfTwo: return "NonPowerOfTwo";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::GridTooLarge: return "GridTooLarge";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::ZeroNorm: return "ZeroNorm";
    case ErrorKind::DegenerateState: return "DegenerateState";
    case ErrorKind::UnknownObservable: return "UnknownObservable";
    case ErrorKind::InvalidKernel: return "InvalidKernel";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::StepTooCoarse: return "StepTooCoarse";
    case ErrorKind::DivergenceDetected: return "DivergenceDetected";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ojump
