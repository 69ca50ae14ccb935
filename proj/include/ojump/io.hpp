// Copyright 2026 The ojump Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <string>
#include <type_traits>
#include <vector>

#include "ojump/grid.hpp"

namespace ojump {

// Binary density dump, all little-endian:
//   bytes 0..7    uint64  n_points
//   bytes 8..11   float32 x_min
//   bytes 12..15  float32 x_max
//   then n*n complex entries, row-major rho(x_i, y_j), each as (re, im) float64.
inline constexpr std::size_t kDensityHeaderBytes = 16;

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.insert(out.end(), bytes.begin(), bytes.end());
}

template <class T>
T get_le(const unsigned char* in) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), in, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::vector<unsigned char> encode_density(const DensityMatrix& rho) {
  const auto n = rho.grid.ssize();
  std::vector<unsigned char> out;
  out.reserve(kDensityHeaderBytes + static_cast<std::size_t>(n * n) * 16);
  detail::put_le<std::uint64_t>(out, rho.grid.size());
  detail::put_le<float>(out, static_cast<float>(rho.grid.x_min()));
  detail::put_le<float>(out, static_cast<float>(rho.grid.x_max()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      detail::put_le<double>(out, rho.kernel(i, j).real());
      detail::put_le<double>(out, rho.kernel(i, j).imag());
    }
  }
  return out;
}

inline DensityMatrix decode_density(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kDensityHeaderBytes) throw Error(ErrorKind::Io, "density dump shorter than its header");
  const auto n64 = detail::get_le<std::uint64_t>(bytes.data());
  const auto x_min = detail::get_le<float>(bytes.data() + 8);
  const auto x_max = detail::get_le<float>(bytes.data() + 12);
  if (n64 == 0 || n64 > kMaxDensityPoints) throw Error(ErrorKind::Io, "density dump has an invalid size field");
  const auto n = static_cast<Eigen::Index>(n64);
  if (bytes.size() != kDensityHeaderBytes + static_cast<std::size_t>(n * n) * 16) {
    throw Error(ErrorKind::Io, "density dump length does not match its header");
  }
  DensityMatrix rho(SpatialGrid(n64, x_min, x_max));
  const unsigned char* p = bytes.data() + kDensityHeaderBytes;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j, p += 16) {
      rho.kernel(i, j) = complex(detail::get_le<double>(p), detail::get_le<double>(p + 8));
    }
  }
  return rho;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_density_binary(const std::filesystem::path& path, const DensityMatrix& rho) {
  write_bytes(path, encode_density(rho));
}

inline DensityMatrix read_density_binary(const std::filesystem::path& path) {
  return decode_density(read_bytes(path));
}

/// |rho(x_i, y_j)| as an n x n comma-separated table, one row per x_i, no header.
inline void write_density_abs_csv(const std::filesystem::path& path, const DensityMatrix& rho) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  const auto n = rho.grid.ssize();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j) out << ',';
      out << detail::format_double(std::abs(rho.kernel(i, j)));
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

/// Minimal CSV writer: header on open, full-precision numeric rows.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> columns)
      : path_(path), out_(path, std::ios::trunc), columns_(columns.size()) {
    if (!out_) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    bool first = true;
    for (const auto& c : columns) {
      if (!first) out_ << ',';
      out_ << c;
      first = false;
    }
    out_ << '\n';
  }

  void row(std::initializer_list<double> values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(detail::format_double(v));
    row_text(cells);
  }

  void row_text(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw Error(ErrorKind::Io, "row width differs from header in " + path_.string());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) throw Error(ErrorKind::Io, "short write to " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace ojump
