// Copyright 2026 The ojump Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ojump/ensemble.hpp"
#include "ojump/error.hpp"
#include "ojump/grid.hpp"
#include "ojump/io.hpp"
#include "ojump/master.hpp"
#include "ojump/noise.hpp"

namespace ojump {

/// Sectioned key = value text. '#' and ';' start comments. Every key must be
/// consumed by the reader; leftovers are reported with their line number.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text, std::string origin = "<config>") {
    ConfigFile file;
    file.origin_ = std::move(origin);
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string line = strip_comment(raw);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) file.fail(line_no, "malformed section header '" + line + "'");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) file.fail(line_no, "expected 'key = value', got '" + line + "'");
      if (section.empty()) file.fail(line_no, "key outside of any [section]");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) file.fail(line_no, "empty key");
      const std::string full = section + "." + key;
      if (file.entries_.count(full)) {
        file.fail(line_no, "duplicate key '" + full + "' (first set on line " +
                               std::to_string(file.entries_.at(full).line) + ")");
      }
      file.entries_[full] = Entry{value, line_no, false};
    }
    return file;
  }

  static ConfigFile load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path.string());
  }

  [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::optional<std::string> text(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    it->second.used = true;
    return it->second.value;
  }

  double number(const std::string& key, double fallback) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.used = true;
    const std::string& v = it->second.value;
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
      fail(it->second.line, key + ": '" + v + "' is not a finite number");
    }
    return out;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.used = true;
    const std::string& v = it->second.value;
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      fail(it->second.line, key + ": '" + v + "' is not a non-negative integer");
    }
    return out;
  }

  bool boolean(const std::string& key, bool fallback) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.used = true;
    const std::string& v = it->second.value;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(it->second.line, key + ": '" + v + "' is not a boolean");
  }

  std::vector<double> number_list(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return {};
    it->second.used = true;
    std::vector<double> out;
    std::string item;
    std::istringstream in(it->second.value);
    while (std::getline(in, item, ',')) {
      item = trim(item);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || !std::isfinite(v)) {
        fail(it->second.line, key + ": '" + item + "' is not a finite number");
      }
      out.push_back(v);
    }
    return out;
  }

  /// Throws for the first key no reader asked for.
  void reject_unknown() const {
    const Entry* first = nullptr;
    std::string name;
    for (const auto& [key, entry] : entries_) {
      if (!entry.used && (first == nullptr || entry.line < first->line)) {
        first = &entry;
        name = key;
      }
    }
    if (first) fail(first->line, "unknown key '" + name + "'");
  }

  [[noreturn]] void fail(int line, const std::string& message) const {
    throw Error(ErrorKind::Config, origin_ + ":" + std::to_string(line) + ": " + message);
  }

  /// Error for a key that exists; falls back to the file name alone when absent.
  [[noreturn]] void fail_key(const std::string& key, const std::string& message) const {
    auto it = entries_.find(key);
    if (it != entries_.end()) fail(it->second.line, key + ": " + message);
    throw Error(ErrorKind::Config, origin_ + ": " + key + ": " + message);
  }

  [[nodiscard]] const std::string& origin() const noexcept { return origin_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
  };

  static std::string strip_comment(const std::string& s) {
    const auto pos = s.find_first_of("#;");
    return pos == std::string::npos ? s : s.substr(0, pos);
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::string origin_;
  std::map<std::string, Entry> entries_;
};

enum class NoiseForm { gaussian, tabulated };
enum class InitialForm { gaussian, mixture };

/// Resolved simulation configuration; every field carries its default.
struct SimConfig {
  PhysicalConstants constants;

  std::size_t n_points = 128;
  double x_min = -10.0;
  double x_max = 10.0;
  std::size_t trajectory_points = 256;

  NoiseForm noise_form = NoiseForm::gaussian;
  double amplitude = 1.0;
  double correlation_length = 2.0;
  std::filesystem::path table_path;
  DecoherenceForm master_kernel = DecoherenceForm::quadratic;

  InitialForm initial_form = InitialForm::gaussian;
  double center = 0.0;
  double sigma2 = 0.5;
  double k0 = 0.0;
  /// Weights of Hermite functions of order 0, 1, ... around (center, sigma2).
  std::vector<double> mixture_weights;

  double dt = 0.005;
  double total_time = 2.0;
  std::size_t record_every = 10;

  std::size_t n_traj = 2000;
  std::uint64_t base_seed = 1;

  bool frozen_kinetic = false;
  bool drift_only = false;

  std::size_t noise_samples = 5000;
  double noise_dt = 0.01;
  double spike_weight = 10.0;

  double jump_tolerance = 0.05;
  double whitenoise_tolerance = 0.08;

  [[nodiscard]] SpatialGrid density_grid() const { return SpatialGrid(n_points, x_min, x_max); }
  [[nodiscard]] SpatialGrid trajectory_grid() const { return SpatialGrid(trajectory_points, x_min, x_max); }
  [[nodiscard]] std::size_t n_steps() const { return static_cast<std::size_t>(std::llround(total_time / dt)); }

  [[nodiscard]] CorrelationKernel kernel() const {
    if (noise_form == NoiseForm::tabulated) return load_tabulated_kernel(table_path);
    return CorrelationKernel::gaussian(amplitude, correlation_length);
  }

  [[nodiscard]] NoiseModel noise_model() const { return make_noise_model(kernel()); }

  [[nodiscard]] MixedInitialState initial_state(const SpatialGrid& grid) const {
    if (initial_form == InitialForm::gaussian) return MixedInitialState::pure(gaussian_packet(grid, center, sigma2, k0));
    std::vector<MixtureComponent> parts;
    for (std::size_t r = 0; r < mixture_weights.size(); ++r) {
      WaveFunction h = hermite_function(grid, static_cast<int>(r), center, sigma2);
      if (k0 != 0.0) {
        for (Eigen::Index i = 0; i < h.amplitudes.size(); ++i) {
          h.amplitudes[i] *= std::polar(1.0, k0 * (grid.node(i) - center));
        }
      }
      parts.push_back({mixture_weights[r], std::move(h)});
    }
    return MixedInitialState(std::move(parts));
  }
};

namespace detail {

inline std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace detail

/// Parses and validates. Any problem raises ErrorKind::Config naming the file,
/// line and key, before anything is simulated.
inline SimConfig parse_config(ConfigFile& file, const std::filesystem::path& base_dir = {}) {
  SimConfig c;
  c.constants.hbar = file.number("constants.hbar", c.constants.hbar);
  c.constants.mass = file.number("constants.mass", c.constants.mass);

  c.n_points = file.unsigned_integer("grid.n_points", c.n_points);
  c.x_min = file.number("grid.x_min", c.x_min);
  c.x_max = file.number("grid.x_max", c.x_max);
  c.trajectory_points = file.unsigned_integer("grid.trajectory_points", c.trajectory_points);

  if (auto form = file.text("noise.form")) {
    if (*form == "gaussian") c.noise_form = NoiseForm::gaussian;
    else if (*form == "tabulated") c.noise_form = NoiseForm::tabulated;
    else file.fail_key("noise.form", "expected 'gaussian' or 'tabulated'");
  }
  c.correlation_length = file.number("noise.ell", c.correlation_length);
  const bool has_c = file.has("noise.C");
  const bool has_a2 = file.has("noise.A_squared");
  if (has_c && has_a2) file.fail_key("noise.A_squared", "give either noise.C or noise.A_squared, not both");
  c.amplitude = file.number("noise.C", c.amplitude);
  if (has_a2) {
    const double a2 = file.number("noise.A_squared", 0.0);
    if (a2 < 0.0) file.fail_key("noise.A_squared", "must be non-negative");
    c.amplitude = a2 * c.correlation_length * c.correlation_length;
  }
  if (auto table = file.text("noise.table")) {
    c.table_path = std::filesystem::path(*table);
    if (c.table_path.is_relative() && !base_dir.empty()) c.table_path = base_dir / c.table_path;
  }
  if (auto kernel = file.text("master.kernel")) {
    if (*kernel == "quadratic") c.master_kernel = DecoherenceForm::quadratic;
    else if (*kernel == "general") c.master_kernel = DecoherenceForm::general_kernel;
    else file.fail_key("master.kernel", "expected 'quadratic' or 'general'");
  }

  if (auto form = file.text("initial.form")) {
    if (*form == "gaussian") c.initial_form = InitialForm::gaussian;
    else if (*form == "mixture") c.initial_form = InitialForm::mixture;
    else file.fail_key("initial.form", "expected 'gaussian' or 'mixture'");
  }
  c.center = file.number("initial.center", c.center);
  c.sigma2 = file.number("initial.sigma2", c.sigma2);
  c.k0 = file.number("initial.k0", c.k0);
  c.mixture_weights = file.number_list("initial.weights");

  c.dt = file.number("run.dt", c.dt);
  c.total_time = file.number("run.T", c.total_time);
  c.record_every = file.unsigned_integer("run.record_every", c.record_every);

  c.n_traj = file.unsigned_integer("ensemble.n_traj", c.n_traj);
  c.base_seed = file.unsigned_integer("ensemble.base_seed", c.base_seed);

  c.frozen_kinetic = file.boolean("mode.frozen_kinetic", c.frozen_kinetic);
  c.drift_only = file.boolean("mode.drift_only", c.drift_only);

  c.noise_samples = file.unsigned_integer("noise_check.n_samples", c.noise_samples);
  c.noise_dt = file.number("noise_check.dt", c.noise_dt);
  c.spike_weight = file.number("noise_check.spike_weight", c.spike_weight);

  c.jump_tolerance = file.number("tolerance.jumps", c.jump_tolerance);
  c.whitenoise_tolerance = file.number("tolerance.whitenoise", c.whitenoise_tolerance);

  file.reject_unknown();

  // semantic checks, reported against the offending key
  auto guard = [&](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config) throw;
      file.fail_key(key, e.what());
    }
  };
  guard("constants.hbar", [&] { c.constants.validate(); });
  guard("grid.n_points", [&] { (void)c.density_grid(); });
  if (c.n_points > kMaxDensityPoints) file.fail_key("grid.n_points", "density grids are limited to 512 points");
  guard("grid.trajectory_points", [&] { (void)c.trajectory_grid(); });
  if (c.noise_form == NoiseForm::tabulated && c.table_path.empty()) {
    file.fail_key("noise.form", "tabulated kernels need noise.table");
  }
  guard(c.noise_form == NoiseForm::tabulated ? "noise.table" : "noise.C", [&] {
    const NoiseModel model = c.noise_model();
    (void)kernel_spectrum(model, c.density_grid());
    (void)kernel_spectrum(model, c.trajectory_grid());
  });
  if (!(c.sigma2 > 0.0)) file.fail_key("initial.sigma2", "must be positive");
  if (c.initial_form == InitialForm::mixture) {
    if (c.mixture_weights.empty()) file.fail_key("initial.form", "mixture needs initial.weights");
    guard("initial.weights", [&] { (void)c.initial_state(c.density_grid()); });
  } else if (!c.mixture_weights.empty()) {
    file.fail_key("initial.weights", "weights only apply to initial.form = mixture");
  }
  if (!(c.dt > 0.0)) file.fail_key("run.dt", "must be positive");
  if (!(c.total_time > 0.0)) file.fail_key("run.T", "must be positive");
  if (c.n_steps() == 0) file.fail_key("run.T", "shorter than one step");
  if (c.record_every == 0) file.fail_key("run.record_every", "must be at least 1");
  if (c.n_traj == 0) file.fail_key("ensemble.n_traj", "must be at least 1");
  if (c.noise_samples < 2) file.fail_key("noise_check.n_samples", "must be at least 2");
  if (!(c.noise_dt > 0.0)) file.fail_key("noise_check.dt", "must be positive");
  if (!(c.jump_tolerance > 0.0)) file.fail_key("tolerance.jumps", "must be positive");
  if (!(c.whitenoise_tolerance > 0.0)) file.fail_key("tolerance.whitenoise", "must be positive");

  double a2 = 0.0;
  guard("noise.C", [&] { a2 = c.noise_model().a_squared(); });
  const double step_rate = a2 * c.sigma2 * c.dt / (c.constants.hbar * c.constants.hbar);
  if (step_rate > kMaxStepRate) {
    file.fail_key("run.dt", "A^2 sigma0^2 dt / hbar^2 = " + detail::format_double(step_rate) + " exceeds 0.1");
  }
  return c;
}

inline SimConfig parse_config_text(std::string_view text, const std::string& origin = "<config>") {
  ConfigFile file = ConfigFile::parse(text, origin);
  return parse_config(file);
}

inline SimConfig load_config(const std::filesystem::path& path) {
  ConfigFile file = ConfigFile::load(path);
  return parse_config(file, path.parent_path());
}

/// The resolved configuration in the same sectioned format.
inline std::string describe(const SimConfig& c) {
  using detail::format_double;
  std::ostringstream out;
  out << "[constants]\nhbar = " << format_double(c.constants.hbar) << "\nmass = " << format_double(c.constants.mass)
      << "\n\n[grid]\nn_points = " << c.n_points << "\nx_min = " << format_double(c.x_min)
      << "\nx_max = " << format_double(c.x_max) << "\ntrajectory_points = " << c.trajectory_points << "\n\n[noise]\n";
  if (c.noise_form == NoiseForm::gaussian) {
    out << "form = gaussian\nC = " << format_double(c.amplitude) << "\nell = " << format_double(c.correlation_length)
        << "\n";
  } else {
    out << "form = tabulated\ntable = " << c.table_path.string() << "\n";
  }
  out << "\n[master]\nkernel = " << (c.master_kernel == DecoherenceForm::quadratic ? "quadratic" : "general")
      << "\n\n[initial]\nform = " << (c.initial_form == InitialForm::gaussian ? "gaussian" : "mixture")
      << "\ncenter = " << format_double(c.center) << "\nsigma2 = " << format_double(c.sigma2)
      << "\nk0 = " << format_double(c.k0) << "\n";
  if (c.initial_form == InitialForm::mixture) out << "weights = " << detail::format_list(c.mixture_weights) << "\n";
  out << "\n[run]\ndt = " << format_double(c.dt) << "\nT = " << format_double(c.total_time)
      << "\nrecord_every = " << c.record_every << "\n\n[ensemble]\nn_traj = " << c.n_traj
      << "\nbase_seed = " << c.base_seed << "\n\n[mode]\nfrozen_kinetic = " << (c.frozen_kinetic ? "true" : "false")
      << "\ndrift_only = " << (c.drift_only ? "true" : "false") << "\n\n[noise_check]\nn_samples = " << c.noise_samples
      << "\ndt = " << format_double(c.noise_dt) << "\nspike_weight = " << format_double(c.spike_weight)
      << "\n\n[tolerance]\njumps = " << format_double(c.jump_tolerance)
      << "\nwhitenoise = " << format_double(c.whitenoise_tolerance) << "\n";
  return out.str();
}

}  // namespace ojump
