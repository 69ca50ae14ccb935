// Copyright 2026 The ojump Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ojump/commands.hpp"

namespace ojump::cli {

/// Parses the command line, validates the config, runs one subcommand and
/// returns its exit code. Nothing is simulated unless validation succeeds.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum particle in a white-noise potential: master equation, orthogonal-jump "
               "unraveling and sampled-potential trajectories"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());

  const std::map<std::string, std::function<int(const RunContext&)>> commands{
      {"master", command_master},
      {"jumps", command_jumps},
      {"noise-check", command_noise_check},
      {"compare", command_compare},
      {"decompose-check", command_decompose_check},
  };
  const std::map<std::string, std::string> help{
      {"master", "evolve the density matrix under the master equation"},
      {"jumps", "average the orthogonal-jump process over many trajectories"},
      {"noise-check", "validate the potential sampler against its characteristic functional"},
      {"compare", "run all three routes and check they agree"},
      {"decompose-check", "check the one-step two-branch decomposition"},
  };
  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--out-dir", out_dir, "directory for all outputs")->required();
    sub->add_option("--seed", seed, "base seed, overrides ensemble.base_seed");
    sub->add_option("--threads", threads, "worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kValidationError;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  RunContext ctx;
  try {
    ctx.config = load_config(config_path);
    if (seed) ctx.config.base_seed = *seed;
    ctx.out_dir = out_dir;
    std::filesystem::create_directories(ctx.out_dir);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }
  ctx.threads = threads;
  ctx.log = &out;

  try {
    return commands.at(name)(ctx);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }
}

}  // namespace ojump::cli
