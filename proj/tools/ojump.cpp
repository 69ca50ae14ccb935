// Copyright 2026 The ojump Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "ojump_cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return ojump::cli::run_cli(args, std::cout, std::cerr);
}
