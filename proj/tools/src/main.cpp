// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "celebbasis_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return celeb::cli::run_cli(args, std::cout, std::cerr);
}
