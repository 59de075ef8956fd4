// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return crowdflux::cli::cli_main(argc, argv, std::cout, std::cerr); }
