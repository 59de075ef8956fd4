// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

// The distro benchmark_main archive carries LTO bytecode from another
// compiler build, so the entry point lives here.
#include <benchmark/benchmark.h>

BENCHMARK_MAIN();
