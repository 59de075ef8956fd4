// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace crowdflux {

/// Worker count from CROWDFLUX_THREADS (0 or unset means hardware
/// concurrency). `requested` > 0 overrides the environment.
int worker_count(int requested = 0);

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
/// visited exactly once; results must be written to per-index slots.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

}  // namespace crowdflux
