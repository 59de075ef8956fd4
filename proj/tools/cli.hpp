// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace crowdflux::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Entry point of the crowdflux tool: synth, train, detect, eval, report.
/// Returns 0 on success, 1 on a usage error, 2 when the data is at fault.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace crowdflux::cli
