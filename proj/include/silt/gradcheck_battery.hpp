// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>

namespace silt {

struct BatteryOptions {
    std::string precision = "double";  // "double" | "single"
    double step = 0.0;                 // 0 -> per-precision default
    // max relative error thresholds; 0 -> per-precision defaults
    double primitive_tol = 0.0;
    double loss_tol = 0.0;
};

/// Central-difference checks of every differentiable primitive and of the
/// composite losses. Prints one line per check; returns false when any check
/// exceeds its tolerance.
bool run_gradcheck_battery(const BatteryOptions& opts, std::ostream& out);

}  // namespace silt
