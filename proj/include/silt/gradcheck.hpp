// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "silt/graph.hpp"
#include "silt/tensor.hpp"

namespace silt {

struct GradCheckBlock {
    std::string name;
    double max_rel_err = 0.0;
    int64_t coords_checked = 0;
    int64_t worst_coord = -1;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckBlock> blocks;
    double step = 0.0;
    std::string precision;  // "single" | "double"
    double max_rel_err() const;
    std::string to_string() const;
};

struct GradCheckOptions {
    // Central differences cost two evaluations per coordinate; large blocks
    // are checked on a seeded coordinate sample instead of exhaustively.
    int64_t max_coords_per_block = 256;
    uint64_t sample_seed = 0;
    double eps_div = 1e-12;
};

/// Central-difference check of a scalar-valued function against the tape
/// gradient. `f` must build the function on the given graph from the leaves.
/// Throws on a non-scalar output or when a non-finite value is encountered.
template <typename T>
GradCheckReport grad_check(
    const std::function<Var<T>(Graph<T>&, const std::vector<Var<T>>&)>& f,
    const std::vector<Tensor<T>>& point, const std::vector<std::string>& block_names, T step,
    const GradCheckOptions& opts = {});

}  // namespace silt
